//! Raw text ingestion, preprocessing recipes and shuffled control texts.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default byte used to mark word borders in byte-level texts (ASCII unit separator).
pub const DEFAULT_BOUNDARY_MARKER: u8 = 0x1f;

/// Default document delimiter: one blank line.
pub const DEFAULT_DOCUMENT_DELIMITER: &str = "\n\n";

/// Default relative-frequency cutoff for [`filter_rare_symbols`].
pub const DEFAULT_RARE_SYMBOL_CUTOFF: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    Unicode,
    Byte,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextContent {
    Unicode(String),
    Bytes(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawText {
    content: TextContent,
    source_id: String,
}

impl RawText {
    pub fn unicode(content: impl Into<String>, source_id: impl Into<String>) -> Result<Self> {
        let content = content.into();
        if content.is_empty() {
            return Err(Error::EmptyCorpus(None));
        }
        Ok(Self {
            content: TextContent::Unicode(content),
            source_id: source_id.into(),
        })
    }

    pub fn bytes(content: impl Into<Vec<u8>>, source_id: impl Into<String>) -> Result<Self> {
        let content = content.into();
        if content.is_empty() {
            return Err(Error::EmptyCorpus(None));
        }
        Ok(Self {
            content: TextContent::Bytes(content),
            source_id: source_id.into(),
        })
    }

    /// Reads a file verbatim. Unicode mode requires valid UTF-8.
    pub fn read(path: impl AsRef<Path>, mode: EncodingMode) -> Result<Self> {
        let path = path.as_ref();
        let data = fs::read(path).map_err(|e| Error::file(path, e))?;
        let id = path.display().to_string();
        match mode {
            EncodingMode::Byte => Self::bytes(data, id),
            EncodingMode::Unicode => {
                let text = String::from_utf8(data).map_err(|e| {
                    Error::file(
                        path,
                        std::io::Error::new(std::io::ErrorKind::InvalidData, e.utf8_error()),
                    )
                })?;
                Self::unicode(text, id)
            }
        }
    }

    pub fn content(&self) -> &TextContent {
        &self.content
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn with_source_id(mut self, id: impl Into<String>) -> Self {
        self.source_id = id.into();
        self
    }

    pub fn encoding_mode(&self) -> EncodingMode {
        match self.content {
            TextContent::Unicode(_) => EncodingMode::Unicode,
            TextContent::Bytes(_) => EncodingMode::Byte,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match &self.content {
            TextContent::Unicode(s) => Some(s),
            TextContent::Bytes(_) => None,
        }
    }

    /// The on-disk representation: UTF-8 for unicode texts, raw bytes otherwise.
    pub fn as_bytes(&self) -> &[u8] {
        match &self.content {
            TextContent::Unicode(s) => s.as_bytes(),
            TextContent::Bytes(b) => b,
        }
    }

    /// Length in characters (unicode) or bytes (byte mode).
    pub fn len(&self) -> usize {
        match &self.content {
            TextContent::Unicode(s) => s.chars().count(),
            TextContent::Bytes(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.as_bytes().is_empty()
    }

    /// First `n` characters (or bytes) as the bytes written for a compressor.
    pub fn prefix_bytes(&self, n: usize) -> &[u8] {
        match &self.content {
            TextContent::Unicode(s) => match s.char_indices().nth(n) {
                Some((idx, _)) => &s.as_bytes()[..idx],
                None => s.as_bytes(),
            },
            TextContent::Bytes(b) => &b[..n.min(b.len())],
        }
    }

    fn require_unicode(&self) -> Result<&str> {
        self.as_str().ok_or(Error::WrongEncoding { expected: "unicode" })
    }
}

/// Lowercases, keeps only `a`-`z` and single spaces, and trims.
///
/// Whitespace of any kind (newlines, tabs) separates words and becomes a
/// space; every other non-letter, including non-ASCII letters, is deleted.
pub fn preprocess_english(text: &RawText) -> Result<RawText> {
    let src = text.require_unicode()?;
    let mut out = String::with_capacity(src.len());
    let mut pending_space = false;
    for ch in src.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        for lower in ch.to_lowercase() {
            if lower.is_ascii_lowercase() {
                if pending_space {
                    out.push(' ');
                    pending_space = false;
                }
                out.push(lower);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus(Some("english preprocessing".into())));
    }
    Ok(RawText {
        content: TextContent::Unicode(out),
        source_id: text.source_id.clone(),
    })
}

/// Inserts `marker` at every word border of a byte-level text.
///
/// `split_offsets` are byte positions: an offset `k` puts a border between
/// byte `k - 1` and byte `k`. Offsets must be strictly increasing and lie
/// strictly inside the text.
pub fn preprocess_byte_level(text: &RawText, split_offsets: &[usize], marker: u8) -> Result<RawText> {
    let TextContent::Bytes(src) = &text.content else {
        return Err(Error::WrongEncoding { expected: "byte" });
    };
    if let Some(offset) = src.iter().position(|&b| b == marker) {
        return Err(Error::MarkerCollision { marker, offset });
    }
    let mut prev = 0usize;
    for &off in split_offsets {
        if off == 0 || off >= src.len() || off <= prev {
            return Err(Error::InvalidArgument(format!(
                "split offset {off} is out of order or outside (0, {})",
                src.len()
            )));
        }
        prev = off;
    }
    let mut out = Vec::with_capacity(src.len() + split_offsets.len());
    let mut start = 0;
    for &off in split_offsets {
        out.extend_from_slice(&src[start..off]);
        out.push(marker);
        start = off;
    }
    out.extend_from_slice(&src[start..]);
    Ok(RawText {
        content: TextContent::Bytes(out),
        source_id: text.source_id.clone(),
    })
}

/// Converts a text whose words are separated by `delimiter` into the bare
/// byte sequence and the split offsets expected by [`preprocess_byte_level`].
/// Runs of delimiters count as one border.
pub fn split_offsets_from_delimited(segmented: &[u8], delimiter: u8) -> (Vec<u8>, Vec<usize>) {
    let mut bytes = Vec::with_capacity(segmented.len());
    let mut offsets = Vec::new();
    let mut at_border = false;
    for &b in segmented {
        if b == delimiter {
            at_border = true;
            continue;
        }
        if at_border && !bytes.is_empty() {
            offsets.push(bytes.len());
        }
        at_border = false;
        bytes.push(b);
    }
    (bytes, offsets)
}

/// Removes characters whose relative frequency is below `min_relative_frequency`.
pub fn filter_rare_symbols(text: &RawText, min_relative_frequency: f64) -> Result<RawText> {
    let src = text.require_unicode()?;
    let mut counts: FxHashMap<char, u64> = FxHashMap::default();
    let mut total = 0u64;
    for ch in src.chars() {
        *counts.entry(ch).or_default() += 1;
        total += 1;
    }
    let threshold = min_relative_frequency * total as f64;
    let out: String = src
        .chars()
        .filter(|ch| counts[ch] as f64 >= threshold)
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyCorpus(Some("rare-symbol filtering".into())));
    }
    Ok(RawText {
        content: TextContent::Unicode(out),
        source_id: text.source_id.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShuffleLevel {
    Character,
    Word,
    Document,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleSpec {
    pub level: ShuffleLevel,
    pub rng_seed: u64,
    pub document_delimiter: String,
}

impl ShuffleSpec {
    pub fn new(level: ShuffleLevel, rng_seed: u64) -> Self {
        Self {
            level,
            rng_seed,
            document_delimiter: DEFAULT_DOCUMENT_DELIMITER.to_string(),
        }
    }

    pub fn with_delimiter(mut self, delimiter: impl Into<String>) -> Self {
        self.document_delimiter = delimiter.into();
        self
    }
}

/// Permutes a text at character, word or document level.
///
/// The permutation is a Fisher-Yates shuffle driven by ChaCha8 seeded from
/// `spec.rng_seed`, so equal inputs give equal outputs on every platform.
/// Words are the pieces between single spaces; documents are the pieces
/// between delimiter occurrences. Separators stay where they are, so the
/// output has exactly the input length.
pub fn shuffle(text: &RawText, spec: &ShuffleSpec) -> Result<RawText> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let content = match (&text.content, spec.level) {
        (TextContent::Unicode(s), ShuffleLevel::Character) => {
            let mut chars: Vec<char> = s.chars().collect();
            chars.shuffle(&mut rng);
            TextContent::Unicode(chars.into_iter().collect())
        }
        (TextContent::Bytes(b), ShuffleLevel::Character) => {
            let mut bytes = b.clone();
            bytes.shuffle(&mut rng);
            TextContent::Bytes(bytes)
        }
        (content, ShuffleLevel::Word) => {
            let bytes = match content {
                TextContent::Unicode(s) => s.as_bytes(),
                TextContent::Bytes(b) => b.as_slice(),
            };
            if !bytes.contains(&b' ') {
                return Err(Error::NotSpaceDelimited);
            }
            let out = shuffle_pieces(bytes, b" ", &mut rng);
            rewrap(content, out)
        }
        (content, ShuffleLevel::Document) => {
            let delim = spec.document_delimiter.as_bytes();
            let bytes = match content {
                TextContent::Unicode(s) => s.as_bytes(),
                TextContent::Bytes(b) => b.as_slice(),
            };
            if delim.is_empty() || find(bytes, delim).is_none() {
                return Err(Error::MissingDelimiter(spec.document_delimiter.clone()));
            }
            let out = shuffle_pieces(bytes, delim, &mut rng);
            rewrap(content, out)
        }
    };
    Ok(RawText {
        content,
        source_id: text.source_id.clone(),
    })
}

fn rewrap(original: &TextContent, bytes: Vec<u8>) -> TextContent {
    match original {
        // Splitting on ASCII separators keeps every piece valid UTF-8.
        TextContent::Unicode(_) => {
            TextContent::Unicode(String::from_utf8(bytes).expect("pieces split on ASCII stay UTF-8"))
        }
        TextContent::Bytes(_) => TextContent::Bytes(bytes),
    }
}

fn shuffle_pieces(bytes: &[u8], delim: &[u8], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut pieces = split_on(bytes, delim);
    pieces.shuffle(rng);
    let mut out = Vec::with_capacity(bytes.len());
    for (i, piece) in pieces.iter().enumerate() {
        if i > 0 {
            out.extend_from_slice(delim);
        }
        out.extend_from_slice(piece);
    }
    out
}

pub(crate) fn split_on<'a>(bytes: &'a [u8], delim: &[u8]) -> Vec<&'a [u8]> {
    let mut pieces = Vec::new();
    let mut rest = bytes;
    while let Some(pos) = find(rest, delim) {
        pieces.push(&rest[..pos]);
        rest = &rest[pos + delim.len()..];
    }
    pieces.push(rest);
    pieces
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    if needle.len() == 1 {
        return haystack.iter().position(|&b| b == needle[0]);
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}
