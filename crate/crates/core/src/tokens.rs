//! Tokenization and exact sliding-window n-gram counting.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{RawText, TextContent};
use crate::error::{Error, Result};

/// Separator placed between the tokens of a word n-gram in exported tables (U+2420).
pub const WORD_JOINER: char = '\u{2420}';

/// Streams shorter than this are counted on a single thread.
const PARALLEL_THRESHOLD: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenMode {
    Character,
    Word,
    Byte,
}

/// Bijection between token ids and surface forms. Ids are dense and assigned
/// in order of first occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    surfaces: Vec<Box<[u8]>>,
    index: FxHashMap<Box<[u8]>, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, surface: &[u8]) -> u32 {
        if let Some(&id) = self.index.get(surface) {
            return id;
        }
        let id = u32::try_from(self.surfaces.len()).expect("vocabulary exceeds u32 ids");
        self.surfaces.push(surface.into());
        self.index.insert(surface.into(), id);
        id
    }

    pub fn id(&self, surface: &[u8]) -> Option<u32> {
        self.index.get(surface).copied()
    }

    pub fn surface(&self, id: u32) -> &[u8] {
        &self.surfaces[id as usize]
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    /// Orders two id sequences token by token on their surface bytes.
    pub fn compare_sequences(&self, a: &[u32], b: &[u32]) -> Ordering {
        for (&x, &y) in a.iter().zip(b) {
            if x != y {
                let ord = self.surface(x).cmp(self.surface(y));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
        }
        a.len().cmp(&b.len())
    }
}

#[derive(Debug, Clone)]
pub struct TokenStream {
    tokens: Vec<u32>,
    vocab: Arc<Vocab>,
    mode: TokenMode,
}

impl TokenStream {
    /// Assembles a stream from parts, checking that every id is in the vocabulary.
    pub fn from_parts(tokens: Vec<u32>, vocab: Arc<Vocab>, mode: TokenMode) -> Result<Self> {
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= vocab.len()) {
            return Err(Error::InvalidArgument(format!(
                "token id {bad} outside vocabulary of size {}",
                vocab.len()
            )));
        }
        Ok(Self { tokens, vocab, mode })
    }

    /// Builds a stream by interning each surface in turn.
    pub fn from_surfaces<'a, I>(surfaces: I, mode: TokenMode) -> Self
    where
        I: IntoIterator<Item = &'a [u8]>,
    {
        let mut vocab = Vocab::new();
        let tokens = surfaces.into_iter().map(|s| vocab.intern(s)).collect();
        Self {
            tokens,
            vocab: Arc::new(vocab),
            mode,
        }
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    pub fn mode(&self) -> TokenMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// A new stream over the first `len` tokens, sharing the vocabulary.
    pub fn truncated(&self, len: usize) -> Self {
        Self {
            tokens: self.tokens[..len.min(self.tokens.len())].to_vec(),
            vocab: Arc::clone(&self.vocab),
            mode: self.mode,
        }
    }

    /// Rebuilds the text: characters and bytes are concatenated, words joined by single spaces.
    pub fn to_text(&self, source_id: impl Into<String>) -> Result<RawText> {
        let mut out = Vec::new();
        for (i, &t) in self.tokens.iter().enumerate() {
            if self.mode == TokenMode::Word && i > 0 {
                out.push(b' ');
            }
            out.extend_from_slice(self.vocab.surface(t));
        }
        match self.mode {
            TokenMode::Byte => RawText::bytes(out, source_id),
            _ => match String::from_utf8(out) {
                Ok(s) => RawText::unicode(s, source_id),
                Err(e) => RawText::bytes(e.into_bytes(), source_id),
            },
        }
    }

    /// Printable form of an n-gram: word tokens joined by [`WORD_JOINER`],
    /// characters concatenated, non-printable bytes escaped as `\xNN`.
    pub fn render(&self, ngram: &[u32]) -> String {
        render_ngram(&self.vocab, self.mode, ngram)
    }
}

pub(crate) fn render_ngram(vocab: &Vocab, mode: TokenMode, ngram: &[u32]) -> String {
    let mut out = String::new();
    for (i, &t) in ngram.iter().enumerate() {
        let surface = vocab.surface(t);
        match mode {
            TokenMode::Word => {
                if i > 0 {
                    out.push(WORD_JOINER);
                }
                out.push_str(&escape_bytes(surface));
            }
            TokenMode::Character => out.push_str(&String::from_utf8_lossy(surface)),
            TokenMode::Byte => out.push_str(&escape_bytes(surface)),
        }
    }
    out
}

fn escape_bytes(bytes: &[u8]) -> Cow<'_, str> {
    match std::str::from_utf8(bytes) {
        Ok(s) if s.chars().all(|c| !c.is_control()) => Cow::Borrowed(s),
        _ => {
            let mut s = String::with_capacity(bytes.len() * 4);
            for &b in bytes {
                if b.is_ascii_graphic() || b == b' ' {
                    s.push(b as char);
                } else {
                    s.push_str(&format!("\\x{b:02x}"));
                }
            }
            Cow::Owned(s)
        }
    }
}

/// Splits a text into tokens.
///
/// Character mode needs a unicode text and yields one token per scalar
/// value, spaces included. Byte mode yields one token per byte. Word mode
/// splits on spaces and drops the empty words produced by runs of spaces.
pub fn tokenize(text: &RawText, mode: TokenMode) -> Result<TokenStream> {
    let stream = match mode {
        TokenMode::Character => {
            let s = text
                .as_str()
                .ok_or(Error::WrongEncoding { expected: "unicode" })?;
            let mut buf = [0u8; 4];
            let mut vocab = Vocab::new();
            let tokens = s
                .chars()
                .map(|c| vocab.intern(c.encode_utf8(&mut buf).as_bytes()))
                .collect();
            TokenStream {
                tokens,
                vocab: Arc::new(vocab),
                mode,
            }
        }
        TokenMode::Byte => {
            let mut vocab = Vocab::new();
            let tokens = text.as_bytes().iter().map(|&b| vocab.intern(&[b])).collect();
            TokenStream {
                tokens,
                vocab: Arc::new(vocab),
                mode,
            }
        }
        TokenMode::Word => return tokenize_words(text, b' '),
    };
    if stream.is_empty() {
        return Err(Error::EmptyCorpus(Some("tokenization".into())));
    }
    Ok(stream)
}

/// Word tokenization with an arbitrary single-byte delimiter (space, or the
/// boundary marker of a byte-level text).
pub fn tokenize_words(text: &RawText, delimiter: u8) -> Result<TokenStream> {
    let bytes = match text.content() {
        TextContent::Unicode(s) => s.as_bytes(),
        TextContent::Bytes(b) => b.as_slice(),
    };
    if text.as_str().is_some() && !delimiter.is_ascii() {
        return Err(Error::InvalidArgument(
            "word delimiter for a unicode text must be ASCII".into(),
        ));
    }
    let stream = TokenStream::from_surfaces(
        bytes.split(|&b| b == delimiter).filter(|w| !w.is_empty()),
        TokenMode::Word,
    );
    if stream.is_empty() {
        return Err(Error::EmptyCorpus(Some("word tokenization".into())));
    }
    Ok(stream)
}

/// Regroups a character or byte stream into words on `delimiter` (a single
/// token surface, usually `b" "`). Empty words are dropped.
pub fn words_from_chars(stream: &TokenStream, delimiter: &[u8]) -> TokenStream {
    let delim_id = stream.vocab.id(delimiter);
    let mut vocab = Vocab::new();
    let mut tokens = Vec::new();
    let mut word: Vec<u8> = Vec::new();
    for &t in &stream.tokens {
        if Some(t) == delim_id {
            if !word.is_empty() {
                tokens.push(vocab.intern(&word));
                word.clear();
            }
        } else {
            word.extend_from_slice(stream.vocab.surface(t));
        }
    }
    if !word.is_empty() {
        tokens.push(vocab.intern(&word));
    }
    TokenStream {
        tokens,
        vocab: Arc::new(vocab),
        mode: TokenMode::Word,
    }
}

/// Exact counts of all overlapping windows of length `n`.
#[derive(Debug, Clone)]
pub struct NgramCountTable {
    n: usize,
    entries: FxHashMap<Box<[u32]>, u64>,
    total_windows: u64,
    vocab: Arc<Vocab>,
    mode: TokenMode,
}

impl NgramCountTable {
    fn empty(n: usize, vocab: Arc<Vocab>, mode: TokenMode) -> Self {
        Self {
            n,
            entries: FxHashMap::default(),
            total_windows: 0,
            vocab,
            mode,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn total_windows(&self) -> u64 {
        self.total_windows
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    pub fn mode(&self) -> TokenMode {
        self.mode
    }

    pub fn count(&self, ngram: &[u32]) -> u64 {
        self.entries.get(ngram).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], u64)> {
        self.entries.iter().map(|(k, &v)| (&**k, v))
    }

    pub fn render(&self, ngram: &[u32]) -> String {
        render_ngram(&self.vocab, self.mode, ngram)
    }

    fn add_window(&mut self, window: &[u32]) {
        self.total_windows += 1;
        if let Some(c) = self.entries.get_mut(window) {
            *c += 1;
        } else {
            self.entries.insert(window.into(), 1);
        }
    }

    /// Adds the counts of another table over the same vocabulary.
    pub fn merge(&mut self, other: NgramCountTable) -> Result<()> {
        if other.n != self.n || !Arc::ptr_eq(&other.vocab, &self.vocab) && *other.vocab != *self.vocab {
            return Err(Error::InvalidArgument(
                "can only merge count tables with equal n and vocabulary".into(),
            ));
        }
        let (mut big, small) = if other.entries.len() > self.entries.len() {
            (other.entries, std::mem::take(&mut self.entries))
        } else {
            (std::mem::take(&mut self.entries), other.entries)
        };
        for (k, v) in small {
            *big.entry(k).or_default() += v;
        }
        self.entries = big;
        self.total_windows += other.total_windows;
        Ok(())
    }

    /// Entries in rank order: count descending, ties by surface form.
    pub fn sorted_entries(&self) -> Vec<(&[u32], u64)> {
        let mut rows: Vec<(&[u32], u64)> = self.iter().collect();
        rows.par_sort_unstable_by(|a, b| {
            b.1.cmp(&a.1).then_with(|| self.vocab.compare_sequences(a.0, b.0))
        });
        rows
    }

    /// CSV with columns `ngram,count` in rank order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["ngram", "count"])?;
        for (ngram, count) in self.sorted_entries() {
            w.write_record([self.render(ngram), count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn count_slice(tokens: &[u32], n: usize, vocab: &Arc<Vocab>, mode: TokenMode) -> NgramCountTable {
    let mut table = NgramCountTable::empty(n, Arc::clone(vocab), mode);
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            table.add_window(w);
        }
    }
    table
}

/// Counts the windows that are not contained in a single chunk. `boundaries`
/// are the interior chunk starts, strictly increasing.
fn count_straddling(tokens: &[u32], n: usize, boundaries: &[usize], table: &mut NgramCountTable) {
    if n < 2 {
        return;
    }
    let last_start = tokens.len() - n;
    let mut next_start = 0usize;
    for &b in boundaries {
        let from = b.saturating_sub(n - 1).max(next_start);
        for s in from..b.min(last_start + 1) {
            table.add_window(&tokens[s..s + n]);
        }
        next_start = next_start.max(b);
    }
}

/// Exact n-gram counts, counted in parallel over chunks of the stream.
pub fn count_ngrams(stream: &TokenStream, n: usize) -> Result<NgramCountTable> {
    let len = stream.len();
    let chunks = if len < PARALLEL_THRESHOLD {
        1
    } else {
        (rayon::current_num_threads() * 4).min(len / (PARALLEL_THRESHOLD / 4)).max(1)
    };
    let boundaries: Vec<usize> = (1..chunks).map(|i| i * len / chunks).collect();
    count_ngrams_chunked(stream, n, &boundaries)
}

/// Counts each chunk independently, then adds the windows that straddle the
/// chunk boundaries. The result equals a single sequential pass for any
/// chunking.
pub fn count_ngrams_chunked(stream: &TokenStream, n: usize, boundaries: &[usize]) -> Result<NgramCountTable> {
    if n == 0 {
        return Err(Error::InvalidArgument("n-gram length must be at least 1".into()));
    }
    let len = stream.len();
    if len < n {
        return Err(Error::StreamTooShort { len, needed: n - 1 });
    }
    let mut cuts: Vec<usize> = boundaries.iter().copied().filter(|&b| b > 0 && b < len).collect();
    cuts.sort_unstable();
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(0);
    edges.extend_from_slice(&cuts);
    edges.push(len);

    let tokens = stream.tokens();
    let partials: Vec<NgramCountTable> = edges
        .par_windows(2)
        .map(|e| count_slice(&tokens[e[0]..e[1]], n, &stream.vocab, stream.mode))
        .collect();

    let mut straddling = NgramCountTable::empty(n, Arc::clone(&stream.vocab), stream.mode);
    count_straddling(tokens, n, &cuts, &mut straddling);

    let mut total = partials
        .into_par_iter()
        .reduce_with(|mut a, b| {
            a.merge(b).expect("chunks share the stream vocabulary");
            a
        })
        .expect("at least one chunk");
    total.merge(straddling)?;
    debug_assert_eq!(total.total_windows as usize, len - n + 1);
    Ok(total)
}
