//! Baseline pseudo-text generators: monkey typing with its analytic
//! rank-probability law, and order-k Markov chains with backoff.

use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::corpus::RawText;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::tokens::{TokenMode, TokenStream, Vocab};
use crate::zipfheaps::RankFrequencyTable;

pub const DEFAULT_MONKEY_ALPHABET: u32 = 26;
pub const DEFAULT_SPACE_PROB: f64 = 0.2;
pub const MAX_MONKEY_ALPHABET: u32 = 26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonkeySpec {
    /// Number of non-space characters, drawn from `a`..`z`.
    pub alphabet_size: u32,
    pub space_prob: f64,
    pub rng_seed: u64,
    pub length: usize,
}

impl MonkeySpec {
    pub fn new(alphabet_size: u32, space_prob: f64, rng_seed: u64, length: usize) -> Result<Self> {
        if !(1..=MAX_MONKEY_ALPHABET).contains(&alphabet_size) {
            return Err(Error::InvalidArgument(format!(
                "alphabet size {alphabet_size} outside 1..={MAX_MONKEY_ALPHABET}"
            )));
        }
        if !(space_prob > 0.0 && space_prob < 1.0) {
            return Err(Error::InvalidArgument(format!("space probability {space_prob} outside (0, 1)")));
        }
        if length == 0 {
            return Err(Error::InvalidArgument("length must be at least 1".into()));
        }
        Ok(Self { alphabet_size, space_prob, rng_seed, length })
    }

    pub fn char_prob(&self) -> f64 {
        (1.0 - self.space_prob) / f64::from(self.alphabet_size)
    }
}

/// i.i.d. characters: space with probability `q`, otherwise uniform over the alphabet.
pub fn monkey_generate(spec: &MonkeySpec) -> RawText {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let q = spec.space_prob;
    let n = spec.alphabet_size as usize;
    let mut out = Vec::with_capacity(spec.length);
    for _ in 0..spec.length {
        let u: f64 = rng.random();
        if u < q {
            out.push(b' ');
        } else {
            let k = (((u - q) / (1.0 - q)) * n as f64) as usize;
            out.push(b'a' + k.min(n - 1) as u8);
        }
    }
    let text = String::from_utf8(out).expect("ascii");
    RawText::unicode(text, format!("monkey(n={n},q={q},seed={})", spec.rng_seed)).expect("length >= 1")
}

/// Rank-probability law of monkey-typed words (empty words excluded from
/// the ranking). Words of length `c` occupy ranks `S(c-1)+1 ..= S(c)` with
/// `S(c) = n + n^2 + ... + n^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMonkeyLaw<T> {
    pub alphabet_size: u32,
    pub space_prob: T,
}

impl<T: Real> AnalyticMonkeyLaw<T> {
    pub fn new(alphabet_size: u32, space_prob: T) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidArgument("alphabet size must be at least 1".into()));
        }
        if !(space_prob > T::zero() && space_prob < T::one()) {
            return Err(Error::InvalidArgument(format!("space probability {space_prob} outside (0, 1)")));
        }
        Ok(Self { alphabet_size, space_prob })
    }

    pub fn from_spec(spec: &MonkeySpec) -> Self {
        Self { alphabet_size: spec.alphabet_size, space_prob: T::lit(spec.space_prob) }
    }

    /// Number of distinct non-empty words of length at most `c`; `None` on overflow.
    pub fn cumulative_words(&self, c: u32) -> Option<u64> {
        let n = u64::from(self.alphabet_size);
        (1..=c).try_fold(0u64, |acc, i| acc.checked_add(n.checked_pow(i)?))
    }

    /// Inclusive rank range of words of length `c ≥ 1`.
    pub fn bracket(&self, c: u32) -> Option<(u64, u64)> {
        if c == 0 {
            return None;
        }
        Some((self.cumulative_words(c - 1)? + 1, self.cumulative_words(c)?))
    }

    /// Length of the words that occupy rank `r ≥ 1`.
    pub fn length_at_rank(&self, r: u64) -> Option<u32> {
        if r == 0 {
            return None;
        }
        (1..).find(|&c| self.cumulative_words(c).is_none_or(|s| s >= r))
    }

    /// Probability that a word slot holds one specific word of length `c`.
    pub fn word_probability(&self, c: u32) -> T {
        let q = self.space_prob;
        q * ((T::one() - q) / T::from_count(self.alphabet_size.into())).powi(c as i32)
    }

    /// Total probability of all words of length `c` (`c = 0` is the empty word).
    pub fn length_class_mass(&self, c: u32) -> T {
        self.space_prob * (T::one() - self.space_prob).powi(c as i32)
    }

    /// Closed form `q r^(log_n(1-q) - 1)`, exact at `r = n^c`. Undefined for `n = 1`.
    pub fn probability_at_rank(&self, r: T) -> Result<T> {
        if self.alphabet_size < 2 {
            return Err(Error::InvalidArgument("closed form needs an alphabet of at least 2".into()));
        }
        if r < T::one() {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        let n = T::from_count(self.alphabet_size.into());
        let q = self.space_prob;
        Ok(q * r.powf((T::one() - q).ln() / n.ln() - T::one()))
    }
}

/// Mean frequency over the ranks of words of length `c`, or `None` when the
/// table does not reach the end of that bracket.
pub fn bracket_mean_frequency<T: Real>(table: &RankFrequencyTable, law: &AnalyticMonkeyLaw<T>, c: u32) -> Option<T> {
    let (lo, hi) = law.bracket(c)?;
    if (table.len() as u64) < hi {
        return None;
    }
    let sum: u64 = table.rows()[(lo - 1) as usize..hi as usize].iter().map(|r| r.frequency).sum();
    Some(T::from_count(sum) / T::from_count(hi - lo + 1))
}

/// Empirical per-slot probability of a length-`c` word: the bracket mean
/// frequency divided by the number of word slots (spaces, so empty words
/// count as slots).
pub fn empirical_word_probability<T: Real>(
    table: &RankFrequencyTable,
    law: &AnalyticMonkeyLaw<T>,
    c: u32,
    word_slots: u64,
) -> Option<T> {
    (word_slots > 0).then_some(())?;
    Some(bracket_mean_frequency(table, law, c)? / T::from_count(word_slots))
}

/// Next-token counts of one context, stored cumulatively for sampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transitions {
    next: Vec<u32>,
    cumulative: Vec<u64>,
}

impl Transitions {
    fn from_counts(counts: FxHashMap<u32, u64>) -> Self {
        let mut pairs: Vec<(u32, u64)> = counts.into_iter().collect();
        pairs.sort_unstable();
        let mut acc = 0;
        let (next, cumulative) = pairs
            .into_iter()
            .map(|(t, c)| {
                acc += c;
                (t, acc)
            })
            .unzip();
        Self { next, cumulative }
    }

    pub fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    pub fn count(&self, token: u32) -> u64 {
        match self.next.binary_search(&token) {
            Ok(i) => self.cumulative[i] - if i == 0 { 0 } else { self.cumulative[i - 1] },
            Err(_) => 0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.next
            .iter()
            .zip(&self.cumulative)
            .scan(0, |prev, (&t, &c)| {
                let k = c - *prev;
                *prev = c;
                Some((t, k))
            })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        let u = rng.random_range(0..self.total());
        self.next[self.cumulative.partition_point(|&c| c <= u)]
    }
}

/// Order-k model with the tables of every lower order kept for backoff.
#[derive(Debug, Clone)]
pub struct MarkovModel {
    order: usize,
    /// `tables[j]` maps contexts of length `j` to their continuations.
    tables: Vec<FxHashMap<Box<[u32]>, Transitions>>,
    vocab: Arc<Vocab>,
    mode: TokenMode,
}

impl MarkovModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Arc<Vocab> {
        &self.vocab
    }

    pub fn mode(&self) -> TokenMode {
        self.mode
    }

    pub fn context_count(&self) -> usize {
        self.tables[self.order].len()
    }

    pub fn transitions(&self, context: &[u32]) -> Option<&Transitions> {
        self.tables.get(context.len())?.get(context)
    }

    /// Total count of `next` after `context`.
    pub fn count(&self, context: &[u32], next: u32) -> u64 {
        self.transitions(context).map_or(0, |t| t.count(next))
    }

    /// Longest-suffix lookup: the order-k context, then shorter ones.
    fn lookup(&self, history: &[u32]) -> &Transitions {
        let k = self.order.min(history.len());
        (0..=k)
            .rev()
            .find_map(|j| self.tables[j].get(&history[history.len() - j..]))
            .expect("order-0 table is non-empty")
    }
}

/// Counts every (context, next) window for context lengths `0..=k`.
pub fn markov_train(stream: &TokenStream, k: usize) -> Result<MarkovModel> {
    let tokens = stream.tokens();
    if k >= tokens.len() {
        return Err(Error::StreamTooShort { len: tokens.len(), needed: k });
    }
    let tables = (0..=k)
        .into_par_iter()
        .map(|j| {
            let mut raw: FxHashMap<&[u32], FxHashMap<u32, u64>> = FxHashMap::default();
            for i in j..tokens.len() {
                *raw.entry(&tokens[i - j..i]).or_default().entry(tokens[i]).or_default() += 1;
            }
            raw.into_iter()
                .map(|(ctx, counts)| (Box::from(ctx), Transitions::from_counts(counts)))
                .collect()
        })
        .collect();
    Ok(MarkovModel { order: k, tables, vocab: Arc::clone(stream.vocab()), mode: stream.mode() })
}

/// Samples `length` tokens starting after `seed_context`, which must be an
/// order-k context seen in training. Unseen contexts back off to shorter
/// ones. The seed context is not part of the output.
pub fn markov_generate_tokens(model: &MarkovModel, length: usize, rng_seed: u64, seed_context: &[u32]) -> Result<TokenStream> {
    if model.tables[0].is_empty() {
        return Err(Error::EmptyModel);
    }
    if seed_context.len() != model.order || !model.tables[model.order].contains_key(seed_context) {
        return Err(Error::UnknownContext);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut history = seed_context.to_vec();
    history.reserve(length);
    for _ in 0..length {
        let t = model.lookup(&history).sample(&mut rng);
        history.push(t);
    }
    history.drain(..model.order);
    TokenStream::from_parts(history, Arc::clone(&model.vocab), model.mode)
}

pub fn markov_generate(model: &MarkovModel, length: usize, rng_seed: u64, seed_context: &[u32]) -> Result<RawText> {
    let source = format!("markov(k={},seed={rng_seed})", model.order);
    markov_generate_tokens(model, length, rng_seed, seed_context)?.to_text(source)
}
