//! Rank-frequency tables, vocabulary growth, logarithmic binning and the
//! Zipf/Heaps exponent fits built on them.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_line, LawKind, PowerLawFit, Scale};
use crate::num::Real;
use crate::tokens::{count_ngrams, render_ngram, NgramCountTable, TokenMode, TokenStream, Vocab};

pub const DEFAULT_BINS_PER_DECADE: u32 = 10;
pub const DEFAULT_ZIPF_RANGE: (f64, f64) = (10.0, 1e4);
pub const DEFAULT_HEAPS_LO: f64 = 100.0;
pub const DEFAULT_GROWTH_SAMPLES_PER_DECADE: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankRow {
    pub rank: u64,
    pub ngram: Box<[u32]>,
    pub frequency: u64,
}

/// Rows sorted by frequency, ranks `1..=K` consecutive.
#[derive(Debug, Clone)]
pub struct RankFrequencyTable {
    n: usize,
    rows: Vec<RankRow>,
    vocab: Arc<Vocab>,
    mode: TokenMode,
}

impl RankFrequencyTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[RankRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn frequency(&self, rank: u64) -> Option<u64> {
        rank.checked_sub(1).and_then(|i| self.rows.get(i as usize)).map(|r| r.frequency)
    }

    pub fn total(&self) -> u64 {
        self.rows.iter().map(|r| r.frequency).sum()
    }

    pub fn render(&self, row: &RankRow) -> String {
        render_ngram(&self.vocab, self.mode, &row.ngram)
    }

    /// `(rank, frequency)` pairs.
    pub fn points<T: Real>(&self) -> Vec<(T, T)> {
        self.rows
            .iter()
            .map(|r| (T::from_count(r.rank), T::from_count(r.frequency)))
            .collect()
    }

    /// CSV rows `n,rank,ngram,freq`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "rank", "ngram", "freq"])?;
        let n = self.n.to_string();
        for row in &self.rows {
            w.write_record([n.as_str(), &row.rank.to_string(), &self.render(row), &row.frequency.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sorts the table by frequency, breaking ties lexicographically on the
/// surface form so the ranking is reproducible.
pub fn rank_frequency(counts: &NgramCountTable) -> Result<RankFrequencyTable> {
    if counts.is_empty() {
        return Err(Error::EmptyCorpus(Some("n-gram counting".into())));
    }
    let rows = counts
        .sorted_entries()
        .into_iter()
        .enumerate()
        .map(|(i, (ngram, frequency))| RankRow {
            rank: i as u64 + 1,
            ngram: ngram.into(),
            frequency,
        })
        .collect();
    Ok(RankFrequencyTable {
        n: counts.n(),
        rows,
        vocab: Arc::clone(counts.vocab()),
        mode: counts.mode(),
    })
}

/// Points averaged over logarithmic bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSeries<T> {
    /// `(geometric mean abscissa, arithmetic mean ordinate)` per non-empty bin.
    pub points: Vec<(T, T)>,
    pub bins_per_decade: u32,
}

fn bin_index<T: Real>(x: T, bins_per_decade: u32) -> i64 {
    // Exact powers of ten must land at the start of their bin.
    let v = x.as_f64().log10() * f64::from(bins_per_decade);
    (v + 1e-9 * v.abs().max(1.0)).floor() as i64
}

/// Groups points into `bins_per_decade` geometric bins on the abscissa.
///
/// Each non-empty bin yields one point at the geometric mean of its members'
/// abscissae, so a bin holding a single rank sits exactly at that rank.
pub fn log_bin<T: Real>(points: &[(T, T)], bins_per_decade: u32) -> Result<BinnedSeries<T>> {
    if bins_per_decade == 0 {
        return Err(Error::InvalidArgument("bins_per_decade must be at least 1".into()));
    }
    let mut bins: BTreeMap<i64, (T, T, u64)> = BTreeMap::new();
    for &(x, y) in points {
        if x <= T::zero() {
            return Err(Error::NonPositive { at: x.as_f64(), value: x.as_f64() });
        }
        let slot = bins.entry(bin_index(x, bins_per_decade)).or_insert((T::zero(), T::zero(), 0));
        slot.0 += x.ln();
        slot.1 += y;
        slot.2 += 1;
    }
    let points = bins
        .into_values()
        .map(|(sum_log_x, sum_y, k)| {
            let k = T::from_count(k);
            ((sum_log_x / k).exp(), sum_y / k)
        })
        .collect();
    Ok(BinnedSeries { points, bins_per_decade })
}

pub fn log_bin_table<T: Real>(table: &RankFrequencyTable, bins_per_decade: u32) -> Result<BinnedSeries<T>> {
    log_bin(&table.points(), bins_per_decade)
}

/// Vocabulary size after the first `m` tokens, at increasing `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthCurve {
    pub samples: Vec<(u64, u64)>,
}

impl GrowthCurve {
    pub fn points<T: Real>(&self) -> Vec<(T, T)> {
        self.samples
            .iter()
            .map(|&(m, v)| (T::from_count(m), T::from_count(v)))
            .collect()
    }

    pub fn final_vocabulary(&self) -> u64 {
        self.samples.last().map_or(0, |s| s.1)
    }

    pub fn final_length(&self) -> u64 {
        self.samples.last().map_or(0, |s| s.0)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["m", "V"])?;
        for &(m, v) in &self.samples {
            w.write_record([m.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Distinct integers `round(10^(k / per_decade))` within `[lo, hi]`.
pub fn log_spaced(lo: u64, hi: u64, per_decade: u32) -> Vec<u64> {
    let lo = lo.max(1);
    if hi < lo || per_decade == 0 {
        return Vec::new();
    }
    let pd = f64::from(per_decade);
    let mut k = ((lo as f64).log10() * pd).floor() as i64 - 1;
    let mut out: Vec<u64> = Vec::new();
    loop {
        let v = 10f64.powf(k as f64 / pd).round() as u64;
        if v > hi {
            break;
        }
        if v >= lo && out.last() != Some(&v) {
            out.push(v);
        }
        k += 1;
    }
    out
}

/// Exact vocabulary growth in one pass, sampled at log-spaced lengths plus
/// the full length.
pub fn vocabulary_growth(stream: &TokenStream, samples_per_decade: u32) -> Result<GrowthCurve> {
    if stream.is_empty() {
        return Err(Error::EmptyCorpus(Some("tokenization".into())));
    }
    if samples_per_decade == 0 {
        return Err(Error::InvalidArgument("samples_per_decade must be at least 1".into()));
    }
    let len = stream.len() as u64;
    let mut marks = log_spaced(1, len, samples_per_decade);
    if marks.last() != Some(&len) {
        marks.push(len);
    }
    let mut seen = vec![false; stream.vocab().len()];
    let mut distinct = 0u64;
    let mut samples = Vec::with_capacity(marks.len());
    let mut next = marks.iter().copied().peekable();
    for (i, &t) in stream.tokens().iter().enumerate() {
        let slot = &mut seen[t as usize];
        if !*slot {
            *slot = true;
            distinct += 1;
        }
        if next.peek() == Some(&(i as u64 + 1)) {
            samples.push((i as u64 + 1, distinct));
            next.next();
        }
    }
    Ok(GrowthCurve { samples })
}

/// Anything that can be regressed: binned series, raw rank tables and growth curves.
pub trait FitSource<T: Real> {
    fn fit_points(&self) -> Vec<(T, T)>;
    fn law_kind(&self) -> LawKind;
}

impl<T: Real> FitSource<T> for BinnedSeries<T> {
    fn fit_points(&self) -> Vec<(T, T)> {
        self.points.clone()
    }
    fn law_kind(&self) -> LawKind {
        LawKind::Decay
    }
}

impl<T: Real> FitSource<T> for RankFrequencyTable {
    fn fit_points(&self) -> Vec<(T, T)> {
        self.points()
    }
    fn law_kind(&self) -> LawKind {
        LawKind::Decay
    }
}

impl<T: Real> FitSource<T> for GrowthCurve {
    fn fit_points(&self) -> Vec<(T, T)> {
        self.points()
    }
    fn law_kind(&self) -> LawKind {
        LawKind::Growth
    }
}

/// OLS fit over `range`. Rank-frequency sources report ξ (negated slope),
/// growth curves report ζ (raw slope).
pub fn fit_power_law<T: Real, S: FitSource<T> + ?Sized>(source: &S, range: (T, T), scale: Scale) -> Result<PowerLawFit<T>> {
    fit_line(&source.fit_points(), range, scale, source.law_kind())
}

/// Heaps exponent over `[lo, final length]`.
pub fn fit_heaps<T: Real>(curve: &GrowthCurve, lo: T) -> Result<PowerLawFit<T>> {
    let hi = T::from_count(curve.final_length());
    fit_power_law(curve, (lo, hi), Scale::LogLog)
}

/// Regresses an exponent on log10(epoch). The returned fit has the trend
/// slope as `exponent` and the value at epoch 1 as `log_intercept`.
pub fn exponent_trend<T: Real>(fits: &[(u64, PowerLawFit<T>)]) -> Result<PowerLawFit<T>> {
    if fits.len() < 3 {
        return Err(Error::InsufficientPoints { got: fits.len(), needed: 3 });
    }
    let points: Vec<(T, T)> = fits.iter().map(|(e, f)| (T::from_count(*e), f.exponent)).collect();
    let lo = points.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let hi = points.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    fit_line(&points, (lo, hi), Scale::SemiLogX, LawKind::Growth)
}

/// First abscissa where the 2-gram curve reaches or exceeds the unigram
/// curve, comparing at the 2-gram bin centres against the log-log
/// interpolation of the unigram curve. Only the overlap of both supports is
/// examined.
pub fn tail_crossing<T: Real>(unigram: &BinnedSeries<T>, bigram: &BinnedSeries<T>) -> Option<T> {
    let uni = &unigram.points;
    let (first, last) = (uni.first()?.0, uni.last()?.0);
    bigram
        .points
        .iter()
        .filter(|(x, _)| *x >= first && *x <= last)
        .find(|&&(x, y)| interpolate_loglog(uni, x).is_some_and(|u| y >= u))
        .map(|p| p.0)
}

fn interpolate_loglog<T: Real>(points: &[(T, T)], x: T) -> Option<T> {
    let i = points.partition_point(|p| p.0 < x);
    if i < points.len() && points[i].0 == x {
        return Some(points[i].1);
    }
    if i == 0 || i == points.len() {
        return None;
    }
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    let t = (x.ln() - x0.ln()) / (x1.ln() - x0.ln());
    Some((y0.ln() + t * (y1.ln() - y0.ln())).exp())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZipfConfig {
    pub ns: Vec<usize>,
    pub bins_per_decade: u32,
    pub fit_range: (f64, f64),
}

impl Default for ZipfConfig {
    fn default() -> Self {
        Self {
            ns: vec![1, 2, 3, 4, 5],
            bins_per_decade: DEFAULT_BINS_PER_DECADE,
            fit_range: DEFAULT_ZIPF_RANGE,
        }
    }
}

/// Rank-frequency result for one n.
#[derive(Debug, Clone)]
pub struct NgramZipf<T> {
    pub n: usize,
    pub table: RankFrequencyTable,
    pub binned: BinnedSeries<T>,
    /// `None` when the range holds too few binned points (very short texts).
    pub fit: Option<PowerLawFit<T>>,
}

/// Counts, ranks, bins and fits every requested n; the n values run in parallel.
pub fn zipf_analysis<T: Real>(stream: &TokenStream, config: &ZipfConfig) -> Result<Vec<NgramZipf<T>>> {
    if config.ns.is_empty() {
        return Err(Error::InvalidArgument("n-gram set is empty".into()));
    }
    let range = (T::lit(config.fit_range.0), T::lit(config.fit_range.1));
    config
        .ns
        .par_iter()
        .map(|&n| {
            let counts = count_ngrams(stream, n)?;
            let table = rank_frequency(&counts)?;
            let binned = log_bin_table(&table, config.bins_per_decade)?;
            let fit = match fit_power_law(&binned, range, Scale::LogLog) {
                Ok(f) => Some(f),
                Err(e) if e.is_fit_failure() => None,
                Err(e) => return Err(e),
            };
            Ok(NgramZipf { n, table, binned, fit })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawText;
    use crate::tokens::{tokenize, TokenMode};

    fn words(s: &str) -> TokenStream {
        tokenize(&RawText::unicode(s, "t").unwrap(), TokenMode::Word).unwrap()
    }

    #[test]
    fn ranks_with_ties() {
        let s = words("b a b a c c c");
        let t = rank_frequency(&count_ngrams(&s, 1).unwrap()).unwrap();
        let order: Vec<String> = t.rows().iter().map(|r| t.render(r)).collect();
        assert_eq!(order, vec!["c", "a", "b"]);
        assert_eq!(t.points::<f64>(), vec![(1.0, 3.0), (2.0, 2.0), (3.0, 2.0)]);
        assert_eq!(t.total(), 7);
    }

    #[test]
    fn simple_rank_table() {
        let s = words("a a a b");
        let t = rank_frequency(&count_ngrams(&s, 1).unwrap()).unwrap();
        assert_eq!(t.points::<f64>(), vec![(1.0, 3.0), (2.0, 1.0)]);
    }

    #[test]
    fn single_row_bins_to_itself() {
        let b = log_bin(&[(7.0f64, 3.0)], 10).unwrap();
        assert_eq!(b.points.len(), 1);
        assert!((b.points[0].0 - 7.0).abs() < 1e-12);
        assert_eq!(b.points[0].1, 3.0);
    }

    #[test]
    fn bin_count_over_three_decades() {
        let pts: Vec<(f64, f64)> = (1..=1000).map(|u| (u as f64, 1.0)).collect();
        let b = log_bin(&pts, 10).unwrap();
        assert!(b.points.len() <= 31, "{}", b.points.len());
        assert!(b.points.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(log_bin(&pts, 0).is_err());
    }

    #[test]
    fn growth_of_alternating_words() {
        let s = words("a b a b a b");
        let g = vocabulary_growth(&s, 20).unwrap();
        assert_eq!(g.samples, vec![(1, 1), (2, 2), (3, 2), (4, 2), (5, 2), (6, 2)]);
    }

    #[test]
    fn log_spaced_grid() {
        assert_eq!(log_spaced(1, 10, 10), vec![1, 2, 3, 4, 5, 6, 8, 10]);
        let g = log_spaced(1, 10_000, 20);
        assert_eq!(g.first(), Some(&1));
        assert_eq!(g.last(), Some(&10_000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_spaced(5, 4, 10).is_empty());
    }

    #[test]
    fn trend_examples() {
        let flat = PowerLawFit {
            exponent: 0.8,
            log_intercept: 0.0,
            fit_range: (1.0, 2.0),
            r_squared: 1.0,
            scale: Scale::LogLog,
            kind: LawKind::Growth,
            points_used: 3,
        };
        let fits: Vec<(u64, PowerLawFit<f64>)> = [1, 10, 100].iter().map(|&e| (e, flat)).collect();
        let t = exponent_trend(&fits).unwrap();
        assert!(t.exponent.abs() < 1e-15);

        let fits: Vec<(u64, PowerLawFit<f64>)> = [1u64, 2, 7, 51, 300]
            .iter()
            .map(|&e| {
                let mut f = flat;
                f.exponent = 0.95 - 0.05 * (e as f64).log10();
                (e, f)
            })
            .collect();
        let t = exponent_trend(&fits).unwrap();
        assert!((t.exponent + 0.05).abs() < 1e-12);
        assert!((t.log_intercept - 0.95).abs() < 1e-12);
        assert!(exponent_trend(&fits[..2]).is_err());
    }

    #[test]
    fn crossing_detection() {
        let uni = BinnedSeries { points: vec![(1.0, 100.0), (10.0, 10.0), (100.0, 1.0)], bins_per_decade: 1 };
        let below = BinnedSeries { points: vec![(1.0, 50.0), (10.0, 5.0), (100.0, 0.5)], bins_per_decade: 1 };
        assert_eq!(tail_crossing(&uni, &below), None);
        let crossing = BinnedSeries { points: vec![(1.0, 20.0), (31.6, 4.0), (100.0, 2.0)], bins_per_decade: 1 };
        let at = tail_crossing(&uni, &crossing).unwrap();
        assert!((at - 31.6f64).abs() < 1e-12);
    }

    #[test]
    fn analysis_over_several_n() {
        let s = words(&"the cat sat on the mat and the dog sat on the log ".repeat(50));
        let res = zipf_analysis::<f64>(&s, &ZipfConfig { ns: vec![1, 2, 3], ..Default::default() }).unwrap();
        assert_eq!(res.iter().map(|r| r.n).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert!(res.iter().all(|r| r.table.total() as usize == s.len() - r.n + 1));
        assert!(zipf_analysis::<f64>(&s, &ZipfConfig { ns: vec![], ..Default::default() }).is_err());
    }
}
