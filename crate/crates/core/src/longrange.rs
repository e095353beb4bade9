//! Mutual information over distance, rare-word interval autocorrelation and
//! power-versus-exponential decay classification.

use std::collections::BTreeMap;
use std::io::Write;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_line, LawKind, PowerLawFit, Scale};
use crate::num::{compensated_sum, Real};
use crate::tokens::TokenStream;
use crate::zipfheaps::log_spaced;

pub const DEFAULT_DISTANCES_PER_DECADE: u32 = 20;
pub const DEFAULT_MAX_DISTANCE: u64 = 10_000;
pub const DEFAULT_DECAY_MARGIN: f64 = 0.05;
pub const MIN_DECAY_POINTS: usize = 5;

/// Default rare-word fraction, 1/16 of the vocabulary.
pub fn default_rare_fraction() -> Ratio<u64> {
    Ratio::new(1, 16)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    MutualInformation,
    Autocorrelation,
}

impl CorrelationKind {
    pub fn unit(self) -> &'static str {
        match self {
            CorrelationKind::MutualInformation => "bits",
            CorrelationKind::Autocorrelation => "dimensionless",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationKind::MutualInformation => "mutual_information",
            CorrelationKind::Autocorrelation => "autocorrelation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries<T> {
    pub kind: CorrelationKind,
    /// `(distance, value)` with strictly increasing distances.
    pub points: Vec<(u64, T)>,
}

impl<T: Real> CorrelationSeries<T> {
    pub fn value_at(&self, s: u64) -> Option<T> {
        self.points
            .binary_search_by_key(&s, |p| p.0)
            .ok()
            .map(|i| self.points[i].1)
    }

    /// CSV rows `kind,s,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["kind", "s", "value"])?;
        for &(s, v) in &self.points {
            w.write_record([self.kind.as_str(), &s.to_string(), &v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Log-spaced distances from 1 to `min(10^4, len / 10)`, 20 per decade,
/// ending exactly at the upper bound.
pub fn default_distances(len: usize) -> Vec<u64> {
    let hi = DEFAULT_MAX_DISTANCE.min(len as u64 / 10);
    let mut d = log_spaced(1, hi, DEFAULT_DISTANCES_PER_DECADE);
    if hi >= 1 && d.last() != Some(&hi) {
        d.push(hi);
    }
    d
}

fn normalize_distances(distances: &[u64], min: u64, len: usize) -> Result<Vec<u64>> {
    let mut d = distances.to_vec();
    d.sort_unstable();
    d.dedup();
    if d.is_empty() {
        return Err(Error::InvalidArgument("distance set is empty".into()));
    }
    if d[0] < min {
        return Err(Error::InvalidArgument(format!("distances must be at least {min}")));
    }
    if let Some(&max) = d.last() {
        if max as usize >= len {
            return Err(Error::StreamTooShort { len, needed: max as usize });
        }
    }
    Ok(d)
}

/// Plug-in estimate in bits from a table of pair counts.
///
/// Per-cell terms are sorted before summation, so a transposed table gives a
/// bit-identical result.
fn mi_from_joint<T: Real>(cells: impl Iterator<Item = (u32, u32, u64)> + Clone, total: u64) -> T {
    if total == 0 {
        return T::zero();
    }
    let mut left: FxHashMap<u32, u64> = FxHashMap::default();
    let mut right: FxHashMap<u32, u64> = FxHashMap::default();
    for (a, b, c) in cells.clone() {
        *left.entry(a).or_default() += c;
        *right.entry(b).or_default() += c;
    }
    let m = T::from_count(total);
    let mut terms: Vec<T> = cells
        .filter(|c| c.2 > 0)
        .map(|(a, b, c)| {
            let c = T::from_count(c);
            let pa = T::from_count(left[&a]);
            let pb = T::from_count(right[&b]);
            (c / m) * (c * m / (pa * pb)).log2()
        })
        .collect();
    terms.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    compensated_sum(terms).max(T::zero())
}

/// Mutual information between arbitrary paired observations.
pub fn mutual_information_pairs<T: Real>(pairs: impl IntoIterator<Item = (u32, u32)>) -> T {
    let mut joint: FxHashMap<(u32, u32), u64> = FxHashMap::default();
    let mut total = 0u64;
    for p in pairs {
        *joint.entry(p).or_default() += 1;
        total += 1;
    }
    mi_from_joint(joint.iter().map(|(&(a, b), &c)| (a, b, c)), total)
}

const DENSE_LIMIT: usize = 2048;

/// Plug-in mutual information in bits between tokens `s` apart, over all
/// `len - s` position pairs.
pub fn mutual_information<T: Real>(stream: &TokenStream, s: usize) -> Result<T> {
    if s == 0 {
        return Err(Error::InvalidArgument("distance must be at least 1".into()));
    }
    let tokens = stream.tokens();
    if tokens.len() <= s {
        return Err(Error::StreamTooShort { len: tokens.len(), needed: s });
    }
    let total = (tokens.len() - s) as u64;
    let pairs = tokens.iter().zip(&tokens[s..]);
    let v = stream.vocab().len();
    if v <= DENSE_LIMIT {
        let mut joint = vec![0u64; v * v];
        for (&a, &b) in pairs {
            joint[a as usize * v + b as usize] += 1;
        }
        let cells = joint
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| ((i / v) as u32, (i % v) as u32, c));
        Ok(mi_from_joint(cells, total))
    } else {
        Ok(mutual_information_pairs(pairs.map(|(&a, &b)| (a, b))))
    }
}

/// Mutual information over a set of distances, evaluated in parallel.
pub fn mi_curve<T: Real>(stream: &TokenStream, distances: &[u64]) -> Result<CorrelationSeries<T>> {
    let d = normalize_distances(distances, 1, stream.len())?;
    let points = d
        .par_iter()
        .map(|&s| mutual_information(stream, s as usize).map(|v| (s, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationSeries { kind: CorrelationKind::MutualInformation, points })
}

/// What the rare fraction is a fraction of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RareQuota {
    /// Rare words together account for the fraction of all word tokens,
    /// so the mean interval is close to its reciprocal.
    #[default]
    Occurrences,
    /// Rare words make up the fraction of the vocabulary.
    Types,
}

/// Gaps between successive occurrences of rare words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalSequence {
    pub values: Vec<u64>,
    pub rare_fraction: Ratio<u64>,
    pub quota: RareQuota,
    /// Rank, in the descending frequency order, of the most frequent rare type.
    pub threshold_rank: usize,
    pub rare_types: usize,
    /// Highest frequency admitted to the rare set.
    pub threshold_frequency: u64,
    pub first_position: usize,
    pub last_position: usize,
}

impl IntervalSequence {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean<T: Real>(&self) -> T {
        T::from_count(self.values.iter().sum()) / T::from_count(self.values.len() as u64)
    }
}

/// Differences of consecutive positions; needs at least three positions.
pub fn intervals_from_positions(positions: &[usize]) -> Result<Vec<u64>> {
    if positions.len() < 3 {
        return Err(Error::TooFewRareOccurrences { found: positions.len() });
    }
    if positions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("positions must be strictly increasing".into()));
    }
    Ok(positions.windows(2).map(|w| (w[1] - w[0]) as u64).collect())
}

/// Positions of the tokens accepted by `is_rare`.
pub fn rare_positions(stream: &TokenStream, is_rare: impl Fn(u32) -> bool) -> Vec<usize> {
    stream
        .tokens()
        .iter()
        .enumerate()
        .filter(|(_, &t)| is_rare(t))
        .map(|(i, _)| i)
        .collect()
}

/// Interval sequence of the rarest words, with the quota on occurrences.
pub fn rare_word_intervals(stream: &TokenStream, rare_fraction: Ratio<u64>) -> Result<IntervalSequence> {
    rare_word_intervals_with(stream, rare_fraction, RareQuota::Occurrences)
}

/// Interval sequence of the rarest words.
///
/// Types are taken by ascending frequency, whole frequency classes at a
/// time, until the quota `ceil(rare_fraction * total)` is met, where the
/// total counts tokens or types according to `quota`.
pub fn rare_word_intervals_with(
    stream: &TokenStream,
    rare_fraction: Ratio<u64>,
    quota: RareQuota,
) -> Result<IntervalSequence> {
    if *rare_fraction.numer() == 0 || rare_fraction > Ratio::from_integer(1) {
        return Err(Error::InvalidArgument(format!("rare fraction {rare_fraction} outside (0, 1]")));
    }
    let mut counts = vec![0u64; stream.vocab().len()];
    for &t in stream.tokens() {
        counts[t as usize] += 1;
    }
    let types = counts.iter().filter(|&&c| c > 0).count();
    let needed = (Ratio::from_integer(1) / rare_fraction).ceil().to_integer() as usize;
    if types < needed {
        return Err(Error::VocabularyTooSmall { types, needed });
    }
    let total = match quota {
        RareQuota::Occurrences => stream.len() as u64,
        RareQuota::Types => types as u64,
    };
    let target = (rare_fraction * Ratio::from_integer(total)).ceil().to_integer();
    let mut classes: BTreeMap<u64, u64> = BTreeMap::new();
    for &c in counts.iter().filter(|&&c| c > 0) {
        *classes.entry(c).or_default() += 1;
    }
    let mut rare_types = 0;
    let mut covered = 0;
    let mut threshold_frequency = 0;
    for (&f, &k) in &classes {
        rare_types += k as usize;
        covered += match quota {
            RareQuota::Occurrences => f * k,
            RareQuota::Types => k,
        };
        threshold_frequency = f;
        if covered >= target {
            break;
        }
    }
    let positions = rare_positions(stream, |t| {
        let c = counts[t as usize];
        c > 0 && c <= threshold_frequency
    });
    let values = intervals_from_positions(&positions)?;
    Ok(IntervalSequence {
        values,
        rare_fraction,
        quota,
        threshold_rank: types - rare_types + 1,
        rare_types,
        threshold_frequency,
        first_position: positions[0],
        last_position: positions[positions.len() - 1],
    })
}

/// Autocorrelation at lag `s` of a real-valued sequence, with the global
/// mean and population variance and `(N - s)` normalization.
pub fn autocorrelation_values<T: Real>(values: &[T], s: usize) -> Result<T> {
    let n = values.len();
    if s >= n {
        return Err(Error::StreamTooShort { len: n, needed: s });
    }
    let nf = T::from_count(n as u64);
    let mu = compensated_sum(values.iter().copied()) / nf;
    let var = compensated_sum(values.iter().map(|&r| (r - mu) * (r - mu))) / nf;
    if var <= T::zero() {
        return Err(Error::ConstantSequence);
    }
    if s == 0 {
        return Ok(T::one());
    }
    let cov = compensated_sum(values.iter().zip(&values[s..]).map(|(&a, &b)| (a - mu) * (b - mu)));
    Ok(cov / (T::from_count((n - s) as u64) * var))
}

/// Integer moments shared by every lag.
struct Moments {
    n: i128,
    sum: i128,
    sum_sq: i128,
    prefix: Vec<i128>,
}

impl Moments {
    fn new(values: &[u64]) -> Option<Self> {
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0i128);
        let mut sum_sq = 0i128;
        for &v in values {
            let v = i128::from(v);
            prefix.push(prefix.last()? + v);
            sum_sq = sum_sq.checked_add(v.checked_mul(v)?)?;
        }
        Some(Self { n: values.len() as i128, sum: *prefix.last()?, sum_sq, prefix })
    }

    /// `N Q - S^2`, which is `N^2` times the population variance.
    fn scaled_variance(&self) -> Option<i128> {
        self.n.checked_mul(self.sum_sq)?.checked_sub(self.sum.checked_mul(self.sum)?)
    }

    fn ratio(&self, values: &[u64], s: usize) -> Option<Ratio<i128>> {
        let n = self.n as usize;
        let m = (n - s) as i128;
        let mut p = 0i128;
        for (&a, &b) in values.iter().zip(&values[s..]) {
            p = p.checked_add(i128::from(a).checked_mul(i128::from(b))?)?;
        }
        let head = self.prefix[n - s];
        let tail = self.sum - self.prefix[s];
        let num = self
            .n
            .checked_mul(self.n)?
            .checked_mul(p)?
            .checked_sub(self.n.checked_mul(self.sum)?.checked_mul(head + tail)?)?
            .checked_add(m.checked_mul(self.sum.checked_mul(self.sum)?)?)?;
        let den = m.checked_mul(self.scaled_variance()?)?;
        Some(Ratio::new(num, den))
    }
}

/// Autocorrelation of an interval sequence at lag `s`.
///
/// Evaluated as an exact rational in 128-bit integers and rounded once, so
/// affine rescaling by integers and reversal leave the result bit-identical.
/// Falls back to floating point if an intermediate would overflow.
pub fn autocorrelation<T: Real>(seq: &IntervalSequence, s: usize) -> Result<T> {
    autocorrelation_integer(&seq.values, s)
}

pub fn autocorrelation_integer<T: Real>(values: &[u64], s: usize) -> Result<T> {
    let n = values.len();
    if s >= n {
        return Err(Error::StreamTooShort { len: n, needed: s });
    }
    let moments = Moments::new(values);
    check_variance(moments.as_ref(), values)?;
    if s == 0 {
        return Ok(T::one());
    }
    exact_or_float(moments.as_ref(), values, s)
}

fn check_variance(moments: Option<&Moments>, values: &[u64]) -> Result<()> {
    let constant = match moments.and_then(Moments::scaled_variance) {
        Some(v) => v == 0,
        None => values.iter().all(|&v| v == values[0]),
    };
    if constant {
        Err(Error::ConstantSequence)
    } else {
        Ok(())
    }
}

fn exact_or_float<T: Real>(moments: Option<&Moments>, values: &[u64], s: usize) -> Result<T> {
    if let Some(r) = moments.and_then(|m| m.ratio(values, s)) {
        if let Some(v) = r.to_f64() {
            return Ok(T::lit(v));
        }
    }
    let floats: Vec<T> = values.iter().map(|&v| T::from_count(v)).collect();
    autocorrelation_values(&floats, s)
}

/// Autocorrelation over a set of lags, evaluated in parallel.
pub fn acf_curve<T: Real>(seq: &IntervalSequence, distances: &[u64]) -> Result<CorrelationSeries<T>> {
    let values = &seq.values;
    let d = normalize_distances(distances, 0, values.len())?;
    let moments = Moments::new(values);
    check_variance(moments.as_ref(), values)?;
    let points = d
        .par_iter()
        .map(|&s| {
            let v = if s == 0 { T::one() } else { exact_or_float(moments.as_ref(), values, s as usize)? };
            Ok((s, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationSeries { kind: CorrelationKind::Autocorrelation, points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preference {
    Power,
    Exponential,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayVerdict<T> {
    pub preferred: Preference,
    /// `log10 value` against `log10 s`; `None` with fewer than five usable points.
    pub power_fit: Option<PowerLawFit<T>>,
    /// `ln value` against `s`.
    pub exp_fit: Option<PowerLawFit<T>>,
    pub compare_range: (T, T),
    pub margin: T,
    /// Distances in range whose value was zero or negative.
    pub excluded_points: Vec<u64>,
}

/// Flat JSON form of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub preferred: Preference,
    pub gamma: Option<f64>,
    pub r2_power: Option<f64>,
    pub r2_exp: Option<f64>,
    pub excluded_points: Vec<u64>,
}

impl<T: Real> DecayVerdict<T> {
    /// Power-law decay exponent.
    pub fn gamma(&self) -> Option<T> {
        self.power_fit.map(|f| f.exponent)
    }

    pub fn summary(&self) -> VerdictSummary {
        VerdictSummary {
            preferred: self.preferred,
            gamma: self.gamma().map(Real::as_f64),
            r2_power: self.power_fit.map(|f| f.r_squared.as_f64()),
            r2_exp: self.exp_fit.map(|f| f.r_squared.as_f64()),
            excluded_points: self.excluded_points.clone(),
        }
    }
}

/// Power versus exponential decay with the default r² margin of 0.05.
pub fn classify_decay<T: Real>(series: &CorrelationSeries<T>, compare_range: (T, T)) -> DecayVerdict<T> {
    classify_decay_with_margin(series, compare_range, T::lit(DEFAULT_DECAY_MARGIN))
}

/// Power is preferred when its r² beats the exponential r² by more than
/// `margin`; the verdict is indeterminate when both r² are below 0.5 or
/// fewer than five positive points fall in range.
pub fn classify_decay_with_margin<T: Real>(
    series: &CorrelationSeries<T>,
    compare_range: (T, T),
    margin: T,
) -> DecayVerdict<T> {
    let (lo, hi) = compare_range;
    let mut positive = Vec::new();
    let mut excluded_points = Vec::new();
    for &(s, v) in &series.points {
        let x = T::from_count(s);
        if s == 0 || x < lo || x > hi {
            continue;
        }
        if v > T::zero() && v.is_finite() {
            positive.push((x, v));
        } else {
            excluded_points.push(s);
        }
    }
    let mut verdict = DecayVerdict {
        preferred: Preference::Indeterminate,
        power_fit: None,
        exp_fit: None,
        compare_range,
        margin,
        excluded_points,
    };
    if positive.len() < MIN_DECAY_POINTS {
        return verdict;
    }
    let (Ok(power), Ok(exp)) = (
        fit_line(&positive, compare_range, Scale::LogLog, LawKind::Decay),
        fit_line(&positive, compare_range, Scale::SemiLogY, LawKind::Decay),
    ) else {
        return verdict;
    };
    let half = T::lit(0.5);
    verdict.preferred = if power.r_squared < half && exp.r_squared < half {
        Preference::Indeterminate
    } else if power.r_squared > exp.r_squared + margin {
        Preference::Power
    } else {
        Preference::Exponential
    };
    verdict.power_fit = Some(power);
    verdict.exp_fit = Some(exp);
    verdict
}
