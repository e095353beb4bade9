//! Per-text analysis reports with provenance, and side-by-side comparisons.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{EncodingMode, RawText};
use crate::encrate::{default_prefix_lengths, encoding_rate_curve, fit_curve, AnsatzFit, CompressorSpec, EncodingRateCurve};
use crate::error::{Error, Result};
use crate::fit::PowerLawFit;
use crate::longrange::{
    acf_curve, classify_decay, default_distances, default_rare_fraction, mi_curve, rare_word_intervals_with,
    CorrelationSeries, DecayVerdict, Preference, RareQuota,
};
use crate::sidecar::PseudoTextMeta;
use crate::tokens::{tokenize, tokenize_words, TokenMode};
use crate::zipfheaps::{
    fit_heaps, tail_crossing, vocabulary_growth, zipf_analysis, BinnedSeries, GrowthCurve, ZipfConfig,
    DEFAULT_BINS_PER_DECADE, DEFAULT_GROWTH_SAMPLES_PER_DECADE, DEFAULT_HEAPS_LO, DEFAULT_ZIPF_RANGE,
};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every knob of a full analysis. Serialized into each report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub ns: Vec<usize>,
    pub zipf_range: (f64, f64),
    pub bins_per_decade: u32,
    pub heaps_lo: f64,
    pub growth_samples_per_decade: u32,
    pub rare_fraction: Ratio<u64>,
    pub rare_quota: RareQuota,
    /// `None` selects the default log grid for the stream length.
    pub mi_distances: Option<Vec<u64>>,
    pub acf_distances: Option<Vec<u64>>,
    pub mi_compare_range: (f64, f64),
    pub acf_compare_range: (f64, f64),
    /// Compressor template; `None` skips the encoding-rate section.
    pub compressor: Option<String>,
    pub prefix_points: usize,
    pub min_prefix: usize,
    pub workers: usize,
    /// Word delimiter for byte-mode texts; unicode texts split on spaces.
    pub word_marker: u8,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            ns: vec![1, 2, 3, 4, 5],
            zipf_range: DEFAULT_ZIPF_RANGE,
            bins_per_decade: DEFAULT_BINS_PER_DECADE,
            heaps_lo: DEFAULT_HEAPS_LO,
            growth_samples_per_decade: DEFAULT_GROWTH_SAMPLES_PER_DECADE,
            rare_fraction: default_rare_fraction(),
            rare_quota: RareQuota::Occurrences,
            mi_distances: None,
            acf_distances: None,
            mi_compare_range: (1.0, 10.0),
            acf_compare_range: (1.0, 1000.0),
            compressor: None,
            prefix_points: crate::encrate::DEFAULT_PREFIX_POINTS,
            min_prefix: crate::encrate::DEFAULT_MIN_PREFIX,
            workers: 4,
            word_marker: crate::corpus::DEFAULT_BOUNDARY_MARKER,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() || self.ns.contains(&0) {
            return Err(Error::InvalidArgument("n-gram set must be non-empty and positive".into()));
        }
        for (name, (lo, hi)) in [
            ("zipf", self.zipf_range),
            ("mi compare", self.mi_compare_range),
            ("acf compare", self.acf_compare_range),
        ] {
            if lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) {
                return Err(Error::InvalidArgument(format!("{name} range ({lo}, {hi}) is empty")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    Ok(InputDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
}

/// What went in: no timestamps, so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub config: AnalysisConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pseudo_text: Option<PseudoTextMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compressor_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZipfSection {
    pub n: usize,
    pub types: usize,
    pub windows: u64,
    pub fit: Option<PowerLawFit<f64>>,
    pub binned: BinnedSeries<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeapsSection {
    pub tokens: u64,
    pub vocabulary: u64,
    pub fit: PowerLawFit<f64>,
    pub growth: GrowthCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSection {
    pub series: CorrelationSeries<f64>,
    pub verdict: DecayVerdict<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfSection {
    pub intervals: usize,
    pub rare_types: usize,
    pub threshold_frequency: u64,
    pub mean_interval: f64,
    #[serde(flatten)]
    pub correlation: CorrelationSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSection {
    pub curve: EncodingRateCurve<f64>,
    pub ansatz: Option<AnsatzFit<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextReport {
    pub label: String,
    pub characters: u64,
    pub provenance: Provenance,
    pub zipf: Vec<ZipfSection>,
    /// First rank where the binned 2-gram curve meets the unigram curve.
    pub tail_crossing: Option<f64>,
    pub heaps: HeapsSection,
    pub mutual_information: CorrelationSection,
    pub autocorrelation: AcfSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoding_rate: Option<EncodingSection>,
}

impl TextReport {
    pub fn zipf_exponent(&self, n: usize) -> Option<f64> {
        self.zipf.iter().find(|z| z.n == n)?.fit.map(|f| f.exponent)
    }
}

/// Runs every law on one text. Word statistics use space-delimited words
/// (marker-delimited for byte-mode text); mutual information uses
/// characters (bytes for byte-mode text).
pub fn analyze_text(text: &RawText, label: &str, config: &AnalysisConfig, inputs: Vec<InputDigest>) -> Result<TextReport> {
    config.validate()?;
    let (words, symbols) = match text.encoding_mode() {
        EncodingMode::Unicode => (tokenize(text, TokenMode::Word)?, tokenize(text, TokenMode::Character)?),
        EncodingMode::Byte => (tokenize_words(text, config.word_marker)?, tokenize(text, TokenMode::Byte)?),
    };

    let zcfg = ZipfConfig { ns: config.ns.clone(), bins_per_decade: config.bins_per_decade, fit_range: config.zipf_range };
    let zipf: Vec<ZipfSection> = zipf_analysis::<f64>(&words, &zcfg)?
        .into_iter()
        .map(|z| ZipfSection { n: z.n, types: z.table.len(), windows: z.table.total(), fit: z.fit, binned: z.binned })
        .collect();
    let crossing = match (zipf.iter().find(|z| z.n == 1), zipf.iter().find(|z| z.n == 2)) {
        (Some(a), Some(b)) => tail_crossing(&a.binned, &b.binned),
        _ => None,
    };

    let growth = vocabulary_growth(&words, config.growth_samples_per_decade)?;
    let heaps = HeapsSection {
        tokens: growth.final_length(),
        vocabulary: growth.final_vocabulary(),
        fit: fit_heaps(&growth, config.heaps_lo)?,
        growth,
    };

    let mi_d = config.mi_distances.clone().unwrap_or_else(|| default_distances(symbols.len()));
    let mi = mi_curve::<f64>(&symbols, &mi_d)?;
    let mi_verdict = classify_decay(&mi, config.mi_compare_range);

    let seq = rare_word_intervals_with(&words, config.rare_fraction, config.rare_quota)?;
    let acf_d = config.acf_distances.clone().unwrap_or_else(|| default_distances(seq.len()));
    let acf = acf_curve::<f64>(&seq, &acf_d)?;
    let acf_verdict = classify_decay(&acf, config.acf_compare_range);

    let encoding_rate = match &config.compressor {
        None => None,
        Some(template) => {
            let spec = CompressorSpec::from_template(template)?.with_env_override();
            let ns = default_prefix_lengths(text.len(), config.min_prefix, config.prefix_points);
            let curve = encoding_rate_curve::<f64>(text, &ns, &spec, config.workers)?;
            let ansatz = fit_curve(&curve).ok();
            Some(EncodingSection { curve, ansatz })
        }
    };

    Ok(TextReport {
        label: label.to_owned(),
        characters: text.len() as u64,
        provenance: Provenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            inputs,
            config: config.clone(),
            pseudo_text: None,
            compressor_id: encoding_rate.as_ref().map(|e| e.curve.compressor_id.clone()),
        },
        zipf,
        tail_crossing: crossing,
        heaps,
        mutual_information: CorrelationSection { series: mi, verdict: mi_verdict },
        autocorrelation: AcfSection {
            intervals: seq.len(),
            rare_types: seq.rare_types,
            threshold_frequency: seq.threshold_frequency,
            mean_interval: seq.mean(),
            correlation: CorrelationSection { series: acf, verdict: acf_verdict },
        },
        encoding_rate,
    })
}

/// Largest |C(s)| over `s ≥ 1`.
pub fn max_abs_correlation(series: &CorrelationSeries<f64>) -> Option<f64> {
    series.points.iter().filter(|p| p.0 >= 1).map(|p| p.1.abs()).reduce(f64::max)
}

/// Paired curve as `(s, value_a, value_b, b - a)` over distances both share.
fn paired(a: &CorrelationSeries<f64>, b: &CorrelationSeries<f64>) -> Vec<(u64, f64, f64, f64)> {
    a.points
        .iter()
        .filter_map(|&(s, va)| b.value_at(s).map(|vb| (s, va, vb, vb - va)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub original: String,
    pub other: String,
    /// `other − original` for each exponent both texts produced.
    pub deltas: BTreeMap<String, f64>,
    pub mi_pairs: Vec<(u64, f64, f64, f64)>,
    pub acf_pairs: Vec<(u64, f64, f64, f64)>,
    /// Qualitative expectations for a pseudo-text against its source.
    pub checks: BTreeMap<String, bool>,
}

/// Compares `other` (typically a pseudo-text) against `original`.
pub fn compare(original: &TextReport, other: &TextReport) -> Comparison {
    let mut deltas = BTreeMap::new();
    for z in &original.zipf {
        if let (Some(a), Some(b)) = (z.fit, other.zipf_exponent(z.n)) {
            deltas.insert(format!("zipf_xi_n{}", z.n), b - a.exponent);
        }
    }
    deltas.insert("heaps_zeta".into(), other.heaps.fit.exponent - original.heaps.fit.exponent);
    let gamma = |r: &TextReport| r.autocorrelation.correlation.verdict.gamma();
    if let (Some(a), Some(b)) = (gamma(original), gamma(other)) {
        deltas.insert("acf_gamma".into(), b - a);
    }
    let last_rate = |r: &TextReport| r.encoding_rate.as_ref().and_then(|e| e.curve.points.last().map(|p| (p.n, p.r)));
    let mut checks = BTreeMap::new();
    if let (Some((na, ra)), Some((nb, rb))) = (last_rate(original), last_rate(other)) {
        if na == nb {
            deltas.insert("encoding_rate_final".into(), rb - ra);
            checks.insert("other_rate_not_below_original".into(), rb >= ra);
        }
    }
    let xi = |n| deltas.get(&format!("zipf_xi_n{n}")).map(|d: &f64| d.abs() <= 0.1);
    if let Some(ok) = xi(1) {
        checks.insert("unigram_xi_within_0.1".into(), ok);
    }
    if let Some(ok) = xi(2) {
        checks.insert("bigram_xi_within_0.1".into(), ok);
    }
    checks.insert("other_zeta_exceeds_original".into(), other.heaps.fit.exponent > original.heaps.fit.exponent);
    checks.insert(
        "other_acf_flat".into(),
        max_abs_correlation(&other.autocorrelation.correlation.series).is_some_and(|m| m < 0.05),
    );
    checks.insert(
        "original_acf_power".into(),
        original.autocorrelation.correlation.verdict.preferred == Preference::Power,
    );
    checks.insert(
        "mi_verdicts_agree".into(),
        original.mutual_information.verdict.preferred == other.mutual_information.verdict.preferred,
    );
    Comparison {
        original: original.label.clone(),
        other: other.label.clone(),
        deltas,
        mi_pairs: paired(&original.mutual_information.series, &other.mutual_information.series),
        acf_pairs: paired(&original.autocorrelation.correlation.series, &other.autocorrelation.correlation.series),
        checks,
    }
}

/// One row of a fits CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub quantity: String,
    pub n: Option<u64>,
    pub fit: PowerLawFit<f64>,
}

/// CSV rows `quantity,n,exponent,intercept,lo,hi,r2`.
pub fn write_fits_csv<W: Write>(writer: W, rows: &[FitRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["quantity", "n", "exponent", "intercept", "lo", "hi", "r2"])?;
    for r in rows {
        w.write_record([
            r.quantity.clone(),
            r.n.map(|n| n.to_string()).unwrap_or_default(),
            r.fit.exponent.to_string(),
            r.fit.log_intercept.to_string(),
            r.fit.fit_range.0.to_string(),
            r.fit.fit_range.1.to_string(),
            r.fit.r_squared.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{monkey_generate, MonkeySpec};

    fn sample() -> RawText {
        monkey_generate(&MonkeySpec::new(6, 0.2, 4, 200_000).unwrap())
    }

    #[test]
    fn self_comparison_is_null() {
        let text = sample();
        let cfg = AnalysisConfig { ns: vec![1, 2], zipf_range: (2.0, 1e4), ..Default::default() };
        let r = analyze_text(&text, "a", &cfg, vec![]).unwrap();
        let c = compare(&r, &r);
        assert!(c.deltas.values().all(|&d| d == 0.0), "{:?}", c.deltas);
        assert!(c.mi_pairs.iter().chain(&c.acf_pairs).all(|p| p.3 == 0.0 && p.1 == p.2));
        assert!(!c.checks["other_zeta_exceeds_original"]);
        assert!(c.checks["unigram_xi_within_0.1"]);
    }

    #[test]
    fn report_is_deterministic() {
        let text = sample();
        let cfg = AnalysisConfig { ns: vec![1], zipf_range: (2.0, 1e4), ..Default::default() };
        let a = serde_json::to_string(&analyze_text(&text, "a", &cfg, vec![]).unwrap()).unwrap();
        let b = serde_json::to_string(&analyze_text(&text, "a", &cfg, vec![]).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(!a.contains("time"));
    }

    #[test]
    fn fits_csv_layout() {
        let fit = PowerLawFit {
            exponent: 1.0,
            log_intercept: 3.0,
            fit_range: (10.0, 1e4),
            r_squared: 0.99,
            scale: crate::fit::Scale::LogLog,
            kind: crate::fit::LawKind::Decay,
            points_used: 31,
        };
        let mut buf = Vec::new();
        write_fits_csv(&mut buf, &[FitRow { quantity: "zipf".into(), n: Some(1), fit }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "quantity,n,exponent,intercept,lo,hi,r2\nzipf,1,1,3,10,10000,0.99\n");
    }

    #[test]
    fn digest_hex() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = AnalysisConfig { ns: vec![], ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = AnalysisConfig { mi_compare_range: (5.0, 1.0), ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
