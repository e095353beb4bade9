//! Encoding rate of text prefixes under an external compressor, and the
//! `A n^(β-1) + h` ansatz fit.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::RawText;
use crate::error::{Error, Result};
use crate::num::{compensated_sum, Real};

/// Overrides the compressor program (the first word of the template).
pub const COMPRESSOR_ENV: &str = "LEXLAWS_COMPRESSOR";
pub const DEFAULT_TEMPLATE: &str = "lexlaws-ppmd {input} {output}";
pub const DEFAULT_PREFIX_POINTS: usize = 20;
pub const DEFAULT_MIN_PREFIX: usize = 1000;

/// A compressor invoked as `program args...` with `{input}` and `{output}`
/// replaced by file paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressorSpec {
    pub argv: Vec<String>,
}

impl CompressorSpec {
    /// Splits a template with shell quoting rules.
    pub fn from_template(template: &str) -> Result<Self> {
        let argv = shlex::split(template)
            .ok_or_else(|| Error::InvalidArgument(format!("unbalanced quotes in compressor template {template:?}")))?;
        if argv.is_empty() {
            return Err(Error::InvalidArgument("compressor template is empty".into()));
        }
        if !argv.iter().any(|a| a.contains("{input}")) || !argv.iter().any(|a| a.contains("{output}")) {
            return Err(Error::InvalidArgument(
                "compressor template needs both {input} and {output} placeholders".into(),
            ));
        }
        Ok(Self { argv })
    }

    /// Replaces the program with the value of `LEXLAWS_COMPRESSOR` when set.
    pub fn with_env_override(mut self) -> Self {
        if let Some(p) = std::env::var_os(COMPRESSOR_ENV).filter(|p| !p.is_empty()) {
            self.argv[0] = p.to_string_lossy().into_owned();
        }
        self
    }

    pub fn program(&self) -> &str {
        &self.argv[0]
    }

    pub fn template(&self) -> String {
        shlex::try_join(self.argv.iter().map(String::as_str)).unwrap_or_else(|_| self.argv.join(" "))
    }

    /// First line of `program --version`, or the template when the program
    /// does not report one.
    pub fn identify(&self) -> String {
        let out = Command::new(self.program())
            .arg("--version")
            .stdin(Stdio::null())
            .stderr(Stdio::null())
            .output();
        match out {
            Ok(o) if o.status.success() => String::from_utf8_lossy(&o.stdout)
                .lines()
                .next()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map_or_else(|| self.template(), String::from),
            _ => self.template(),
        }
    }

    /// Compressed size in bytes of `data`.
    pub fn compressed_size(&self, data: &[u8]) -> Result<u64> {
        let fail = |detail: String| Error::Compressor { command: self.template(), detail };
        let dir = tempfile::tempdir()?;
        let input = dir.path().join("input.txt");
        let output = dir.path().join("output.bin");
        std::fs::write(&input, data).map_err(|e| Error::file(&input, e))?;
        let sub = |a: &String| {
            a.replace("{input}", &input.to_string_lossy())
                .replace("{output}", &output.to_string_lossy())
        };
        let result = Command::new(sub(&self.argv[0]))
            .args(self.argv[1..].iter().map(sub))
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .output()
            .map_err(|e| fail(e.to_string()))?;
        if !result.status.success() {
            return Err(fail(format!(
                "{}: {}",
                result.status,
                String::from_utf8_lossy(&result.stderr).trim()
            )));
        }
        std::fs::metadata(&output)
            .map(|m| m.len())
            .map_err(|e| fail(format!("no output file: {e}")))
    }
}

/// Program path for the bundled compressor: next to the running executable
/// when present, otherwise looked up on `PATH`.
pub fn bundled_compressor() -> PathBuf {
    let name = format!("lexlaws-ppmd{}", std::env::consts::EXE_SUFFIX);
    std::env::current_exe()
        .ok()
        .and_then(|exe| exe.parent().map(|d| d.join(&name)))
        .filter(|p| p.is_file())
        .unwrap_or_else(|| PathBuf::from(name))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint<T> {
    pub n: u64,
    pub bytes: u64,
    /// Bits per character.
    pub r: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingRateCurve<T> {
    pub points: Vec<RatePoint<T>>,
    pub compressor_id: String,
}

impl<T: Real> EncodingRateCurve<T> {
    pub fn rate_at(&self, n: u64) -> Option<T> {
        self.points.iter().find(|p| p.n == n).map(|p| p.r)
    }

    /// Compressed size never shrinks as the prefix grows.
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[0].bytes <= w[1].bytes)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n", "bytes", "r"])?;
        for p in &self.points {
            w.write_record([p.n.to_string(), p.bytes.to_string(), p.r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `8 * bytes / n`.
pub fn encoding_rate<T: Real>(compressed_bytes: u64, n: u64) -> Result<T> {
    if n == 0 {
        return Err(Error::InvalidArgument("prefix length must be positive".into()));
    }
    Ok(T::lit(8.0) * T::from_count(compressed_bytes) / T::from_count(n))
}

/// `points` log-spaced prefix lengths from `min(lo, len)` to `len`.
pub fn default_prefix_lengths(len: usize, lo: usize, points: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    let lo = lo.clamp(1, len);
    if points < 2 || lo == len {
        return vec![len];
    }
    let (a, b) = ((lo as f64).log10(), (len as f64).log10());
    let mut out: Vec<usize> = (0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64).round() as usize)
        .map(|n| n.clamp(lo, len))
        .collect();
    *out.last_mut().expect("points >= 2") = len;
    out.dedup();
    out
}

/// Compresses each prefix on a pool of at most `workers` threads.
pub fn encoding_rate_curve<T: Real>(
    text: &RawText,
    prefix_lengths: &[usize],
    compressor: &CompressorSpec,
    workers: usize,
) -> Result<EncodingRateCurve<T>> {
    let mut ns = prefix_lengths.to_vec();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(Error::InvalidArgument("no prefix lengths".into()));
    }
    if ns[0] == 0 {
        return Err(Error::InvalidArgument("prefix length must be positive".into()));
    }
    let len = text.len();
    if let Some(&max) = ns.last().filter(|&&m| m > len) {
        return Err(Error::StreamTooShort { len, needed: max });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let points = pool.install(|| {
        ns.par_iter()
            .map(|&n| {
                let bytes = compressor.compressed_size(text.prefix_bytes(n))?;
                Ok(RatePoint { n: n as u64, bytes, r: encoding_rate(bytes, n as u64)? })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(EncodingRateCurve { points, compressor_id: compressor.identify() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzFit<T> {
    #[serde(rename = "A")]
    pub a: T,
    pub beta: T,
    pub h: T,
    /// Root-mean-square residual.
    pub residual: T,
    /// False when the best start hit the iteration limit.
    pub converged: bool,
}

impl<T: Real> AnsatzFit<T> {
    pub fn eval(&self, n: T) -> T {
        ansatz(self.a, self.beta, self.h, n)
    }
}

fn ansatz<T: Real>(a: T, beta: T, h: T, n: T) -> T {
    a * n.powf(beta - T::one()) + h
}

const MAX_ITER: usize = 1000;
const BETA_FLOOR: f64 = 1e-6;

fn project<T: Real>(p: [T; 3]) -> [T; 3] {
    [
        p[0].max(T::zero()),
        p[1].max(T::lit(BETA_FLOOR)).min(T::one()),
        p[2].max(T::zero()),
    ]
}

fn sum_sq<T: Real>(p: &[T; 3], data: &[(T, T)]) -> T {
    compensated_sum(data.iter().map(|&(n, r)| {
        let e = ansatz(p[0], p[1], p[2], n) - r;
        e * e
    }))
}

/// Solves the symmetric 3x3 system by Gaussian elimination with partial pivoting.
fn solve3<T: Real>(mut m: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if m[piv][col].abs() <= T::min_positive_value() {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot = m[col];
            for (x, &p) in m[row].iter_mut().zip(&pivot).skip(col) {
                *x -= f * p;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= m[row][k] * x[k];
        }
        x[row] = s / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Projected Levenberg-Marquardt from one start; returns parameters, cost
/// and whether a stopping tolerance was met.
fn levenberg_marquardt<T: Real>(start: [T; 3], data: &[(T, T)]) -> ([T; 3], T, bool) {
    let mut p = project(start);
    let mut cost = sum_sq(&p, data);
    let mut lambda = T::lit(1e-3);
    let tol = T::epsilon() * T::lit(16.0);
    for _ in 0..MAX_ITER {
        if cost <= T::min_positive_value() {
            return (p, cost, true);
        }
        let mut jtj = [[T::zero(); 3]; 3];
        let mut jtr = [T::zero(); 3];
        for &(n, r) in data {
            let pw = n.powf(p[1] - T::one());
            let j = [pw, p[0] * pw * n.ln(), T::one()];
            let e = p[0] * pw + p[2] - r;
            for a in 0..3 {
                jtr[a] += j[a] * e;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        while lambda < T::lit(1e16) {
            let mut m = jtj;
            for (d, row) in m.iter_mut().enumerate() {
                row[d] += lambda * jtj[d][d].max(T::epsilon());
            }
            let Some(delta) = solve3(m, [-jtr[0], -jtr[1], -jtr[2]]) else {
                lambda *= T::lit(10.0);
                continue;
            };
            let trial = project([p[0] + delta[0], p[1] + delta[1], p[2] + delta[2]]);
            let trial_cost = sum_sq(&trial, data);
            if trial_cost < cost {
                let step = (0..3).map(|i| (trial[i] - p[i]).abs() / (p[i].abs() + tol)).fold(T::zero(), T::max);
                let gain = (cost - trial_cost) / cost;
                p = trial;
                cost = trial_cost;
                lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
                improved = true;
                if gain <= tol || step <= tol {
                    return (p, cost, true);
                }
                break;
            }
            lambda *= T::lit(10.0);
        }
        if !improved {
            // No descent direction left at machine precision: a stationary point.
            return (p, cost, true);
        }
    }
    (p, cost, false)
}

/// Least-squares fit of `A n^(β-1) + h` with `A ≥ 0`, `β ∈ (0, 1]`, `h ≥ 0`.
///
/// Starts from every β in {0.1, …, 0.9} and h in {0, min r / 2, 0.9 min r},
/// with A from the linear least-squares solution for that (β, h); the best
/// end point wins.
pub fn fit_ansatz<T: Real>(points: &[(T, T)]) -> Result<AnsatzFit<T>> {
    if points.len() < 4 {
        return Err(Error::InsufficientPoints { got: points.len(), needed: 4 });
    }
    if let Some(&(n, _)) = points.iter().find(|(n, r)| *n <= T::zero() || !r.is_finite()) {
        return Err(Error::NonPositive { at: n.as_f64(), value: n.as_f64() });
    }
    let min_r = points.iter().map(|p| p.1).fold(T::infinity(), T::min).max(T::zero());
    let mut best: Option<([T; 3], T, bool)> = None;
    for bi in 1..=9 {
        let beta = T::lit(bi as f64 / 10.0);
        for h in [T::zero(), min_r / T::lit(2.0), min_r * T::lit(0.9)] {
            let (sxy, sxx) = points.iter().fold((T::zero(), T::zero()), |(sxy, sxx), &(n, r)| {
                let x = n.powf(beta - T::one());
                (sxy + x * (r - h), sxx + x * x)
            });
            let a = if sxx > T::zero() { sxy / sxx } else { T::zero() };
            let run = levenberg_marquardt([a, beta, h], points);
            if best.as_ref().is_none_or(|b| run.1 < b.1) {
                best = Some(run);
            }
        }
    }
    let (p, cost, converged) = best.expect("grid is non-empty");
    Ok(AnsatzFit {
        a: p[0],
        beta: p[1],
        h: p[2],
        residual: (cost / T::from_count(points.len() as u64)).sqrt(),
        converged,
    })
}

/// Fits the ansatz to an encoding-rate curve.
pub fn fit_curve<T: Real>(curve: &EncodingRateCurve<T>) -> Result<AnsatzFit<T>> {
    let pts: Vec<(T, T)> = curve.points.iter().map(|p| (T::from_count(p.n), p.r)).collect();
    fit_ansatz(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_definition() {
        assert_eq!(encoding_rate::<f64>(1250, 10_000).unwrap(), 1.0);
        assert!(encoding_rate::<f64>(1, 0).is_err());
    }

    #[test]
    fn recovers_synthetic_ansatz() {
        let ns = default_prefix_lengths(10_000_000, 1000, 20);
        assert_eq!(ns.len(), 20);
        let pts: Vec<(f64, f64)> = ns.iter().map(|&n| (n as f64, 10.0 * (n as f64).powf(-0.3) + 1.0)).collect();
        let fit = fit_ansatz(&pts).unwrap();
        assert!((fit.a - 10.0).abs() < 0.1, "{fit:?}");
        assert!((fit.beta - 0.7).abs() < 0.007, "{fit:?}");
        assert!((fit.h - 1.0).abs() < 0.01, "{fit:?}");
        assert!(fit.residual < 1e-9);
        assert!(fit.converged);
    }

    #[test]
    fn flat_curve() {
        let pts: Vec<(f64, f64)> = (3..10).map(|e| (10f64.powi(e), 2.5)).collect();
        let fit = fit_ansatz(&pts).unwrap();
        assert!(fit.residual < 1e-9, "{fit:?}");
        assert!(fit.beta == 1.0 || fit.a < 1e-6, "{fit:?}");
        assert!((fit.eval(1e5) - 2.5).abs() < 1e-9);
    }

    #[test]
    fn needs_four_points() {
        let pts = [(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)];
        assert!(matches!(fit_ansatz(&pts), Err(Error::InsufficientPoints { got: 3, needed: 4 })));
    }

    #[test]
    fn prefix_grid() {
        let g = default_prefix_lengths(5000, 1000, 20);
        assert_eq!((g[0], *g.last().unwrap()), (1000, 5000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_prefix_lengths(500, 1000, 20), vec![500]);
    }

    #[test]
    fn template_parsing() {
        let c = CompressorSpec::from_template("xz -c -9 '{input}' --out={output}").unwrap();
        assert_eq!(c.program(), "xz");
        assert_eq!(c.argv.len(), 5);
        assert!(CompressorSpec::from_template("gzip {input}").is_err());
        assert!(CompressorSpec::from_template("").is_err());
    }

    #[cfg(unix)]
    #[test]
    fn shell_compressor_roundtrip() {
        let c = CompressorSpec::from_template("sh -c 'head -c 10 \"$0\" > \"$1\"' {input} {output}").unwrap();
        assert_eq!(c.compressed_size(b"hello world, longer than ten").unwrap(), 10);
        let bad = CompressorSpec::from_template("sh -c 'exit 3' {input} {output}").unwrap();
        assert!(matches!(bad.compressed_size(b"x"), Err(Error::Compressor { .. })));
        let text = RawText::unicode("abcdefghij".repeat(300), "t").unwrap();
        let curve: EncodingRateCurve<f64> = encoding_rate_curve(&text, &[2000, 1000, 3000], &c, 2).unwrap();
        assert_eq!(curve.points.iter().map(|p| p.n).collect::<Vec<_>>(), vec![1000, 2000, 3000]);
        assert!(curve.is_monotone());
        assert!(encoding_rate_curve::<f64>(&text, &[4000], &c, 2).is_err());
    }
}
