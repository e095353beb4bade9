//! Ordinary least squares on transformed coordinates.
//!
//! Every exponent the toolkit reports (Zipf, Heaps, the autocorrelation
//! decay and the epoch trend) comes out of [`fit_line`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{compensated_sum, Real};

/// Coordinate transform applied before the linear regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// log10(y) against log10(x): power laws.
    LogLog,
    /// y against log10(x): the epoch trend of an exponent.
    SemiLogX,
    /// ln(y) against x: exponential decay; the slope is the decay rate.
    SemiLogY,
}

/// Whether the reported exponent is the raw slope or its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    /// `y ∝ x^-exponent` (Zipf ξ, correlation γ, decay rates).
    Decay,
    /// `y ∝ x^exponent` (Heaps ζ, trends).
    Growth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T> {
    pub exponent: T,
    /// Intercept of the fitted line in transformed coordinates.
    pub log_intercept: T,
    /// Closed abscissa interval the points were selected from.
    pub fit_range: (T, T),
    pub r_squared: T,
    pub scale: Scale,
    pub kind: LawKind,
    pub points_used: usize,
}

impl<T: Real> PowerLawFit<T> {
    /// Slope of the fitted line in transformed coordinates.
    pub fn slope(&self) -> T {
        match self.kind {
            LawKind::Decay => -self.exponent,
            LawKind::Growth => self.exponent,
        }
    }

    /// Evaluates the fitted curve in the original coordinates.
    pub fn predict(&self, x: T) -> T {
        let slope = self.slope();
        match self.scale {
            Scale::LogLog => T::lit(10.0).powf(self.log_intercept + slope * x.log10()),
            Scale::SemiLogX => self.log_intercept + slope * x.log10(),
            Scale::SemiLogY => (self.log_intercept + slope * x).exp(),
        }
    }

    pub fn cast<U: Real>(&self) -> PowerLawFit<U> {
        let c = |v: T| U::lit(v.as_f64());
        PowerLawFit {
            exponent: c(self.exponent),
            log_intercept: c(self.log_intercept),
            fit_range: (c(self.fit_range.0), c(self.fit_range.1)),
            r_squared: c(self.r_squared),
            scale: self.scale,
            kind: self.kind,
            points_used: self.points_used,
        }
    }
}

/// Least-squares line through the points whose abscissa lies in `range`
/// (inclusive), after applying `scale`.
///
/// Needs at least three points in range. Log-transformed coordinates must be
/// strictly positive. `r_squared` is 1 when the residuals vanish.
pub fn fit_line<T: Real>(points: &[(T, T)], range: (T, T), scale: Scale, kind: LawKind) -> Result<PowerLawFit<T>> {
    let (lo, hi) = range;
    if lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) {
        return Err(Error::InvalidArgument(format!(
            "fit range ({}, {}) is empty",
            lo.as_f64(),
            hi.as_f64()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(x, y) in points.iter().filter(|(x, _)| *x >= lo && *x <= hi) {
        let log_x = matches!(scale, Scale::LogLog | Scale::SemiLogX);
        let log_y = matches!(scale, Scale::LogLog | Scale::SemiLogY);
        if (log_x && x <= T::zero()) || (log_y && y <= T::zero()) {
            return Err(Error::NonPositive {
                at: x.as_f64(),
                value: if log_x && x <= T::zero() { x.as_f64() } else { y.as_f64() },
            });
        }
        xs.push(if log_x { x.log10() } else { x });
        ys.push(match scale {
            Scale::LogLog => y.log10(),
            Scale::SemiLogY => y.ln(),
            Scale::SemiLogX => y,
        });
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientPoints { got: xs.len(), needed: 3 });
    }
    let (slope, intercept, r_squared) = ols(&xs, &ys)?;
    let exponent = match kind {
        LawKind::Decay => -slope,
        LawKind::Growth => slope,
    };
    Ok(PowerLawFit {
        exponent,
        log_intercept: intercept,
        fit_range: range,
        r_squared,
        scale,
        kind,
        points_used: xs.len(),
    })
}

/// Slope, intercept and coefficient of determination of `y = a + b x`.
pub(crate) fn ols<T: Real>(xs: &[T], ys: &[T]) -> Result<(T, T, T)> {
    let n = T::from_count(xs.len() as u64);
    let mean_x = compensated_sum(xs.iter().copied()) / n;
    let mean_y = compensated_sum(ys.iter().copied()) / n;
    let sxx = compensated_sum(xs.iter().map(|&x| (x - mean_x) * (x - mean_x)));
    if sxx <= T::zero() {
        return Err(Error::DegenerateRange);
    }
    let sxy = compensated_sum(xs.iter().zip(ys).map(|(&x, &y)| (x - mean_x) * (y - mean_y)));
    let syy = compensated_sum(ys.iter().map(|&y| (y - mean_y) * (y - mean_y)));
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = compensated_sum(xs.iter().zip(ys).map(|(&x, &y)| {
        let r = y - (intercept + slope * x);
        r * r
    }));
    let r_squared = if syy <= T::zero() || ss_res <= T::epsilon() * syy {
        T::one()
    } else {
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    };
    Ok((slope, intercept, r_squared))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_decay() {
        let pts: Vec<(f64, f64)> = (1..=1000).map(|u| (u as f64, 1000.0 / u as f64)).collect();
        let fit = fit_line(&pts, (1.0, 1000.0), Scale::LogLog, LawKind::Decay).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-12);
        assert!((fit.log_intercept - 3.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
        assert_eq!(fit.points_used, 1000);
    }

    #[test]
    fn range_selects_points() {
        let pts: Vec<(f64, f64)> = (1..=100).map(|u| (u as f64, (u as f64).powf(-0.5))).collect();
        let fit = fit_line(&pts, (10.0, 20.0), Scale::LogLog, LawKind::Decay).unwrap();
        assert_eq!(fit.points_used, 11);
        assert!((fit.exponent - 0.5).abs() < 1e-12);
    }

    #[test]
    fn semilog_y_recovers_rate() {
        let pts: Vec<(f64, f64)> = (1..=30).map(|s| (s as f64, (-(s as f64) / 5.0).exp())).collect();
        let fit = fit_line(&pts, (1.0, 30.0), Scale::SemiLogY, LawKind::Decay).unwrap();
        assert!((fit.exponent - 0.2).abs() < 1e-12);
        assert!((fit.predict(10.0) - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let two = [(1.0, 1.0), (2.0, 2.0)];
        assert!(matches!(
            fit_line(&two, (0.0, 10.0), Scale::LogLog, LawKind::Decay),
            Err(Error::InsufficientPoints { got: 2, needed: 3 })
        ));
        let neg = [(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)];
        assert!(matches!(
            fit_line(&neg, (0.0, 10.0), Scale::LogLog, LawKind::Decay),
            Err(Error::NonPositive { .. })
        ));
        let flat_x = [(2.0, 1.0), (2.0, 2.0), (2.0, 3.0)];
        assert!(matches!(
            fit_line(&flat_x, (0.0, 10.0), Scale::SemiLogX, LawKind::Growth),
            Err(Error::DegenerateRange)
        ));
        assert!(fit_line(&neg, (5.0, 1.0), Scale::SemiLogX, LawKind::Growth).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let pts: Vec<(f32, f32)> = (1..=200).map(|m| (m as f32, (m as f32).powf(0.75))).collect();
        let fit = fit_line(&pts, (1.0, 200.0), Scale::LogLog, LawKind::Growth).unwrap();
        assert!((fit.exponent - 0.75).abs() < 1e-4);
    }
}
