//! Statistical laws of text: Zipf rank-frequency and Heaps vocabulary-growth
//! exponents, long-range correlation (mutual information and rare-word
//! interval autocorrelation), encoding-rate decay, and baseline pseudo-text
//! generators to compare natural text against.
//!
//! The numeric code is generic over [`num::Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, with `*32` variants for `f32`.

pub mod corpus;
pub mod encrate;
pub mod error;
pub mod fit;
pub mod generators;
pub mod longrange;
pub mod num;
pub mod output;
pub mod report;
pub mod cli;
pub mod sidecar;
pub mod tokens;
pub mod zipfheaps;

pub use error::{Error, Result};

pub type PowerLawFit = fit::PowerLawFit<f64>;
pub type PowerLawFit32 = fit::PowerLawFit<f32>;
pub type BinnedSeries = zipfheaps::BinnedSeries<f64>;
pub type BinnedSeries32 = zipfheaps::BinnedSeries<f32>;
pub type CorrelationSeries = longrange::CorrelationSeries<f64>;
pub type CorrelationSeries32 = longrange::CorrelationSeries<f32>;
pub type DecayVerdict = longrange::DecayVerdict<f64>;
pub type DecayVerdict32 = longrange::DecayVerdict<f32>;
pub type EncodingRateCurve = encrate::EncodingRateCurve<f64>;
pub type EncodingRateCurve32 = encrate::EncodingRateCurve<f32>;
pub type AnsatzFit = encrate::AnsatzFit<f64>;
pub type AnsatzFit32 = encrate::AnsatzFit<f32>;
pub type AnalyticMonkeyLaw = generators::AnalyticMonkeyLaw<f64>;
pub type AnalyticMonkeyLaw32 = generators::AnalyticMonkeyLaw<f32>;
pub type RareFraction = num_rational::Ratio<u64>;
