//! Distortion, bitrate and sampling-rate tradeoffs for Gaussian stationary sources.

// `!(x > 0)` is used on purpose: it rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod scalar;
pub mod pcm;
pub mod quantize;
pub mod sampling;
pub mod simulate;
pub mod spectra;
pub mod waterfill;

pub use error::{AdxError, Result};
pub use scalar::Real;

pub type Psd64 = spectra::Psd<f64>;
pub type Psd32 = spectra::Psd<f32>;
pub type BandSet64 = spectra::BandSet<f64>;
pub type FilterSpec64 = sampling::FilterSpec<f64>;
pub type AdxPoint64 = sampling::AdxPoint<f64>;
pub type SamplerConfig64 = sampling::SamplerConfig<f64>;
pub type PcmPoint64 = pcm::PcmPoint<f64>;
pub type QuantizerSpec64 = quantize::QuantizerSpec<f64>;
pub type PathEnsemble64 = simulate::PathEnsemble<f64>;
