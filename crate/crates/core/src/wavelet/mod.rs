//! One-dimensional discrete wavelet transform.
//!
//! Every convolution uses half-point symmetric extension at both signal ends.
//! Filtering `n` samples with an `L`-tap frame and downsampling by two yields
//! `(n + L - 1) / 2` coefficients; the length at every level is recorded so the
//! inverse recovers exactly `n` samples.

mod filters;
mod transform;

pub use filters::{Filter, FilterBank, UnknownWavelet, WaveletFamily};
pub use transform::{
    adaptive_level, band_len, decompose, drift_level, max_level, reconstruct, reconstruct_band,
    reconstruct_detail_only, Band, WaveletCoefficients, WaveletError,
};
