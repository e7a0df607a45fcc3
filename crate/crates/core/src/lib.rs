//! Estimation of weak sinusoid amplitudes buried in Rayleigh noise using
//! stochastic resonance in a three-level quantizer.
//!
//! The crate provides:
//!
//! * [`noise_model`] — the Rayleigh noise law (unit-variance form), sampling
//!   and scale fitting;
//! * [`signal_synth`] — synthesis of noisy test sinusoids and phantom scans;
//! * [`quantizer`] — the three-level quantizer and its output statistics;
//! * [`sr_theory`] — the theoretical output SNR, the optimal-threshold
//!   solver and the periodogram-based empirical SNR;
//! * [`estimators`] — the amplitude estimators (lock-in, full-waveform MLE,
//!   lower-crossover inversion, quantized MLE, expected-power matching);
//! * [`scan_pipeline`] — multi-position scans, dataset I/O and object
//!   detection.

// Validation sites use negated comparisons (`!(x > 0.0)`) on purpose: they
// reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod noise_model;
mod numeric;
pub mod quantizer;
pub mod scan_pipeline;
pub mod signal_synth;
pub mod sr_theory;

pub use error::{Error, Result};
pub use estimators::{estimate, AmplitudeEstimate, Method};
pub use noise_model::RayleighParams;
pub use numeric::mix_seed;
pub use quantizer::{QuantizedCounts, QuantizerConfig, ThresholdStats};
pub use scan_pipeline::{ScanDataset, ScanProfile};
pub use signal_synth::{Phantom, SignalSpec, TimeSeries};
pub use sr_theory::{SnrCurve, SweepConfig, SweepResult};
