//! Amplitude estimators for a weak sinusoid in Rayleigh noise.
//!
//! Two families:
//!
//! * linear (full-waveform): lock-in quadrature correlation and the
//!   maximum-likelihood estimator on the raw record;
//! * quantized (stochastic-resonance): estimators that see the record only
//!   through the three-level quantizer — the lower-crossover inversion
//!   (numeric and closed-form), the quantized-data MLE (iterative and
//!   closed-form) and the expected-power matcher.
//!
//! All estimators work on the σ-normalized record and report both the
//! normalized and the physical amplitude.

mod linear;
mod quantized;

pub use linear::{estimate_sigma, lockin_estimate, mle_linear_estimate, noise_scale_from_mean};
pub use quantized::{
    crossover_estimate_closed, crossover_estimate_numeric, power_estimate, qmle_closed,
    qmle_iterative,
};

use serde::Serialize;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quantizer::{quantize, QuantizerConfig};
use crate::signal_synth::TimeSeries;
use crate::sr_theory::optimal_threshold;

/// The available estimation methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Lockin,
    MleLinear,
    CrossoverNumeric,
    CrossoverClosed,
    QmleIterative,
    QmleClosed,
    Power,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Lockin,
        Method::MleLinear,
        Method::CrossoverNumeric,
        Method::CrossoverClosed,
        Method::QmleIterative,
        Method::QmleClosed,
        Method::Power,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Lockin => "lockin",
            Method::MleLinear => "mle_linear",
            Method::CrossoverNumeric => "crossover_numeric",
            Method::CrossoverClosed => "crossover_closed",
            Method::QmleIterative => "qmle_iterative",
            Method::QmleClosed => "qmle_closed",
            Method::Power => "power",
        }
    }

    /// Whether the method sees the data only through the quantizer.
    pub fn is_quantized(&self) -> bool {
        !matches!(self, Method::Lockin | Method::MleLinear)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lockin" => Ok(Method::Lockin),
            "mle_linear" => Ok(Method::MleLinear),
            "crossover_numeric" => Ok(Method::CrossoverNumeric),
            "crossover_closed" => Ok(Method::CrossoverClosed),
            "qmle_iterative" => Ok(Method::QmleIterative),
            "qmle_closed" => Ok(Method::QmleClosed),
            "power" => Ok(Method::Power),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected one of: lockin, mle_linear, \
                 crossover_numeric, crossover_closed, qmle_iterative, qmle_closed, power)"
            ))),
        }
    }
}

/// An amplitude estimate with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeEstimate {
    pub method: Method,
    /// Estimated physical amplitude `A·σ`.
    pub amplitude_physical: f64,
    /// Estimated normalized amplitude `A`.
    pub amplitude_normalized: f64,
    /// σ adopted for normalization.
    pub sigma_used: f64,
    pub converged: bool,
    pub iterations: usize,
    /// True when a negative radicand / below-floor statistic was clamped
    /// to zero (or a closed form fell back to its numeric root).
    pub clamped: bool,
}

impl AmplitudeEstimate {
    pub(crate) fn new(method: Method, normalized: f64, sigma: f64) -> Self {
        AmplitudeEstimate {
            method,
            amplitude_physical: normalized * sigma,
            amplitude_normalized: normalized,
            sigma_used: sigma,
            converged: true,
            iterations: 0,
            clamped: false,
        }
    }

    pub(crate) fn with_flags(mut self, converged: bool, iterations: usize, clamped: bool) -> Self {
        self.converged = converged;
        self.iterations = iterations;
        self.clamped = clamped;
        self
    }
}

/// Run any method on a raw series. For the quantized methods the series is
/// quantized at threshold `gamma` (the SNR-optimal threshold when `None`)
/// with the noise scale taken from the record's mean.
pub fn estimate(
    series: &TimeSeries,
    method: Method,
    f0: f64,
    gamma: Option<f64>,
) -> Result<AmplitudeEstimate> {
    match method {
        Method::Lockin => lockin_estimate(series, f0),
        Method::MleLinear => mle_linear_estimate(series, f0),
        quantized => {
            let sigma = noise_scale_from_mean(series)?;
            let gamma = match gamma {
                Some(g) => g,
                None => optimal_threshold()?,
            };
            let cfg = QuantizerConfig::new(gamma, sigma)?;
            let (ternary, counts) = quantize(series, &cfg);
            match quantized {
                Method::CrossoverNumeric => crossover_estimate_numeric(&counts, &cfg, f0),
                Method::CrossoverClosed => crossover_estimate_closed(&counts, &cfg),
                Method::QmleIterative => qmle_iterative(&ternary, &cfg, f0),
                Method::QmleClosed => qmle_closed(&counts, &cfg),
                Method::Power => power_estimate(&counts, &cfg, f0),
                _ => unreachable!(),
            }
        }
    }
}
