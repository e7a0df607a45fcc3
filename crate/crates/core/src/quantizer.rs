//! Three-level quantizer.
//!
//! A sample maps to `+1` above `σ(γ+m)`, to `-1` below `σ(-γ+m)`, and to `0`
//! between (ties quantize to 0; exact threshold hits are measure-zero for
//! continuous noise). `γ` is the threshold normalized by the noise std and
//! the thresholds sit symmetrically about the Rayleigh mean `m`.

use crate::error::{Error, Result};
use crate::noise_model::{cdf_unit, noise_mean, pdf_deriv_unit, pdf_unit, sf_unit};
use crate::signal_synth::TimeSeries;

/// Threshold configuration of the quantizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig {
    /// Normalized threshold `γ > 0` (units of `σ`).
    pub gamma: f64,
    /// Noise std used to place the physical thresholds.
    pub sigma: f64,
    /// Rayleigh mean offset of the unit-variance noise.
    pub m: f64,
}

impl QuantizerConfig {
    pub fn new(gamma: f64, sigma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::invalid(format!("gamma must be > 0, got {gamma}")));
        }
        if !(sigma > 0.0) {
            return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(QuantizerConfig {
            gamma,
            sigma,
            m: noise_mean(),
        })
    }

    /// Unit-σ configuration, used by the theory-side computations.
    pub fn normalized(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1.0)
    }

    /// Upper threshold argument in normalized units, `γ + m`.
    pub fn upper_arg(&self) -> f64 {
        self.gamma + self.m
    }

    /// Lower threshold argument in normalized units, `-γ + m`.
    /// May be negative for `γ > m`; the noise cdf clamps there.
    pub fn lower_arg(&self) -> f64 {
        -self.gamma + self.m
    }
}

/// Counts of the three output levels; the sufficient statistics of the
/// quantized record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedCounts {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

impl QuantizedCounts {
    pub fn total(&self) -> usize {
        self.n_plus + self.n_minus + self.n_zero
    }

    /// Tally a ternary sequence.
    pub fn from_ternary(y: &[i8]) -> Self {
        let mut c = QuantizedCounts {
            n_plus: 0,
            n_minus: 0,
            n_zero: 0,
        };
        for &v in y {
            match v {
                1 => c.n_plus += 1,
                -1 => c.n_minus += 1,
                _ => c.n_zero += 1,
            }
        }
        c
    }
}

/// Noise distribution values at the two (normalized) threshold arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdStats {
    /// cdf at `γ + m` and `-γ + m`.
    pub cdf_upper: f64,
    pub cdf_lower: f64,
    /// pdf at the same arguments.
    pub pdf_upper: f64,
    pub pdf_lower: f64,
    /// pdf derivative (with respect to the argument) at the same arguments.
    pub pdf_deriv_upper: f64,
    pub pdf_deriv_lower: f64,
}

/// Evaluate cdf, pdf and pdf derivative of the unit-variance noise at both
/// threshold arguments. All three are zero for nonpositive arguments
/// (the noise support is `[0, ∞)`).
pub fn threshold_stats(cfg: &QuantizerConfig) -> ThresholdStats {
    let up = cfg.upper_arg();
    let lo = cfg.lower_arg();
    ThresholdStats {
        cdf_upper: cdf_unit(up),
        cdf_lower: cdf_unit(lo),
        pdf_upper: pdf_unit(up),
        pdf_lower: pdf_unit(lo),
        pdf_deriv_upper: pdf_deriv_unit(up),
        pdf_deriv_lower: pdf_deriv_unit(lo),
    }
}

/// Quantize a series to `{-1, 0, +1}` and tally the level counts.
pub fn quantize(series: &TimeSeries, cfg: &QuantizerConfig) -> (Vec<i8>, QuantizedCounts) {
    let upper = cfg.sigma * cfg.upper_arg();
    let lower = cfg.sigma * cfg.lower_arg();
    let mut counts = QuantizedCounts {
        n_plus: 0,
        n_minus: 0,
        n_zero: 0,
    };
    let ternary = series
        .samples
        .iter()
        .map(|&x| {
            if x > upper {
                counts.n_plus += 1;
                1
            } else if x < lower {
                counts.n_minus += 1;
                -1
            } else {
                counts.n_zero += 1;
                0
            }
        })
        .collect();
    (ternary, counts)
}

/// Which form of the expected quantizer output to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanModel {
    /// The full expression `1 - F(γ+m-Ac) - F(-γ+m-Ac)`.
    Exact,
    /// Its first-order expansion in the amplitude (valid for `A ≪ 1`).
    Linearized,
}

/// Expected quantizer output `E[y_n]` at sample index `n` for a sinusoid of
/// normalized amplitude `amplitude` and frequency `f0`.
pub fn expected_output_mean(
    cfg: &QuantizerConfig,
    amplitude: f64,
    f0: f64,
    n: usize,
    model: MeanModel,
) -> f64 {
    let c = (2.0 * std::f64::consts::PI * f0 * n as f64).cos();
    match model {
        MeanModel::Exact => {
            1.0 - cdf_unit(cfg.upper_arg() - amplitude * c)
                - cdf_unit(cfg.lower_arg() - amplitude * c)
        }
        MeanModel::Linearized => {
            let st = threshold_stats(cfg);
            (1.0 - st.cdf_upper - st.cdf_lower) + amplitude * c * (st.pdf_upper + st.pdf_lower)
        }
    }
}

/// Time-averaged output variance of the quantizer on noise-only input,
/// `(1 - F₊ + F₋) - (1 - F₊ - F₋)²`.
pub fn time_avg_output_variance(cfg: &QuantizerConfig) -> f64 {
    let st = threshold_stats(cfg);
    let second_moment = 1.0 - st.cdf_upper + st.cdf_lower;
    let mean = 1.0 - st.cdf_upper - st.cdf_lower;
    second_moment - mean * mean
}

/// Probability that a noise-only sample crosses the upper threshold.
pub fn upper_crossing_prob(cfg: &QuantizerConfig) -> f64 {
    sf_unit(cfg.upper_arg())
}

/// Probability that a noise-only sample crosses the lower threshold.
pub fn lower_crossing_prob(cfg: &QuantizerConfig) -> f64 {
    cdf_unit(cfg.lower_arg())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise_model::sample;
    use crate::signal_synth::{synthesize, SignalSpec};

    fn series(v: Vec<f64>) -> TimeSeries {
        TimeSeries::new(v).unwrap()
    }

    #[test]
    fn constant_above_upper_threshold() {
        let cfg = QuantizerConfig::new(1.0, 2.0).unwrap();
        let x = series(vec![2.0 * cfg.upper_arg() + 1.0; 8]);
        let (y, c) = quantize(&x, &cfg);
        assert!(y.iter().all(|&v| v == 1));
        assert_eq!((c.n_plus, c.n_minus, c.n_zero), (8, 0, 0));
    }

    #[test]
    fn exact_threshold_ties_to_zero() {
        let cfg = QuantizerConfig::new(1.0, 1.0).unwrap();
        let up = cfg.upper_arg();
        let lo = cfg.lower_arg();
        let (y, c) = quantize(&series(vec![up, lo, up, lo]), &cfg);
        assert!(y.iter().all(|&v| v == 0));
        assert_eq!(c.n_zero, 4);
    }

    #[test]
    fn noise_only_lower_crossing_fraction() {
        // pure unit Rayleigh, γ = 1.064: N-/N matches cdf(m - 1.064)
        let n = 1_000_000;
        let cfg = QuantizerConfig::new(1.064, 1.0).unwrap();
        let x = series(sample(n, 1.0 / crate::noise_model::norm_a(), 21).unwrap());
        let (_, c) = quantize(&x, &cfg);
        let expect = lower_crossing_prob(&cfg);
        assert!((expect - 0.14333342140820982).abs() < 1e-12);
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        let got = c.n_minus as f64 / n as f64;
        assert!(
            (got - expect).abs() < 3.0 * se,
            "got {got}, expect {expect}"
        );
    }

    #[test]
    fn counts_conserve_total() {
        let ts = synthesize(&SignalSpec {
            amplitude: 0.2,
            freq: 0.12,
            phase: 1.0,
            sigma: 0.7,
            n_samples: 10_000,
            seed: 4,
        })
        .unwrap();
        let cfg = QuantizerConfig::new(0.8, 0.7).unwrap();
        let (y, c) = quantize(&ts, &cfg);
        assert_eq!(c.total(), ts.len());
        assert_eq!(QuantizedCounts::from_ternary(&y), c);
    }

    #[test]
    fn raising_gamma_never_raises_crossings() {
        let ts = synthesize(&SignalSpec {
            amplitude: 0.1,
            freq: 0.1,
            phase: 0.0,
            sigma: 1.0,
            n_samples: 20_000,
            seed: 6,
        })
        .unwrap();
        let mut prev: Option<QuantizedCounts> = None;
        for g in [0.3, 0.6, 1.0, 1.5, 2.2] {
            let cfg = QuantizerConfig::new(g, 1.0).unwrap();
            let (_, c) = quantize(&ts, &cfg);
            if let Some(p) = prev {
                assert!(c.n_plus <= p.n_plus);
                assert!(c.n_minus <= p.n_minus);
            }
            prev = Some(c);
        }
    }

    #[test]
    fn quantization_is_scale_invariant() {
        let ts = synthesize(&SignalSpec {
            amplitude: 0.15,
            freq: 0.07,
            phase: 2.0,
            sigma: 1.0,
            n_samples: 5_000,
            seed: 13,
        })
        .unwrap();
        let cfg = QuantizerConfig::new(1.064, 1.0).unwrap();
        let (y0, _) = quantize(&ts, &cfg);
        for c in [0.25f64, 0.5, 2.0, 1024.0] {
            let scaled = series(ts.samples.iter().map(|&x| c * x).collect());
            let cfg_c = QuantizerConfig::new(1.064, c).unwrap();
            let (yc, _) = quantize(&scaled, &cfg_c);
            assert_eq!(y0, yc, "scale {c}");
        }
    }

    #[test]
    fn threshold_stats_vanish_below_support() {
        // γ = m puts the lower threshold exactly at the origin
        let cfg = QuantizerConfig::new(noise_mean(), 1.0).unwrap();
        let st = threshold_stats(&cfg);
        assert_eq!(st.cdf_lower, 0.0);
        assert_eq!(st.pdf_lower, 0.0);
        assert_eq!(st.pdf_deriv_lower, 0.0);
        // γ > m: negative argument, still zero
        let cfg = QuantizerConfig::new(noise_mean() + 0.5, 1.0).unwrap();
        let st = threshold_stats(&cfg);
        assert_eq!(st.cdf_lower, 0.0);
    }

    #[test]
    fn pdf_derivative_matches_finite_differences() {
        // analytic f' against centered differences at spread-out arguments
        let h = 1e-5;
        for i in 0..20 {
            let w = 0.15 + i as f64 * 0.21;
            let fd = (pdf_unit(w + h) - pdf_unit(w - h)) / (2.0 * h);
            assert!(
                (pdf_deriv_unit(w) - fd).abs() < 1e-6,
                "w={w}: analytic={} fd={fd}",
                pdf_deriv_unit(w)
            );
        }
    }

    #[test]
    fn expected_mean_at_zero_amplitude() {
        let cfg = QuantizerConfig::new(1.064, 1.0).unwrap();
        let st = threshold_stats(&cfg);
        let want = 1.0 - st.cdf_upper - st.cdf_lower;
        for n in [0, 3, 17] {
            let got = expected_output_mean(&cfg, 0.0, 0.1, n, MeanModel::Exact);
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn linearized_mean_close_to_exact_at_low_amplitude() {
        // |exact - linearized| <= C·A² with C frozen from the curvature bound
        const C: f64 = 0.05;
        let cfg = QuantizerConfig::new(1.064, 1.0).unwrap();
        let amp = 0.1;
        for n in 0..40 {
            let e = expected_output_mean(&cfg, amp, 0.025, n, MeanModel::Exact);
            let l = expected_output_mean(&cfg, amp, 0.025, n, MeanModel::Linearized);
            assert!((e - l).abs() <= C * amp * amp, "n={n}: |{e} - {l}|");
        }
    }

    #[test]
    fn expected_mean_matches_monte_carlo_at_fixed_index() {
        let cfg = QuantizerConfig::new(1.064, 1.0).unwrap();
        let amp = 0.3;
        let f0 = 0.1;
        let n_index = 2; // cos(2π·0.1·2) = cos(0.4π) ≠ 0
        let reps = 100_000;
        let noise = sample(reps, 1.0 / crate::noise_model::norm_a(), 33).unwrap();
        let c = (2.0 * std::f64::consts::PI * f0 * n_index as f64).cos();
        let mut mean = 0.0;
        for w in noise {
            let x = amp * c + w;
            mean += if x > cfg.upper_arg() {
                1.0
            } else if x < cfg.lower_arg() {
                -1.0
            } else {
                0.0
            };
        }
        mean /= reps as f64;
        let expect = expected_output_mean(&cfg, amp, f0, n_index, MeanModel::Exact);
        // var(y) <= 1, so SE <= 1/sqrt(reps)
        assert!(
            (mean - expect).abs() < 3.0 / (reps as f64).sqrt(),
            "mc={mean} expect={expect}"
        );
    }

    #[test]
    fn output_variance_limits() {
        // γ → ∞: no crossings, variance 0
        let cfg = QuantizerConfig::new(60.0, 1.0).unwrap();
        assert!(time_avg_output_variance(&cfg).abs() < 1e-12);
        // bounded by 1 on a grid
        for i in 1..60 {
            let cfg = QuantizerConfig::new(i as f64 * 0.1, 1.0).unwrap();
            let v = time_avg_output_variance(&cfg);
            assert!((0.0..=1.0).contains(&v), "gamma={}: {v}", i as f64 * 0.1);
        }
    }

    #[test]
    fn output_variance_matches_monte_carlo() {
        let n = 1_000_000;
        let cfg = QuantizerConfig::new(1.064, 1.0).unwrap();
        let x = series(sample(n, 1.0 / crate::noise_model::norm_a(), 55).unwrap());
        let (y, _) = quantize(&x, &cfg);
        let mean = y.iter().map(|&v| v as f64).sum::<f64>() / n as f64;
        let var = y.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n as f64;
        let expect = time_avg_output_variance(&cfg);
        assert!(
            (var - expect).abs() / expect < 0.01,
            "mc={var} expect={expect}"
        );
    }
}
