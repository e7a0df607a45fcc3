//! Output-SNR theory for the three-level quantizer.
//!
//! For a weak sinusoid in unit-variance Rayleigh noise, the quantizer's
//! output SNR is
//!
//! ```text
//! μ = A²(f₊ + f₋)² / (2·[(1 - F₊ + F₋) - (1 - F₊ - F₋)²])
//! ```
//!
//! with `F±`, `f±` the noise cdf/pdf at the normalized threshold arguments
//! `±γ + m`. μ is non-monotonic in γ with a single interior maximum — the
//! stochastic-resonance peak — whose location is independent of the
//! amplitude. `optimal_threshold` solves the stationarity condition for
//! that peak; `empirical_snr` measures the same ratio from data via the
//! periodogram, and `threshold_sweep` repeats the measurement over a grid
//! of thresholds to locate the peak empirically.

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::numeric::{bisect_sign_change, mix_seed};
use crate::quantizer::{quantize, threshold_stats, QuantizerConfig};
use crate::signal_synth::{phase_from_seed, synthesize, SignalSpec};

/// A sampled μ(γ) curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrCurve {
    pub gammas: Vec<f64>,
    pub mu_values: Vec<f64>,
}

impl SnrCurve {
    /// Render as CSV with columns `gamma,mu`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gamma,mu\n");
        for (g, mu) in self.gammas.iter().zip(&self.mu_values) {
            out.push_str(&format!("{g},{mu}\n"));
        }
        out
    }
}

struct GammaTerms {
    /// f₊ + f₋ and its γ-derivative.
    u: f64,
    du: f64,
    /// The variance denominator and its γ-derivative.
    d: f64,
    dd: f64,
}

fn gamma_terms(gamma: f64) -> GammaTerms {
    let cfg = QuantizerConfig::normalized(gamma).expect("gamma validated by caller");
    let st = threshold_stats(&cfg);
    let (fp, fm) = (st.pdf_upper, st.pdf_lower);
    let (cap_fp, cap_fm) = (st.cdf_upper, st.cdf_lower);
    let s = cap_fp + cap_fm;
    GammaTerms {
        u: fp + fm,
        // d/dγ f(γ+m) = f'(γ+m); d/dγ f(-γ+m) = -f'(-γ+m)
        du: st.pdf_deriv_upper - st.pdf_deriv_lower,
        // (1 - F₊ + F₋) - (1 - F₊ - F₋)² simplifies to F₊ + 3F₋ - (F₊+F₋)²
        d: cap_fp + 3.0 * cap_fm - s * s,
        dd: fp - 3.0 * fm - 2.0 * s * (fp - fm),
    }
}

/// Theoretical output SNR of the quantizer at normalized threshold `gamma`
/// for a sinusoid of normalized amplitude `amplitude`.
pub fn theoretical_mu(gamma: f64, amplitude: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be > 0, got {gamma}")));
    }
    let t = gamma_terms(gamma);
    if !(t.d > f64::MIN_POSITIVE) {
        return Err(Error::numeric(format!(
            "output variance underflows at gamma = {gamma}; the SNR ratio is undefined there"
        )));
    }
    Ok(amplitude * amplitude * t.u * t.u / (2.0 * t.d))
}

/// Analytic dμ/dγ (same domain as [`theoretical_mu`]).
pub fn mu_derivative(gamma: f64, amplitude: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be > 0, got {gamma}")));
    }
    let t = gamma_terms(gamma);
    if !(t.d > f64::MIN_POSITIVE) {
        return Err(Error::numeric(format!(
            "output variance underflows at gamma = {gamma}"
        )));
    }
    Ok(amplitude * amplitude * t.u * (2.0 * t.du * t.d - t.u * t.dd) / (2.0 * t.d * t.d))
}

/// The two sides of the stationarity identity satisfied at the SNR peak:
/// `(f₊+f₋) / (2(f₊+f₋)') = D / D'` with `'` denoting d/dγ and `D` the
/// output-variance denominator. Both sides agree at the optimum.
pub fn stationarity_balance(gamma: f64) -> (f64, f64) {
    let t = gamma_terms(gamma);
    (t.u / (2.0 * t.du), t.d / t.dd)
}

/// Bracket on which dμ/dγ changes sign exactly once.
const OPT_BRACKET: (f64, f64) = (0.2, 3.0);

/// Solve the stationarity condition for the SNR-maximizing threshold.
/// The result is amplitude-free (μ scales as A²).
pub fn optimal_threshold() -> Result<f64> {
    // root of 2 u' D - u D', the numerator of dμ/dγ
    let slope = |g: f64| {
        let t = gamma_terms(g);
        2.0 * t.du * t.d - t.u * t.dd
    };
    bisect_sign_change(slope, OPT_BRACKET.0, OPT_BRACKET.1, 1e-12).map_err(|_| {
        Error::numeric(format!(
            "no stationary point of the output SNR found in [{}, {}]",
            OPT_BRACKET.0, OPT_BRACKET.1
        ))
    })
}

/// Periodogram-based output SNR: power in the bins nearest the fundamental
/// and its harmonics (±1 bin each, up to Nyquist) over the power in every
/// other nonzero-frequency bin. Rectangular window, no padding.
pub fn empirical_snr(samples: &[f64], f0: f64) -> Result<f64> {
    if !(f0 > 0.0 && f0 < 0.5) {
        return Err(Error::invalid(format!("f0 must lie in (0, 0.5), got {f0}")));
    }
    let n = samples.len();
    if (n as f64) < 2.0 / f0 {
        return Err(Error::invalid(format!(
            "series too short for f0 = {f0}: {n} samples, need at least {}",
            (2.0 / f0).ceil()
        )));
    }
    let mut planner = FftPlanner::new();
    empirical_snr_with_planner(samples, f0, &mut planner)
}

fn empirical_snr_with_planner(
    samples: &[f64],
    f0: f64,
    planner: &mut FftPlanner<f64>,
) -> Result<f64> {
    let n = samples.len();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fft.process(&mut buf);
    let half = n / 2;
    let power: Vec<f64> = buf[..half + 1].iter().map(|c| c.norm_sqr()).collect();

    let mut is_harmonic = vec![false; half + 1];
    let mut k = 1usize;
    loop {
        let center = (k as f64 * f0 * n as f64).round() as usize;
        if center > half {
            break;
        }
        let lo = center.saturating_sub(1).max(1);
        let hi = (center + 1).min(half);
        for flag in &mut is_harmonic[lo..=hi] {
            *flag = true;
        }
        k += 1;
    }

    let mut num = 0.0;
    let mut den = 0.0;
    for b in 1..=half {
        if is_harmonic[b] {
            num += power[b];
        } else {
            den += power[b];
        }
    }
    if den <= 0.0 {
        // an all-zero record carries neither signal nor noise power
        return Ok(if num > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Ok(num / den)
}

/// Configuration of an empirical threshold sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Normalized sinusoid amplitude.
    pub amplitude: f64,
    /// Noise std; also used to place the quantizer thresholds.
    pub sigma: f64,
    pub n_trials: usize,
    pub n_samples: usize,
    /// Normalized frequency.
    pub f0: f64,
    /// Ascending threshold grid.
    pub gammas: Vec<f64>,
    pub seed: u64,
}

impl SweepConfig {
    /// The grid used by default: γ from 0.2 to 3.0 in steps of 0.05.
    pub fn default_gammas() -> Vec<f64> {
        (0..=56).map(|i| 0.2 + i as f64 * 0.05).collect()
    }
}

/// Result of [`threshold_sweep`]: the trial-averaged μ(γ) curve and each
/// trial's empirical argmax.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub curve: SnrCurve,
    pub per_trial_argmax: Vec<f64>,
}

impl SweepResult {
    pub fn mean_argmax(&self) -> f64 {
        self.per_trial_argmax.iter().sum::<f64>() / self.per_trial_argmax.len() as f64
    }
}

/// For each trial, synthesize a noisy sinusoid, quantize it across the γ
/// grid and measure the empirical SNR; record the per-trial argmax. Trials
/// run concurrently and deterministically (seed mixed per trial).
pub fn threshold_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.n_trials == 0 || cfg.n_samples == 0 {
        return Err(Error::invalid(
            "threshold_sweep: trials and samples must be positive",
        ));
    }
    if cfg.gammas.is_empty() {
        return Err(Error::invalid("threshold_sweep: empty gamma grid"));
    }
    if cfg.gammas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "threshold_sweep: gammas must be strictly ascending",
        ));
    }
    if !(cfg.sigma > 0.0) || !(cfg.amplitude >= 0.0) {
        return Err(Error::invalid(
            "threshold_sweep: sigma must be > 0 and amplitude >= 0",
        ));
    }

    let per_trial: Result<Vec<(Vec<f64>, f64)>> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = mix_seed(cfg.seed, trial as u64);
            let spec = SignalSpec {
                amplitude: cfg.amplitude,
                freq: cfg.f0,
                phase: phase_from_seed(trial_seed),
                sigma: cfg.sigma,
                n_samples: cfg.n_samples,
                seed: trial_seed,
            };
            let ts = synthesize(&spec)?;
            let mut planner = FftPlanner::new();
            let mut values = Vec::with_capacity(cfg.gammas.len());
            for &g in &cfg.gammas {
                let qcfg = QuantizerConfig::new(g, cfg.sigma)?;
                let (ternary, _) = quantize(&ts, &qcfg);
                let as_real: Vec<f64> = ternary.iter().map(|&v| v as f64).collect();
                values.push(empirical_snr_with_planner(&as_real, cfg.f0, &mut planner)?);
            }
            let argmax = cfg.gammas[values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0)];
            Ok((values, argmax))
        })
        .collect();
    let per_trial = per_trial?;

    let mut mean = vec![0.0; cfg.gammas.len()];
    let mut argmaxes = Vec::with_capacity(cfg.n_trials);
    for (values, argmax) in per_trial {
        for (acc, v) in mean.iter_mut().zip(values) {
            *acc += v;
        }
        argmaxes.push(argmax);
    }
    for v in &mut mean {
        *v /= cfg.n_trials as f64;
    }
    Ok(SweepResult {
        curve: SnrCurve {
            gammas: cfg.gammas.clone(),
            mu_values: mean,
        },
        per_trial_argmax: argmaxes,
    })
}
