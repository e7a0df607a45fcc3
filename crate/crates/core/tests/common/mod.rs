//! Shared helpers for the integration suites: statistics utilities and a
//! Monte Carlo harness that runs every estimator over seeded realizations.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srq_core::estimators::{
    crossover_estimate_closed, crossover_estimate_numeric, lockin_estimate, mle_linear_estimate,
    power_estimate, qmle_closed, qmle_iterative,
};
use srq_core::mix_seed;
use srq_core::quantizer::{quantize, QuantizerConfig};
use srq_core::signal_synth::{phase_from_seed, synthesize, SignalSpec};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn mean_abs_rel_err(estimates: &[f64], truth: f64) -> f64 {
    estimates.iter().map(|e| (e - truth).abs()).sum::<f64>() / (estimates.len() as f64 * truth)
}

pub fn rel_err_of_mean(estimates: &[f64], truth: f64) -> f64 {
    (mean(estimates) - truth).abs() / truth
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Standard normal draw (Box-Muller).
pub fn normal_draw<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-16);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Asymptotic Kolmogorov-Smirnov p-value for statistic `d` at sample size `n`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let sign = if k % 2 == 1 { 2.0 } else { -2.0 };
        p += sign * (-2.0 * (k as f64 * lambda).powi(2)).exp();
    }
    p.clamp(0.0, 1.0)
}

/// Per-seed estimates of every method in one offset experiment.
#[derive(Debug, Default, Clone)]
pub struct MethodRuns {
    pub lockin: Vec<f64>,
    pub mle_linear: Vec<f64>,
    pub crossover_numeric: Vec<f64>,
    pub crossover_closed: Vec<f64>,
    pub qmle_iterative: Vec<f64>,
    pub qmle_closed: Vec<f64>,
    pub power: Vec<f64>,
}

pub struct ExperimentConfig {
    pub amplitude: f64,
    pub f0: f64,
    /// Relative offset on the estimators' assumed frequency.
    pub freq_offset: f64,
    pub n_samples: usize,
    pub n_seeds: usize,
    pub gamma: f64,
    pub base_seed: u64,
    /// Iterative quantized MLE is costly; skip it when not gated.
    pub run_qmle_iterative: bool,
    pub run_mle_linear: bool,
}

/// Run the estimator battery over seeded realizations. The record is
/// synthesized at the true frequency; estimators are handed the offset one.
/// Quantized methods share one quantization per seed (noise scale from the
/// record mean), mirroring the library's dispatch. Seeds run concurrently;
/// results are collected in seed order, so the output is deterministic.
pub fn run_experiment(cfg: &ExperimentConfig) -> MethodRuns {
    use rayon::prelude::*;
    let f0_assumed = cfg.f0 * (1.0 + cfg.freq_offset);
    let per_seed: Vec<[f64; 7]> = (0..cfg.n_seeds)
        .into_par_iter()
        .map(|s| {
            let seed = mix_seed(cfg.base_seed, s as u64);
            let spec = SignalSpec {
                amplitude: cfg.amplitude,
                freq: cfg.f0,
                phase: phase_from_seed(seed),
                sigma: 1.0,
                n_samples: cfg.n_samples,
                seed,
            };
            let ts = synthesize(&spec).expect("valid spec");
            let sigma = srq_core::estimators::noise_scale_from_mean(&ts).expect("positive record");
            let qcfg = QuantizerConfig::new(cfg.gamma, sigma).expect("valid config");
            let (ternary, counts) = quantize(&ts, &qcfg);
            [
                lockin_estimate(&ts, f0_assumed)
                    .unwrap()
                    .amplitude_normalized,
                if cfg.run_mle_linear {
                    mle_linear_estimate(&ts, f0_assumed)
                        .unwrap()
                        .amplitude_normalized
                } else {
                    f64::NAN
                },
                crossover_estimate_numeric(&counts, &qcfg, f0_assumed)
                    .unwrap()
                    .amplitude_normalized,
                crossover_estimate_closed(&counts, &qcfg)
                    .unwrap()
                    .amplitude_normalized,
                if cfg.run_qmle_iterative {
                    qmle_iterative(&ternary, &qcfg, f0_assumed)
                        .unwrap()
                        .amplitude_normalized
                } else {
                    f64::NAN
                },
                qmle_closed(&counts, &qcfg).unwrap().amplitude_normalized,
                power_estimate(&counts, &qcfg, f0_assumed)
                    .unwrap()
                    .amplitude_normalized,
            ]
        })
        .collect();

    let mut out = MethodRuns::default();
    for row in per_seed {
        out.lockin.push(row[0]);
        if cfg.run_mle_linear {
            out.mle_linear.push(row[1]);
        }
        out.crossover_numeric.push(row[2]);
        out.crossover_closed.push(row[3]);
        if cfg.run_qmle_iterative {
            out.qmle_iterative.push(row[4]);
        }
        out.qmle_closed.push(row[5]);
        out.power.push(row[6]);
    }
    out
}

/// Deterministic per-seed RNG for test-local randomness.
pub fn test_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
