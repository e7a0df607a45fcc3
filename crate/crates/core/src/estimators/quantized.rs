//! Estimators that see the record only through the three-level quantizer.
//!
//! The lower-crossover and expected-power methods invert a period-averaged
//! model of the crossing probabilities; the quantized MLE maximizes the
//! ternary-sequence likelihood (iteratively over amplitude and phase, or in
//! closed form from the level counts under the low-amplitude expansion).

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::noise_model::{cdf_unit, norm_a_squared, sf_unit};
use crate::numeric::{
    bisect_increasing, bisect_sign_change, golden_max, period_average, BracketSolve,
};
use crate::quantizer::{threshold_stats, QuantizedCounts, QuantizerConfig, ThresholdStats};

use super::{AmplitudeEstimate, Method};

/// Bisection tolerance on the amplitude for the 1-D solves.
const AMP_TOL: f64 = 1e-9;

/// Golden-section tolerance on the amplitude inside the quantized MLE.
/// The phase-grid stage only ranks phase basins (the refinement bracket
/// spans a full grid step on each side, so an off-by-one basin pick still
/// contains the optimum); it runs coarse. The final solve at the refined
/// phase runs at full tolerance.
const QMLE_AMP_TOL_GRID: f64 = 1e-2;
const QMLE_AMP_TOL: f64 = 1e-6;

/// Size of the phase grid searched by the iterative quantized MLE.
const QMLE_PHASE_GRID: usize = 64;

fn counts_fractions(counts: &QuantizedCounts) -> Result<(f64, f64, f64)> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::invalid("empty counts"));
    }
    let n = n as f64;
    Ok((
        counts.n_plus as f64 / n,
        counts.n_minus as f64 / n,
        counts.n_zero as f64 / n,
    ))
}

/// Period-averaged probability that a sample crosses the lower threshold,
/// as a function of the normalized amplitude.
fn lower_crossover_mean(cfg: &QuantizerConfig, amplitude: f64) -> f64 {
    let lo = cfg.lower_arg();
    period_average(|c| cdf_unit(lo - amplitude * c))
}

/// Period-averaged expected output power `P(y=+1) + P(y=-1)`.
fn expected_power_mean(cfg: &QuantizerConfig, amplitude: f64) -> f64 {
    let up = cfg.upper_arg();
    let lo = cfg.lower_arg();
    period_average(|c| sf_unit(up - amplitude * c) + cdf_unit(lo - amplitude * c))
}

/// Invert the period-averaged lower-crossover probability for the
/// amplitude. The observed fraction is frequency-free (the average runs
/// over one full period), so `_f0` is accepted for interface parity only.
pub fn crossover_estimate_numeric(
    counts: &QuantizedCounts,
    cfg: &QuantizerConfig,
    _f0: f64,
) -> Result<AmplitudeEstimate> {
    let (_, pm, _) = counts_fractions(counts)?;
    let floor = lower_crossover_mean(cfg, 0.0);
    match bisect_increasing(
        |a| lower_crossover_mean(cfg, a) - pm,
        0.0,
        cfg.upper_arg(),
        AMP_TOL,
    )? {
        BracketSolve::Root(a, iters) => {
            Ok(
                AmplitudeEstimate::new(Method::CrossoverNumeric, a, cfg.sigma)
                    .with_flags(true, iters, false),
            )
        }
        BracketSolve::AtLowerEdge => Ok(AmplitudeEstimate::new(
            Method::CrossoverNumeric,
            0.0,
            cfg.sigma,
        )
        .with_flags(true, 0, pm < floor)),
    }
}

/// Closed-form crossover inversion under the low-amplitude expansion:
/// `A = sqrt(4·[N₋/N - F₋] / f₋')`. Frequency-free by construction.
pub fn crossover_estimate_closed(
    counts: &QuantizedCounts,
    cfg: &QuantizerConfig,
) -> Result<AmplitudeEstimate> {
    let st = threshold_stats(cfg);
    if st.pdf_deriv_lower <= 0.0 {
        return Err(Error::InvalidConfiguration(format!(
            "closed-form crossover needs a rising noise density at the lower threshold; \
             gamma = {} places it past the density mode",
            cfg.gamma
        )));
    }
    let (_, pm, _) = counts_fractions(counts)?;
    let radicand = 4.0 * (pm - st.cdf_lower) / st.pdf_deriv_lower;
    let (a, clamped) = if radicand < 0.0 {
        (0.0, true)
    } else {
        (radicand.sqrt(), false)
    };
    Ok(AmplitudeEstimate::new(Method::CrossoverClosed, a, cfg.sigma).with_flags(true, 0, clamped))
}

/// Match the period-averaged expected output power to the observed
/// nonzero fraction `(N₊ + N₋)/N`. Frequency-free like the crossover
/// inversion; `_f0` is kept for interface parity.
pub fn power_estimate(
    counts: &QuantizedCounts,
    cfg: &QuantizerConfig,
    _f0: f64,
) -> Result<AmplitudeEstimate> {
    let (pp, pm, _) = counts_fractions(counts)?;
    let observed = pp + pm;
    let floor = expected_power_mean(cfg, 0.0);
    match bisect_increasing(
        |a| expected_power_mean(cfg, a) - observed,
        0.0,
        cfg.upper_arg(),
        AMP_TOL,
    )? {
        BracketSolve::Root(a, iters) => {
            Ok(AmplitudeEstimate::new(Method::Power, a, cfg.sigma).with_flags(true, iters, false))
        }
        BracketSolve::AtLowerEdge => Ok(AmplitudeEstimate::new(Method::Power, 0.0, cfg.sigma)
            .with_flags(true, 0, observed < floor)),
    }
}

/// Terms of the count-based score equation under the low-amplitude
/// expansion, as a function of β = A².
struct ScoreTerms {
    n_plus: f64,
    n_minus: f64,
    n_zero: f64,
    p: f64,
    q: f64,
    r: f64,
    fp_up: f64,
    fp_lo: f64,
}

impl ScoreTerms {
    fn new(counts: &QuantizedCounts, st: &ThresholdStats) -> Self {
        ScoreTerms {
            n_plus: counts.n_plus as f64,
            n_minus: counts.n_minus as f64,
            n_zero: counts.n_zero as f64,
            p: 1.0 - st.cdf_upper,
            q: st.cdf_lower,
            r: st.cdf_upper - st.cdf_lower,
            fp_up: st.pdf_deriv_upper,
            fp_lo: st.pdf_deriv_lower,
        }
    }

    /// The three probability terms at β; all must stay positive for the
    /// score to be meaningful.
    fn probs(&self, beta: f64) -> (f64, f64, f64) {
        (
            self.p - 0.25 * beta * self.fp_up,
            self.q + 0.25 * beta * self.fp_lo,
            self.r + 0.25 * beta * (self.fp_up - self.fp_lo),
        )
    }

    /// d/dβ of the count log-likelihood under the expansion.
    fn score(&self, beta: f64) -> f64 {
        let (p1, pm1, p0) = self.probs(beta);
        -self.n_plus * self.fp_up / p1
            + self.n_minus * self.fp_lo / pm1
            + self.n_zero * (self.fp_up - self.fp_lo) / p0
    }

    /// Largest β keeping all three probability terms positive, capped at
    /// `(γ+m)²`.
    fn beta_cap(&self, cfg: &QuantizerConfig) -> f64 {
        let mut cap = cfg.upper_arg() * cfg.upper_arg();
        for (num, den) in [
            (self.p, 0.25 * self.fp_up),
            (self.q, -0.25 * self.fp_lo),
            (self.r, -0.25 * (self.fp_up - self.fp_lo)),
        ] {
            if den > 0.0 {
                cap = cap.min(num / den * 0.999_999);
            }
        }
        cap
    }
}

/// Closed-form quantized MLE: the count score is rational in β = A², and
/// clearing denominators yields the quadratic `aβ² + bβ + c = 0`, taking
/// the root `β = (-b - sqrt(b² - 4ac)) / (2a)`. On a negative discriminant
/// or negative root the estimator falls back to the numeric root of the
/// score (flagging `clamped`), and clamps to zero when no root exists.
pub fn qmle_closed(counts: &QuantizedCounts, cfg: &QuantizerConfig) -> Result<AmplitudeEstimate> {
    let n = counts.total();
    if n == 0 {
        return Err(Error::invalid("empty counts"));
    }
    let st = threshold_stats(cfg);
    let t = ScoreTerms::new(counts, &st);
    let (fp_up, fp_lo) = (t.fp_up, t.fp_lo);
    let w = fp_up - fp_lo;

    let a = -(n as f64) * fp_up * fp_lo * w / 16.0;
    let b = 0.25
        * (-fp_up * fp_lo * t.r * (t.n_plus + t.n_minus)
            + w * (-t.n_plus * fp_up * t.q
                + t.n_minus * fp_lo * t.p
                + t.n_zero * (t.p * fp_lo - t.q * fp_up)));
    let c = t.r * (-t.n_plus * fp_up * t.q + t.n_minus * fp_lo * t.p) + t.q * t.n_zero * w * t.p;

    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 && a != 0.0 {
        let beta = (-b - disc.sqrt()) / (2.0 * a);
        if beta >= 0.0 {
            return Ok(AmplitudeEstimate::new(
                Method::QmleClosed,
                beta.sqrt(),
                cfg.sigma,
            ));
        }
    }
    // fall back to the numeric root of the score on [0, β_cap]
    let cap = t.beta_cap(cfg);
    let root = if cap > 0.0 {
        bisect_sign_change(|beta| t.score(beta), 0.0, cap, AMP_TOL * AMP_TOL).ok()
    } else {
        None
    };
    let beta = root.unwrap_or(0.0).max(0.0);
    Ok(
        AmplitudeEstimate::new(Method::QmleClosed, beta.sqrt(), cfg.sigma)
            .with_flags(true, 0, true),
    )
}

/// Log-likelihood of a ternary record for amplitude `amp` and phase
/// `(cos φ, sin φ)`, with the per-sample modulation read from precomputed
/// carrier tables. Returns `-inf` when any observed symbol has zero
/// probability at the candidate.
#[allow(clippy::too_many_arguments)]
fn ternary_log_likelihood(
    y: &[i8],
    cos_t: &[f64],
    sin_t: &[f64],
    up: f64,
    lo: f64,
    amp: f64,
    cos_phi: f64,
    sin_phi: f64,
) -> f64 {
    let half_a2 = 0.5 * norm_a_squared();
    // the two threshold arguments always differ by up - lo = 2γ, so the
    // zero-level probability factors as e^{-a²l²/2}·(1 - e^{-2a²γ(l+γ)})
    let two_gamma = up - lo;
    let gamma = 0.5 * two_gamma;
    let mut acc = 0.0;
    for i in 0..y.len() {
        let c = cos_phi * cos_t[i] - sin_phi * sin_t[i];
        let arg_up = up - amp * c;
        let arg_lo = lo - amp * c;
        match y[i] {
            1 => {
                // ln sf(arg_up): exactly -a²w²/2 on the support, 0 below it
                if arg_up > 0.0 {
                    acc -= half_a2 * arg_up * arg_up;
                }
            }
            -1 => {
                if arg_lo <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let p = -(-half_a2 * arg_lo * arg_lo).exp_m1();
                if p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                acc += p.ln();
            }
            _ => {
                if arg_up <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                if arg_lo > 0.0 {
                    let tail = -(-2.0 * half_a2 * two_gamma * (arg_lo + gamma)).exp_m1();
                    if tail <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    acc += tail.ln() - half_a2 * arg_lo * arg_lo;
                } else {
                    let p = -(-half_a2 * arg_up * arg_up).exp_m1();
                    if p <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    acc += p.ln();
                }
            }
        }
    }
    acc
}

/// Iterative quantized MLE: maximize the ternary-sequence likelihood over
/// amplitude and phase. Golden-section over `A ∈ [0, γ+m]` nested in a
/// 64-point phase grid, with one golden-section refinement of the phase.
/// `iterations` reports the number of likelihood evaluations.
pub fn qmle_iterative(y: &[i8], cfg: &QuantizerConfig, f0: f64) -> Result<AmplitudeEstimate> {
    if y.is_empty() {
        return Err(Error::invalid("empty ternary record"));
    }
    if !(f0 > 0.0 && f0 < 0.5) {
        return Err(Error::invalid(format!("f0 must lie in (0, 0.5), got {f0}")));
    }
    let n = y.len();
    let omega = 2.0 * PI * f0;
    let mut cos_t = Vec::with_capacity(n);
    let mut sin_t = Vec::with_capacity(n);
    for i in 0..n {
        let (s, c) = (omega * i as f64).sin_cos();
        cos_t.push(c);
        sin_t.push(s);
    }
    let up = cfg.upper_arg();
    let lo = cfg.lower_arg();

    let solve_at_phase = |phi: f64, tol: f64| -> (f64, f64, usize) {
        let (cp, sp) = (phi.cos(), phi.sin());
        let (amp, value, evals) = golden_max(
            |a| ternary_log_likelihood(y, &cos_t, &sin_t, up, lo, a, cp, sp),
            0.0,
            up,
            tol,
        );
        (amp, value, evals)
    };

    let grid: Vec<(usize, f64, f64, usize)> = (0..QMLE_PHASE_GRID)
        .into_par_iter()
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / QMLE_PHASE_GRID as f64;
            let (amp, value, evals) = solve_at_phase(phi, QMLE_AMP_TOL_GRID);
            (j, amp, value, evals)
        })
        .collect();

    let mut total_evals: usize = grid.iter().map(|g| g.3).sum();
    let best = grid
        .iter()
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .expect("nonempty grid");
    let best_phi = 2.0 * PI * best.0 as f64 / QMLE_PHASE_GRID as f64;
    let step = 2.0 * PI / QMLE_PHASE_GRID as f64;

    // one golden-section refinement of the phase around the best grid point
    let mut inner_evals = 0usize;
    let (refined_phi, _, outer_evals) = golden_max(
        |phi| {
            let (_, v, e) = solve_at_phase(phi, QMLE_AMP_TOL_GRID);
            inner_evals += e;
            v
        },
        best_phi - step,
        best_phi + step,
        step / 16.0,
    );
    total_evals += inner_evals + outer_evals;
    let (amp_refined, value_refined, e) = solve_at_phase(refined_phi, QMLE_AMP_TOL);
    total_evals += e;
    let amp = if value_refined > best.2 {
        amp_refined
    } else {
        best.1
    };

    Ok(
        AmplitudeEstimate::new(Method::QmleIterative, amp, cfg.sigma).with_flags(
            true,
            total_evals,
            false,
        ),
    )
}
