//! Rayleigh noise model.
//!
//! The background intensity noise is Rayleigh distributed. Internally the
//! crate works with the *unit-variance* form: a Rayleigh variable `w` with
//! density `a² w exp(-a² w² / 2)` for `w > 0`, where `a = sqrt(2 - π/2)`.
//! This form has variance exactly 1 and mean `m = sqrt(π / (4 - π))`.
//! Physical scale enters only at the boundaries (via `σ` or the raw scale
//! `s`); every downstream formula is written in normalized units.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Parameters of the Rayleigh noise model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighParams {
    /// Rayleigh scale of the raw intensity noise (physical units).
    pub s: f64,
    /// Normalization constant of the unit-variance form, `a = sqrt(2 - π/2)`.
    pub a: f64,
    /// Mean of the unit-variance form, `m = sqrt(π / (4 - π))`.
    pub m: f64,
}

/// `a² = 2 - π/2`.
pub fn norm_a_squared() -> f64 {
    2.0 - std::f64::consts::FRAC_PI_2
}

/// `a = sqrt(2 - π/2)`, the normalization constant of the unit-variance form.
pub fn norm_a() -> f64 {
    norm_a_squared().sqrt()
}

/// `m = sqrt(π / (4 - π))`, the mean of the unit-variance form.
pub fn noise_mean() -> f64 {
    (std::f64::consts::PI / (4.0 - std::f64::consts::PI)).sqrt()
}

impl RayleighParams {
    /// Parameters of the unit-variance form (raw scale `s = 1/a`).
    pub fn unit() -> Self {
        Self::with_scale(1.0 / norm_a())
    }

    /// Parameters with a given raw Rayleigh scale `s > 0`.
    pub fn with_scale(s: f64) -> Self {
        RayleighParams {
            s,
            a: norm_a(),
            m: noise_mean(),
        }
    }
}

/// Density of the unit-variance Rayleigh variable; zero for `w ≤ 0`.
pub fn pdf_unit(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let a2 = norm_a_squared();
    a2 * w * (-0.5 * a2 * w * w).exp()
}

/// Cumulative distribution of the unit-variance Rayleigh variable.
pub fn cdf_unit(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let a2 = norm_a_squared();
    -(-0.5 * a2 * w * w).exp_m1()
}

/// Survival function `1 - cdf_unit(w)`; equals 1 for `w ≤ 0`.
pub fn sf_unit(w: f64) -> f64 {
    if w <= 0.0 {
        return 1.0;
    }
    let a2 = norm_a_squared();
    (-0.5 * a2 * w * w).exp()
}

/// Derivative of `pdf_unit` with respect to its argument; zero for `w ≤ 0`.
///
/// For `w > 0` this is `a² exp(-a² w²/2) (1 - a² w²)`.
pub fn pdf_deriv_unit(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let a2 = norm_a_squared();
    let a2w2 = a2 * w * w;
    a2 * (-0.5 * a2w2).exp() * (1.0 - a2w2)
}

/// One Rayleigh draw by inverse transform: `scale·sqrt(-2·ln(1-U))`.
pub(crate) fn rayleigh_draw<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.gen(); // [0, 1), so 1-u stays in (0, 1]
    scale * (-2.0 * (1.0 - u).ln()).sqrt()
}

/// Draw `n` i.i.d. Rayleigh samples with the given scale, deterministically
/// for a fixed seed.
pub fn sample(n: usize, scale: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("sample: n must be >= 1"));
    }
    if !(scale > 0.0) {
        return Err(Error::invalid(format!(
            "sample: scale must be > 0, got {scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| rayleigh_draw(&mut rng, scale)).collect())
}

/// Maximum-likelihood Rayleigh scale, `sqrt(Σ rᵢ² / (2N))`.
pub fn fit_scale(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("fit_scale: need at least 2 samples"));
    }
    let mut sum_sq = 0.0;
    for (i, &r) in samples.iter().enumerate() {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!(
                "fit_scale: sample {i} is negative or NaN ({r})"
            )));
        }
        sum_sq += r * r;
    }
    Ok((sum_sq / (2.0 * samples.len() as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        // composite Simpson, n even
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            acc += f(x) * if i % 2 == 0 { 2.0 } else { 4.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn params_invariants() {
        let p = RayleighParams::unit();
        assert!((p.a * p.a - (2.0 - std::f64::consts::FRAC_PI_2)).abs() < 1e-15);
        assert!((p.m - (std::f64::consts::FRAC_PI_2).sqrt() / p.a).abs() < 1e-15);
        assert!((p.s - 1.0 / p.a).abs() < 1e-15);
    }

    #[test]
    fn pdf_vanishes_at_origin_and_below() {
        assert_eq!(pdf_unit(0.0), 0.0);
        assert_eq!(pdf_unit(-1.3), 0.0);
    }

    #[test]
    fn pdf_at_mode() {
        // mode of a Rayleigh with scale 1/a is 1/a; density there is a·exp(-1/2)
        let a = norm_a();
        let expect = a * (-0.5f64).exp();
        assert!((pdf_unit(1.0 / a) - expect).abs() < 1e-15);
        assert!((expect - 0.3974).abs() < 1e-4);
    }

    #[test]
    fn pdf_normalizes() {
        let integral = simpson(pdf_unit, 0.0, 20.0, 20000);
        assert!((integral - 1.0).abs() < 1e-6, "integral = {integral}");
    }

    #[test]
    fn cdf_basics() {
        assert_eq!(cdf_unit(0.0), 0.0);
        assert_eq!(cdf_unit(-2.0), 0.0);
        assert!((cdf_unit(1e9) - 1.0).abs() < 1e-12);
        let m = noise_mean();
        assert!((cdf_unit(m) - 0.5440618722340038).abs() < 1e-12);
        // monotone on a grid
        let mut prev = -1.0;
        for i in 0..400 {
            let v = cdf_unit(i as f64 * 0.02);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn cdf_matches_pdf_integral() {
        for w in [0.5, 1.0, noise_mean(), 3.0] {
            let integral = simpson(pdf_unit, 0.0, w, 4000);
            assert!(
                (cdf_unit(w) - integral).abs() < 1e-6,
                "w={w}: cdf={} integral={integral}",
                cdf_unit(w)
            );
        }
    }

    #[test]
    fn sf_complements_cdf() {
        for w in [-1.0, 0.0, 0.3, 1.0, 2.5, 6.0] {
            assert!((sf_unit(w) + cdf_unit(w) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sample_is_deterministic() {
        let x = sample(1000, 0.5, 42).unwrap();
        let y = sample(1000, 0.5, 42).unwrap();
        assert_eq!(x, y);
        let z = sample(1000, 0.5, 43).unwrap();
        assert_ne!(x, z);
    }

    #[test]
    fn sample_moments_match_unit_form() {
        let n = 1_000_000;
        let scale = 1.0 / norm_a();
        let x = sample(n, scale, 7).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        // unit-variance form: mean m with sd 1, so SE(mean) = 1/sqrt(n);
        // SE(var) = sqrt((mu4 - 1)/n) with Rayleigh mu4 = 3.2451
        let se_mean = 1.0 / (n as f64).sqrt();
        let se_var = (3.2451f64 - 1.0).sqrt() / (n as f64).sqrt();
        assert!((mean - noise_mean()).abs() < 3.0 * se_mean, "mean={mean}");
        assert!((var - 1.0).abs() < 3.0 * se_var, "var={var}");
    }

    #[test]
    fn sample_rejects_bad_args() {
        assert!(sample(0, 1.0, 1).is_err());
        assert!(sample(10, 0.0, 1).is_err());
        assert!(sample(10, -1.0, 1).is_err());
    }

    #[test]
    fn fit_scale_constant_input() {
        let c = 3.7;
        let s = fit_scale(&vec![c; 100]).unwrap();
        assert!((s - c / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fit_scale_recovers_generating_scale() {
        for (scale, seed) in [(0.026, 11u64), (1.0 / norm_a(), 12u64)] {
            let x = sample(100_000, scale, seed).unwrap();
            let s = fit_scale(&x).unwrap();
            assert!((s - scale).abs() / scale < 0.02, "scale={scale} fitted={s}");
        }
    }

    #[test]
    fn fit_scale_rejects_bad_input() {
        assert!(fit_scale(&[]).is_err());
        assert!(fit_scale(&[1.0]).is_err());
        assert!(fit_scale(&[1.0, -0.1]).is_err());
        assert!(fit_scale(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn fit_scale_is_scale_equivariant() {
        let x = sample(5000, 0.8, 3).unwrap();
        let s = fit_scale(&x).unwrap();
        for c in [0.25f64, 2.0, 1024.0] {
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let sc = fit_scale(&scaled).unwrap();
            assert!((sc - c * s).abs() < 1e-12 * c.max(1.0), "c={c}");
        }
    }
}
