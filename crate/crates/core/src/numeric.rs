//! Small numerical kernels shared by the solvers.

use crate::error::{Error, Result};

/// Outcome of a bracketed root solve at the lower bracket edge.
pub(crate) enum BracketSolve {
    /// The root; second field is the iteration count.
    Root(f64, usize),
    /// `f(lo) >= 0`: the observation sits at or below the model's value at
    /// the lower edge, so the solve clamps to `lo`.
    AtLowerEdge,
}

/// Bisection for a root of `f` on `[lo, hi]`, assuming `f` is increasing in
/// the sense that a sign change brackets the root. Returns `AtLowerEdge`
/// when `f(lo) >= 0`, an error when there is no sign change.
pub(crate) fn bisect_increasing<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<BracketSolve> {
    let flo = f(lo);
    if flo >= 0.0 {
        return Ok(BracketSolve::AtLowerEdge);
    }
    let fhi = f(hi);
    if fhi < 0.0 {
        return Err(Error::numeric(format!(
            "no sign change on bracket [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut iters = 0;
    while hi - lo > tol {
        iters += 1;
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if iters > 200 {
            break;
        }
    }
    Ok(BracketSolve::Root(0.5 * (lo + hi), iters))
}

/// Plain bisection for a sign change of `f` on `[lo, hi]`.
pub(crate) fn bisect_sign_change<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::numeric(format!(
            "no sign change on bracket [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}"
        )));
    }
    let (mut lo, mut hi, mut flo) = (lo, hi, flo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < tol {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section maximization of `f` on `[lo, hi]`.
/// Returns `(argmax, max, evaluations)`.
pub(crate) fn golden_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> (f64, f64, usize) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 2;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
        evals += 1;
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    evals += 1;
    if fm >= f1 && fm >= f2 {
        (xm, fm, evals)
    } else if f1 >= f2 {
        (x1, f1, evals)
    } else {
        (x2, f2, evals)
    }
}

/// Number of quadrature nodes for period averages.
pub(crate) const PERIOD_NODES: usize = 1024;

/// Average of `f(cos θ)` over one full period, midpoint rule.
///
/// The integrand is smooth and periodic, so the midpoint rule converges
/// spectrally; 1024 nodes put the error far below solver tolerances.
pub(crate) fn period_average<F: Fn(f64) -> f64>(f: F) -> f64 {
    let step = 2.0 * std::f64::consts::PI / PERIOD_NODES as f64;
    let mut acc = 0.0;
    for k in 0..PERIOD_NODES {
        let theta = (k as f64 + 0.5) * step;
        acc += f(theta.cos());
    }
    acc / PERIOD_NODES as f64
}

/// Deterministic seed mixing (splitmix64 finalizer over base ^ odd-multiplied
/// index). Used to derive independent per-position / per-trial streams.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect_sign_change(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn bisect_increasing_clamps_at_edge() {
        match bisect_increasing(|x| x + 1.0, 0.0, 2.0, 1e-9).unwrap() {
            BracketSolve::AtLowerEdge => {}
            _ => panic!("expected clamp"),
        }
    }

    #[test]
    fn bisect_reports_missing_bracket() {
        assert!(bisect_increasing(|x| x - 10.0, 0.0, 2.0, 1e-9).is_err());
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v, _) = golden_max(|x| -(x - 0.7) * (x - 0.7), 0.0, 2.0, 1e-10);
        assert!((x - 0.7).abs() < 1e-8);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn period_average_of_cos_powers() {
        assert!(period_average(|c| c).abs() < 1e-14);
        assert!((period_average(|c| c * c) - 0.5).abs() < 1e-14);
        assert!((period_average(|c| c * c * c * c) - 0.375).abs() < 1e-14);
    }

    #[test]
    fn mix_seed_spreads_indices() {
        let a = mix_seed(7, 0);
        let b = mix_seed(7, 1);
        let c = mix_seed(8, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, mix_seed(7, 0));
    }
}
