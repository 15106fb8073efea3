//! Numerical integration: double-exponential quadrature on finite panels and
//! panel doubling for integrands decaying at infinity.

use crate::error::{MelonError, Result};

/// An integral together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err: f64,
}

/// Integral of `f` over the finite interval `[a, b]`, bisecting until the
/// error estimate is below `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    integrate_depth(f, a, b, abs_tol, rel_tol, 0)
}

fn integrate_depth<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
) -> Result<QuadResult> {
    let out = quadrature::double_exponential::integrate(f, a, b, abs_tol.max(1e-300));
    if !out.integral.is_finite() {
        return Err(MelonError::Quadrature {
            tol: abs_tol,
            err: f64::INFINITY,
        });
    }
    let target = abs_tol.max(rel_tol.max(64.0 * f64::EPSILON) * out.integral.abs());
    if out.error_estimate <= target {
        return Ok(QuadResult {
            value: out.integral,
            err: out.error_estimate,
        });
    }
    if depth >= 12 {
        return Err(MelonError::Quadrature {
            tol: target,
            err: out.error_estimate,
        });
    }
    let m = 0.5 * (a + b);
    let half = 0.5 * target;
    let l = integrate_depth(f, a, m, half, rel_tol, depth + 1)?;
    let r = integrate_depth(f, m, b, half, rel_tol, depth + 1)?;
    Ok(QuadResult {
        value: l.value + r.value,
        err: l.err + r.err,
    })
}

/// Integral of `f` over `[a, inf)` for `a > 0` and an integrand that decays
/// at least exponentially beyond `settle`.
///
/// Panels `[a, 2a], [2a, 4a], ...` are added until one lying past `settle`
/// contributes less than `rel_tol / 100` of the running total, or less than
/// `abs_floor`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    settle: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<QuadResult> {
    if !(a > 0.0) {
        return Err(MelonError::invalid("lower limit must be positive"));
    }
    let mut lo = a;
    let mut total = QuadResult { value: 0.0, err: 0.0 };
    for _ in 0..64 {
        let hi = 2.0 * lo;
        let abs_tol = (0.1 * rel_tol * total.value.abs()).max(abs_floor);
        let panel = integrate(f, lo, hi, abs_tol, rel_tol)?;
        total.value += panel.value;
        total.err += panel.err;
        let negligible = panel.value.abs() <= (1e-2 * rel_tol * total.value.abs()).max(abs_floor);
        if lo >= settle && negligible {
            return Ok(total);
        }
        lo = hi;
    }
    Err(MelonError::Quadrature {
        tol: rel_tol,
        err: total.err,
    })
}
