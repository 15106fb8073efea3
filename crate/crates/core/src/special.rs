//! Theta-function derivatives and their reciprocity law, Hermite-type
//! polynomials, Bernoulli numbers, the Riemann zeta function and the real
//! gamma function.

use std::f64::consts::{LN_2, PI};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{MelonError, Result};
use crate::exact::binomial;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

/// Truncation policy for the theta series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTolerance {
    pub rel_tol: f64,
    pub max_terms: u64,
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        Self {
            rel_tol: 1e-15,
            max_terms: 1_000_000,
        }
    }
}

impl SeriesTolerance {
    pub fn new(rel_tol: f64, max_terms: u64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(MelonError::invalid("rel_tol must lie in (0, 1)"));
        }
        if max_terms == 0 {
            return Err(MelonError::invalid("max_terms must be positive"));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

/// Arguments of a theta evaluation: `theta_a(x, i t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaQuery {
    pub a: u32,
    pub t: f64,
    pub x: Complex64,
}

impl ThetaQuery {
    pub fn new(a: u32, t: f64) -> Result<Self> {
        check_t(t)?;
        Ok(Self {
            a,
            t,
            x: Complex64::zero(),
        })
    }

    pub fn with_x(self, x: Complex64) -> Self {
        Self { x, ..self }
    }

    pub fn eval(&self, tol: SeriesTolerance) -> Result<Complex64> {
        theta_general(self.a, self.x, self.t, tol)
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(MelonError::invalid(format!("t must be positive and finite, got {t}")))
    }
}

/// Sum `f(1) + f(2) + ...` of a series whose terms are eventually
/// decreasing in magnitude, stopping once two consecutive terms are past
/// the peak and below `rel_tol` times the running sum.
fn sum_unimodal<T, F>(start: T, tol: SeriesTolerance, what: &'static str, mut f: F) -> Result<T>
where
    T: std::ops::AddAssign + Copy + Magnitude,
    F: FnMut(u64) -> T,
{
    let mut sum = start;
    let mut prev = f64::INFINITY;
    let mut small = 0;
    for n in 1..=tol.max_terms {
        let term = f(n);
        sum += term;
        let mag = term.magnitude();
        if mag <= prev && mag <= tol.rel_tol * sum.magnitude() {
            small += 1;
            if small == 2 {
                return Ok(sum);
            }
        } else {
            small = 0;
        }
        prev = mag;
    }
    Err(MelonError::NonConvergence {
        what: what.into(),
        max_terms: tol.max_terms as usize,
    })
}

trait Magnitude {
    fn magnitude(&self) -> f64;
}

impl Magnitude for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Magnitude for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// `2 * sum_{n>=1} (-4 pi^2 n^2)^b exp(-pi n^2 t)`: the part of
/// `theta_{2b}(t)` coming from `n != 0`, summed directly.
pub fn theta_tail_direct(b: u32, t: f64, tol: SeriesTolerance) -> Result<f64> {
    check_t(t)?;
    let scale = 2.0 * (-4.0 * PI * PI).powi(b as i32);
    let s = sum_unimodal(0.0, tol, "theta series", |n| {
        let n = n as f64;
        n.powi(2 * b as i32) * (-PI * n * n * t).exp()
    })?;
    Ok(scale * s)
}

/// `theta_a(t)` by direct summation of the defining series.
pub fn theta_deriv_direct(a: u32, t: f64, tol: SeriesTolerance) -> Result<f64> {
    check_t(t)?;
    if a % 2 == 1 {
        return Ok(0.0);
    }
    let lead = if a == 0 { 1.0 } else { 0.0 };
    Ok(lead + theta_tail_direct(a / 2, t, tol)?)
}

/// `theta_a(t) = theta_a(0, i t)`.
///
/// For `t < 1` the value is assembled from the reciprocity relation, which
/// only needs the rapidly converging series at `1/t`.
pub fn theta_deriv(a: u32, t: f64, tol: SeriesTolerance) -> Result<f64> {
    let split = theta_split(a, t, tol)?;
    Ok(split.lead + split.rem)
}

/// `theta_a(t)` written as an explicit leading part plus an exponentially
/// small remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaSplit {
    pub lead: f64,
    pub rem: f64,
}

/// Split of `theta_a(t)`.
///
/// For `t >= 1` the lead is the `n = 0` term. For `t < 1` it is the power
/// `(-1)^b (2b)!/b! pi^b t^(-b-1/2)` coming from the constant term of
/// `theta_0(1/t)`; the remainder then has size `O(exp(-pi/t))`.
pub fn theta_split(a: u32, t: f64, tol: SeriesTolerance) -> Result<ThetaSplit> {
    check_t(t)?;
    if a % 2 == 1 {
        return Ok(ThetaSplit { lead: 0.0, rem: 0.0 });
    }
    let b = a / 2;
    if t >= 1.0 {
        return Ok(ThetaSplit {
            lead: if b == 0 { 1.0 } else { 0.0 },
            rem: theta_tail_direct(b, t, tol)?,
        });
    }
    let u = 1.0 / t;
    let sign = if b.is_multiple_of(2) { 1.0 } else { -1.0 };
    let coef = |k: u32| {
        binomial(a as u64, 2 * k as i64).to_f64_lossy() * fact_ratio(2 * k, k) * PI.powi(k as i32)
    };
    let lead = sign * coef(b) * t.powf(-(b as f64) - 0.5);
    let mut rem = 0.0;
    for k in 0..=b {
        let power = t.powf(-((a - k) as f64 + 0.5));
        rem += coef(k) * power * theta_tail_direct(b - k, u, tol)?;
    }
    Ok(ThetaSplit {
        lead,
        rem: sign * rem,
    })
}

/// `theta_{2b}(t) - [b = 0]` for every `b <= bmax` at once, summed directly.
/// Intended for `t` bounded away from zero (the series needs about
/// `sqrt(40 / t)` terms).
pub(crate) fn theta_tails(bmax: u32, t: f64) -> Vec<f64> {
    let mut acc = vec![0.0; bmax as usize + 1];
    let peak = (bmax as f64 / (PI * t)).sqrt();
    let mut n = 1u64;
    loop {
        let nf = n as f64;
        let e = (-PI * nf * nf * t).exp();
        let n2 = nf * nf;
        let mut term = e;
        let mut done = nf > peak;
        for (b, slot) in acc.iter_mut().enumerate() {
            if b > 0 {
                term *= n2;
            }
            *slot += term;
            if term > 1e-18 * slot.abs() {
                done = false;
            }
        }
        if done || e == 0.0 {
            break;
        }
        n += 1;
    }
    let mut scale = 2.0;
    for slot in acc.iter_mut() {
        *slot *= scale;
        scale *= -4.0 * PI * PI;
    }
    acc
}

/// For `u <= 1`: `theta_{2b}(u) = lead[b] + rem[b]` with the power-law lead
/// `(-1)^b (2b)!/b! pi^b u^(-b-1/2)` and an `O(exp(-pi/u))` remainder, for
/// every `b <= bmax`.
pub(crate) fn theta_reciprocal_split(bmax: u32, u: f64) -> (Vec<f64>, Vec<f64>) {
    let tails = theta_tails(bmax, 1.0 / u);
    let mut lead = Vec::with_capacity(bmax as usize + 1);
    let mut rem = Vec::with_capacity(bmax as usize + 1);
    for b in 0..=bmax {
        let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
        let coef = |k: u32| {
            binomial(2 * b as u64, 2 * k as i64).to_f64_lossy() * fact_ratio(2 * k, k) * PI.powi(k as i32)
        };
        lead.push(sign * coef(b) * u.powf(-(b as f64) - 0.5));
        let mut r = 0.0;
        for k in 0..=b {
            r += coef(k) * u.powf(-((2 * b - k) as f64 + 0.5)) * tails[(b - k) as usize];
        }
        rem.push(sign * r);
    }
    (lead, rem)
}

/// `C(n, k)` as a float.
pub(crate) fn binomial_f64(n: u32, k: u32) -> f64 {
    binomial(n as u64, k as i64).to_f64_lossy()
}

/// `m! / k!` as a float.
pub(crate) fn fact_ratio(m: u32, k: u32) -> f64 {
    (k + 1..=m).map(f64::from).product()
}

pub(crate) trait ToF64Lossy {
    fn to_f64_lossy(&self) -> f64;
}

impl ToF64Lossy for num_bigint::BigUint {
    fn to_f64_lossy(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::INFINITY)
    }
}

/// `theta_a(x, i t) = sum_n (2 pi i n)^a exp(2 pi i x n) exp(-pi n^2 t)` for
/// complex `x`.
pub fn theta_general(a: u32, x: Complex64, t: f64, tol: SeriesTolerance) -> Result<Complex64> {
    check_t(t)?;
    let lead = if a == 0 {
        Complex64::one()
    } else {
        Complex64::zero()
    };
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    sum_unimodal(lead, tol, "complex theta series", |n| {
        let mut s = Complex64::zero();
        for m in [n as f64, -(n as f64)] {
            let w = two_pi_i * m;
            s += w.powu(a) * (w * x - PI * m * m * t).exp();
        }
        s
    })
}

/// Absolute residual of an identity together with the magnitude it should
/// be judged against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub residual: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual
        } else {
            self.residual / self.scale
        }
    }
}

/// Residual of the reciprocity relation for `theta_a(y)`, both sides summed
/// directly. The scale is the largest single term of either side.
pub fn reciprocity_residual_corollary(a: u32, y: f64, tol: SeriesTolerance) -> Result<Residual> {
    check_t(y)?;
    if a % 2 == 1 {
        return Ok(Residual {
            residual: 0.0,
            scale: 0.0,
        });
    }
    let lhs = theta_deriv_direct(a, y, tol)?;
    let sign = if (a / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut rhs = 0.0;
    let mut scale = lhs.abs();
    for k in 0..=a / 2 {
        let term = binomial(a as u64, 2 * k as i64).to_f64_lossy()
            * fact_ratio(2 * k, k)
            * PI.powi(k as i32)
            * y.powf(-((a - k) as f64 + 0.5))
            * theta_deriv_direct(a - 2 * k, 1.0 / y, tol)?;
        scale = scale.max(term.abs());
        rhs += term;
    }
    Ok(Residual {
        residual: (lhs - sign * rhs).abs(),
        scale,
    })
}

/// Residual of the generalised reciprocity relation at `y = i t` and real
/// `x`. The right-hand side uses the complex first argument `-i x / t`.
pub fn reciprocity_residual_proposition(
    a: u32,
    x: f64,
    t: f64,
    tol: SeriesTolerance,
) -> Result<Residual> {
    check_t(t)?;
    let xr = Complex64::new(x, 0.0);
    let mut lhs = Complex64::zero();
    let mut scale: f64 = 0.0;
    for k in 0..=a / 2 {
        let term = theta_general(a - 2 * k, xr, t, tol)?
            * (binomial(a as u64, 2 * k as i64).to_f64_lossy()
                * fact_ratio(2 * k, k)
                * PI.powi(k as i32)
                * t.powf((a - k) as f64 + 0.5));
        scale = scale.max(term.norm());
        lhs += term;
    }
    let xs = Complex64::new(0.0, -x / t);
    let gauss = (-PI * x * x / t).exp();
    let i = Complex64::i();
    let mut rhs = Complex64::zero();
    for k in 0..=a {
        let term = theta_general(a - k, xs, 1.0 / t, tol)?
            * i.powi(k as i32 - a as i32)
            * (gauss
                * binomial(a as u64, k as i64).to_f64_lossy()
                * (-x).powi(k as i32)
                * (2.0 * PI).powi(k as i32));
        scale = scale.max(term.norm());
        rhs += term;
    }
    Ok(Residual {
        residual: (lhs - rhs).norm(),
        scale,
    })
}

/// Hermite-type polynomial
/// `phi_k(w) = sum_{ceil(k/2) <= m <= k} (-1)^m / m! * C(m, k-m) * (2w)^(2m-k)`.
pub fn phi(k: u32, w: f64) -> f64 {
    let mut s = 0.0;
    for m in k.div_ceil(2)..=k {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        s += sign / fact_ratio(m, 0)
            * binomial(m as u64, (k - m) as i64).to_f64_lossy()
            * (2.0 * w).powi((2 * m - k) as i32);
    }
    s
}

/// Bernoulli numbers `B_0 .. B_k` (with `B_1 = -1/2`).
pub fn bernoulli_numbers(k: u32) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = Vec::with_capacity(k as usize + 1);
    b.push(BigRational::one());
    for m in 1..=k as u64 {
        let mut s = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            s += BigRational::from_integer(BigInt::from(binomial(m + 1, j as i64))) * bj;
        }
        b.push(-s / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

/// `B_k`.
pub fn bernoulli(k: u32) -> BigRational {
    bernoulli_numbers(k).pop().unwrap()
}

/// Riemann zeta function on the real line.
///
/// Uses Borwein's accelerated alternating series for the eta function when
/// `sigma >= 0`, the functional equation for `sigma < 0`, and exact
/// Bernoulli values at non-positive integers.
pub fn zeta(sigma: f64) -> Result<f64> {
    if sigma == 1.0 {
        return Err(MelonError::Pole {
            z: sigma,
            pole: 1.0,
        });
    }
    if !sigma.is_finite() {
        return Err(MelonError::invalid("zeta argument must be finite"));
    }
    if sigma <= 0.0 && sigma.fract() == 0.0 {
        let k = (-sigma) as u32;
        let b = bernoulli(k + 1);
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        return Ok(sign * crate::exact::rational_to_f64(&b) / (k as f64 + 1.0));
    }
    if sigma < 0.0 {
        let s = sigma;
        return Ok(2f64.powf(s)
            * PI.powf(s - 1.0)
            * (PI * s / 2.0).sin()
            * gamma_real(1.0 - s)?
            * zeta(1.0 - s)?);
    }
    if sigma > 60.0 {
        return Ok(1.0 + 2f64.powf(-sigma) + 3f64.powf(-sigma));
    }
    Ok(eta_borwein(sigma) / -((1.0 - sigma) * LN_2).exp_m1())
}

fn eta_borwein(s: f64) -> f64 {
    const N: usize = 60;
    let mut d = [0.0f64; N + 1];
    let mut term = 1.0 / N as f64;
    let mut acc = term;
    d[0] = N as f64 * acc;
    for i in 1..=N {
        // term_i = (N+i-1)! 4^i / ((N-i)! (2i)!)
        term *= (N + i - 1) as f64 * 4.0 * (N - i + 1) as f64 / ((2 * i - 1) as f64 * (2 * i) as f64);
        acc += term;
        d[i] = N as f64 * acc;
    }
    let mut s_sum = 0.0;
    for k in 0..N {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s_sum += sign * (d[k] - d[N]) / ((k + 1) as f64).powf(s);
    }
    -s_sum / d[N]
}

/// Real gamma function; rejects the poles at non-positive integers.
pub fn gamma_real(x: f64) -> Result<f64> {
    if x <= 0.0 && x.fract() == 0.0 {
        return Err(MelonError::Pole {
            z: x,
            pole: x,
        });
    }
    if x < 0.5 {
        return Ok(PI / ((PI * x).sin() * statrs::function::gamma::gamma(1.0 - x)));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// `1 / Gamma(x)`, entire, with exact zeros at non-positive integers.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return 0.0;
    }
    if x < 0.5 {
        return (PI * x).sin() * statrs::function::gamma::gamma(1.0 - x) / PI;
    }
    1.0 / statrs::function::gamma::gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: SeriesTolerance = SeriesTolerance {
        rel_tol: 1e-15,
        max_terms: 1_000_000,
    };

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_deriv(1, 0.7, TOL).unwrap(), 0.0);
        // sum_{n} exp(-pi n^2), terms summed by hand to 5 terms
        let direct: f64 = 1.0 + 2.0 * (1..6).map(|n| (-PI * (n * n) as f64).exp()).sum::<f64>();
        assert!(close(theta_deriv(0, 1.0, TOL).unwrap(), direct, 1e-15));
        assert!((theta_deriv(0, 1.0, TOL).unwrap() - 1.086_434_811_213_308).abs() < 1e-14);
        assert!((theta_deriv(0, 50.0, TOL).unwrap() - 1.0).abs() < 1e-15);
        assert!(theta_deriv(0, 0.0, TOL).is_err());
        assert!(theta_deriv(0, -1.0, TOL).is_err());
    }

    #[test]
    fn small_t_agrees_with_direct_series() {
        for a in [0, 2, 4, 6, 8] {
            for t in [0.05, 0.2, 0.5, 0.9, 0.999] {
                let via = theta_deriv(a, t, TOL).unwrap();
                let direct = theta_deriv_direct(a, t, TOL).unwrap();
                assert!(close(via, direct, 1e-12), "a={a} t={t}: {via} vs {direct}");
            }
        }
    }

    #[test]
    fn split_remainder_is_small_for_small_t() {
        for a in [0, 2, 4] {
            let s = theta_split(a, 0.1, TOL).unwrap();
            assert!(s.rem.abs() < 1e-10 * s.lead.abs());
            let direct = theta_deriv_direct(a, 0.1, TOL).unwrap();
            assert!(close(s.lead + s.rem, direct, 1e-12));
        }
    }

    #[test]
    fn tables_match_single_evaluations() {
        for t in [1.0, 1.7, 4.0] {
            let tails = theta_tails(6, t);
            for b in 0..=6u32 {
                let one = theta_tail_direct(b, t, TOL).unwrap();
                assert!(close(tails[b as usize], one, 1e-14), "b={b} t={t}");
            }
        }
        for u in [0.05, 0.3, 1.0] {
            let (lead, rem) = theta_reciprocal_split(5, u);
            for b in 0..=5u32 {
                let direct = theta_deriv_direct(2 * b, u, TOL).unwrap();
                assert!(close(lead[b as usize] + rem[b as usize], direct, 1e-12), "b={b} u={u}");
            }
        }
    }

    #[test]
    fn theta_general_examples() {
        let v = theta_general(0, Complex64::zero(), 1.0, TOL).unwrap();
        assert!((v.re - 1.086_434_811_213_308).abs() < 1e-14 && v.im.abs() < 1e-15);
        let w = theta_general(0, Complex64::new(1.0, 0.0), 1.0, TOL).unwrap();
        assert!((w - v).norm() < 1e-14);
        let r = theta_general(4, Complex64::zero(), 1.3, TOL).unwrap();
        assert!(close(r.re, theta_deriv(4, 1.3, TOL).unwrap(), 1e-13));
    }

    #[test]
    fn corollary_examples() {
        assert!(reciprocity_residual_corollary(0, 1.0, TOL).unwrap().residual < 1e-14);
        assert_eq!(reciprocity_residual_corollary(1, 2.0, TOL).unwrap().residual, 0.0);
        assert!(reciprocity_residual_corollary(6, 0.5, TOL).unwrap().relative() < 1e-11);
    }

    #[test]
    fn corollary_holds_on_grid() {
        for a in (0..=10).step_by(2) {
            for y in [0.3, 0.5, 1.0, 2.0, 3.0] {
                let r = reciprocity_residual_corollary(a, y, TOL).unwrap();
                assert!(r.relative() < 1e-11, "a={a} y={y}: {r:?}");
            }
        }
    }

    #[test]
    fn proposition_examples() {
        assert!(reciprocity_residual_proposition(0, 0.0, 1.0, TOL).unwrap().residual < 1e-14);
        assert!(reciprocity_residual_proposition(3, 0.4, 1.5, TOL).unwrap().relative() < 1e-10);
        assert!(reciprocity_residual_proposition(5, -0.8, 0.8, TOL).unwrap().relative() < 1e-9);
        assert!(reciprocity_residual_proposition(2, 0.3, 1.2, TOL).unwrap().relative() < 1e-10);
    }

    #[test]
    fn proposition_holds_on_grid() {
        for a in 0..=6 {
            for x in [-1.0, -0.4, 0.0, 0.4, 1.0] {
                for t in [0.6, 1.0, 1.7] {
                    let r = reciprocity_residual_proposition(a, x, t, TOL).unwrap();
                    assert!(r.relative() < 1e-9, "a={a} x={x} t={t}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn rewritten_reciprocity_with_phi() {
        for a in 0..=5u32 {
            for y in [0.5, 0.75, 1.0, 1.4, 2.0] {
                let lhs = theta_deriv_direct(2 * a, 1.0 / y, TOL).unwrap();
                let f2a = fact_ratio(2 * a, 0);
                let mut sum = f2a * phi(2 * a, 0.0);
                let mut scale = sum.abs();
                for n in 1..200 {
                    let u = n as f64 * (PI * y).sqrt();
                    let term = 2.0 * f2a * phi(2 * a, u) * (-u * u).exp();
                    scale = scale.max(term.abs());
                    sum += term;
                }
                let pref = y.powf(a as f64 + 0.5) * PI.powi(a as i32);
                let rhs = pref * sum;
                let scale = scale * pref;
                assert!((lhs - rhs).abs() < 1e-10 * scale.max(lhs.abs()), "a={a} y={y}");
            }
        }
    }

    #[test]
    fn theta_sign_for_large_t() {
        for b in 1..6u32 {
            let v = theta_deriv(2 * b, 6.0, TOL).unwrap();
            let lead = 2.0 * (-4.0 * PI * PI).powi(b as i32) * (-PI * 6.0).exp();
            assert_eq!(v.signum(), if b % 2 == 0 { 1.0 } else { -1.0 });
            assert!(close(v, lead, 1e-6));
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let tiny = SeriesTolerance::new(1e-15, 3).unwrap();
        assert!(matches!(
            theta_deriv_direct(0, 0.001, tiny),
            Err(MelonError::NonConvergence { .. })
        ));
        assert!(SeriesTolerance::new(0.0, 10).is_err());
        assert!(SeriesTolerance::new(1.5, 10).is_err());
    }

    #[test]
    fn phi_examples() {
        for w in [-1.3, 0.0, 0.7, 2.5] {
            assert_eq!(phi(0, w), 1.0);
            assert!((phi(1, w) + 2.0 * w).abs() < 1e-15);
            assert!((phi(2, w) - (2.0 * w * w - 1.0)).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn hermite_recurrence(w in -3.0f64..3.0) {
            let h = |k: u32| if k.is_multiple_of(2) { 1.0 } else { -1.0 } * fact_ratio(k, 0) * phi(k, w);
            for k in 1..20u32 {
                let lhs = h(k + 1);
                let rhs = 2.0 * w * h(k) - 2.0 * k as f64 * h(k - 1);
                let scale = lhs.abs().max((2.0 * w * h(k)).abs()).max((2.0 * k as f64 * h(k - 1)).abs());
                prop_assert!((lhs - rhs).abs() <= 1e-10 * scale.max(1e-300));
            }
        }
    }

    #[test]
    fn bernoulli_examples() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(bernoulli(0), r(1, 1));
        assert_eq!(bernoulli(1), r(-1, 2));
        assert_eq!(bernoulli(2), r(1, 6));
        assert_eq!(bernoulli(3), r(0, 1));
        assert_eq!(bernoulli(12), r(-691, 2730));
    }

    /// Plain alternating eta series with Euler (binomial) transform, used as
    /// an oracle independent of the accelerated routine.
    fn zeta_oracle(s: f64) -> f64 {
        let n = 60;
        let mut total = 0.0;
        for k in 0..n {
            let mut inner = 0.0;
            for j in 0..=k {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                inner += sign * binomial(k as u64, j as i64).to_f64_lossy() / ((j + 1) as f64).powf(s);
            }
            total += inner / 2f64.powi(k + 1);
        }
        total / (1.0 - 2f64.powf(1.0 - s))
    }

    #[test]
    fn zeta_examples() {
        assert!(close(zeta(2.0).unwrap(), PI * PI / 6.0, 1e-13));
        assert!(close(zeta(4.0).unwrap(), PI.powi(4) / 90.0, 1e-13));
        assert_eq!(zeta(0.0).unwrap(), -0.5);
        assert!(close(zeta(-1.0).unwrap(), -1.0 / 12.0, 1e-15));
        assert_eq!(zeta(-2.0).unwrap(), 0.0);
        assert!(matches!(zeta(1.0), Err(MelonError::Pole { .. })));
        for s in [0.5, 1.5, 3.0, 7.5, 20.0, 40.0] {
            assert!(close(zeta(s).unwrap(), zeta_oracle(s), 1e-13), "s={s}");
        }
        // zeta(-1/2) through the functional equation
        assert!(close(zeta(-0.5).unwrap(), -0.207_886_224_977_354_56, 1e-13));
        assert!(close(zeta(-7.5).unwrap(), 0.003_269_039_572_600_22, 1e-12));
    }

    #[test]
    fn gamma_examples() {
        assert!(close(gamma_real(0.5).unwrap(), PI.sqrt(), 1e-13));
        assert!(close(gamma_real(5.0).unwrap(), 24.0, 1e-13));
        assert!(close(gamma_real(1.5).unwrap(), PI.sqrt() / 2.0, 1e-13));
        assert!(close(gamma_real(-0.5).unwrap(), -2.0 * PI.sqrt(), 1e-13));
        assert!(close(gamma_real(20.0).unwrap(), 1.216_451_004_088_32e17, 1e-13));
        assert!(gamma_real(0.0).is_err());
        assert!(gamma_real(-3.0).is_err());
        assert_eq!(rgamma(-2.0), 0.0);
        assert!(close(rgamma(-0.5), -0.5 / PI.sqrt(), 1e-13));
    }

    #[test]
    fn euler_gamma_literal() {
        // gamma = lim (H_n - ln n); the n^-2 Euler-Maclaurin correction closes the gap
        let n = 1_000_000.0f64;
        let h: f64 = (1..=1_000_000).rev().map(|k| 1.0 / k as f64).sum();
        let approx = h - n.ln() - 1.0 / (2.0 * n) + 1.0 / (12.0 * n * n);
        assert!((approx - EULER_GAMMA).abs() < 1e-12);
    }
}
