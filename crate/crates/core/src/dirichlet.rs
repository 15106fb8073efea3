//! The lattice Dirichlet series `Z_e(z) = sum_{m != 0} m^e / |m|^(2z)`, its
//! meromorphic continuation, and the Mellin-side constants built from it.

use std::f64::consts::PI;

use crate::error::{MelonError, Result};
use crate::exact::rational_to_f64;
use crate::quad::integrate_to_infinity;
use crate::special::{
    bernoulli, fact_ratio, rgamma, theta_reciprocal_split, theta_tails, zeta, EULER_GAMMA,
};

/// Relative accuracy targeted by the continuation integrals.
pub const DEFAULT_TOL: f64 = 1e-13;

/// A point `z` and a monomial `m_0^e_0 ... m_{p-1}^e_{p-1}`.
///
/// Built either from half exponents (`half`, the series then uses `2a`) or
/// from raw exponents (`raw`). Any odd raw exponent makes the series vanish
/// identically.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletQuery {
    exps: Vec<u32>,
    z: f64,
}

impl DirichletQuery {
    /// Series with numerator `m^(2a)`.
    pub fn half(a: Vec<u32>, z: f64) -> Result<Self> {
        Self::raw(a.into_iter().map(|x| 2 * x).collect(), z)
    }

    /// Series with numerator `m^e`.
    pub fn raw(exps: Vec<u32>, z: f64) -> Result<Self> {
        if exps.is_empty() {
            return Err(MelonError::invalid("dimension p must be at least 1"));
        }
        if !z.is_finite() {
            return Err(MelonError::invalid("z must be finite"));
        }
        Ok(Self { exps, z })
    }

    pub fn p(&self) -> usize {
        self.exps.len()
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    /// `a` with `e = 2a`, or `None` if some exponent is odd.
    pub fn half_exponents(&self) -> Option<Vec<u32>> {
        if self.exps.iter().any(|e| e % 2 == 1) {
            None
        } else {
            Some(self.exps.iter().map(|e| e / 2).collect())
        }
    }

    /// Abscissa of absolute convergence, which is also the only pole.
    pub fn pole(&self) -> f64 {
        self.p() as f64 / 2.0 + self.exps.iter().sum::<u32>() as f64 / 2.0
    }
}

fn norm1(a: &[u32]) -> u32 {
    a.iter().sum()
}

/// `prod (2a_i)! / (4^a_i a_i!)`.
pub fn residue_constant(a: &[u32]) -> f64 {
    a.iter()
        .map(|&ai| fact_ratio(2 * ai, ai) / 4f64.powi(ai as i32))
        .product()
}

/// Residue of `Z_{2a}` at `z = p/2 + |a|`.
pub fn z_residue(p: usize, a: &[u32]) -> Result<f64> {
    if p == 0 || a.len() != p {
        return Err(MelonError::invalid(format!(
            "expected {p} half exponents, got {}",
            a.len()
        )));
    }
    let w0 = p as f64 / 2.0 + norm1(a) as f64;
    Ok(PI.powf(p as f64 / 2.0) * residue_constant(a) * rgamma(w0))
}

/// `I1(z) + I2(z)`: the two entire integrals over `[1, inf)` in the
/// continuation formula.
fn entire_integrals(a: &[u32], z: f64, tol: f64) -> Result<f64> {
    let p = a.len();
    let bmax = a.iter().copied().max().unwrap_or(0);
    let all_zero = bmax == 0;
    let weight = norm1(a) as f64 + p as f64;
    let settle = (2.0 * (z.abs() + weight) / PI).max(2.0);

    let f1 = |t: f64| {
        let tails = theta_tails(bmax, t);
        let prod = if all_zero {
            (p as f64 * tails[0].ln_1p()).exp_m1()
        } else {
            a.iter()
                .map(|&ai| if ai == 0 { 1.0 + tails[0] } else { tails[ai as usize] })
                .product()
        };
        t.powf(z - 1.0) * prod
    };
    let f2 = |t: f64| {
        let (lead, rem) = theta_reciprocal_split(bmax, 1.0 / t);
        // prod(L + X) - prod(L), expanded so no cancellation occurs
        let mut d = 0.0;
        let mut lprod = 1.0;
        for &ai in a {
            let (l, x) = (lead[ai as usize], rem[ai as usize]);
            d = d * (l + x) + lprod * x;
            lprod *= l;
        }
        t.powf(-z - 1.0) * d
    };
    let i1 = integrate_to_infinity(&f1, 1.0, settle, tol, 1e-300)?;
    let i2 = integrate_to_infinity(&f2, 1.0, settle, tol, 1e-300)?;
    Ok(i1.value + i2.value)
}

fn validate_half(a: &[u32]) -> Result<()> {
    if a.is_empty() {
        return Err(MelonError::invalid("dimension p must be at least 1"));
    }
    Ok(())
}

/// `Gamma(w) Z_{2a}(w)` through the continuation formula, for `w` away from
/// `0` and from the pole `p/2 + |a|`.
pub fn zgamma(a: &[u32], w: f64, tol: f64) -> Result<f64> {
    validate_half(a)?;
    let na = norm1(a) as f64;
    let w0 = a.len() as f64 / 2.0 + na;
    if w == w0 {
        return Err(MelonError::Pole { z: w, pole: w0 });
    }
    let first = if norm1(a) == 0 { -PI.powf(w) / w } else { 0.0 };
    let pole = PI.powf(w - na) * residue_constant(a) / (w - w0);
    let ints = PI.powf(w - 2.0 * na) / (-4f64).powi(norm1(a) as i32) * entire_integrals(a, w, tol)?;
    Ok(first + pole + ints)
}

/// Value of the continued `Z` at real `z`, for any `z` other than the pole.
pub fn z_continued(q: &DirichletQuery, tol: f64) -> Result<f64> {
    let Some(a) = q.half_exponents() else {
        return Ok(0.0);
    };
    let z = q.z();
    let na = norm1(&a) as f64;
    let z0 = q.pole();
    if z == z0 {
        return Err(MelonError::Pole { z, pole: z0 });
    }
    let first = if norm1(&a) == 0 {
        -PI.powf(z) * rgamma(z + 1.0)
    } else {
        0.0
    };
    let rg = rgamma(z);
    if rg == 0.0 {
        return Ok(first);
    }
    let pole = PI.powf(z - na) * residue_constant(&a) / (z - z0);
    let ints = PI.powf(z - 2.0 * na) / (-4f64).powi(norm1(&a) as i32) * entire_integrals(&a, z, tol)?;
    Ok(first + rg * (pole + ints))
}

/// Sum of the monomial over `r_lo < |m|_inf <= r_hi`, using the symmetry
/// `m_i -> -m_i` of even monomials (orthant points weighted by
/// `2^(#nonzero coordinates)`).
fn shell_block(exps: &[u32], z: f64, r_lo: usize, r_hi: usize) -> f64 {
    let p = exps.len();
    let mut total = 0.0;
    let mut m = vec![0usize; p];
    loop {
        let top = *m.iter().max().unwrap();
        if top > r_lo {
            let mut r2 = 0.0;
            let mut num = 1.0;
            let mut nonzero = 0;
            for (&mi, &e) in m.iter().zip(exps) {
                let x = mi as f64;
                r2 += x * x;
                if mi != 0 {
                    nonzero += 1;
                    num *= x.powi(e as i32);
                } else if e != 0 {
                    num = 0.0;
                }
            }
            if num != 0.0 {
                total += (1u64 << nonzero) as f64 * num * (-z * r2.ln()).exp();
            }
        }
        let mut i = 0;
        loop {
            if i == p {
                return total;
            }
            m[i] += 1;
            if m[i] <= r_hi {
                break;
            }
            m[i] = 0;
            i += 1;
        }
    }
}

/// Largest number of lattice points `z_series_direct` will visit.
pub const LATTICE_BUDGET: f64 = 3e7;

/// Direct lattice summation in the region of absolute convergence.
///
/// Cubic shell sums `S(R)` are formed for `R = 4 * 2^i`; their tails behave
/// like `sum_j c_j R^-(alpha + j)` with `alpha = 2z - |e| - p`, and the
/// powers are removed one after another by Richardson extrapolation. The
/// change between successive diagonal entries serves as the error estimate.
pub fn z_series_direct(q: &DirichletQuery, tol: f64) -> Result<f64> {
    let z = q.z();
    let pole = q.pole();
    if z <= pole {
        return Err(MelonError::invalid(format!(
            "z = {z} lies outside the region of absolute convergence z > {pole}"
        )));
    }
    if q.half_exponents().is_none() {
        return Ok(0.0);
    }
    let p = q.p() as i32;
    let alpha = 2.0 * (z - pole);
    let mut r = 4usize;
    let mut partial = shell_block(q.exponents(), z, 0, r);
    let mut table: Vec<Vec<f64>> = vec![vec![partial]];
    let mut err = f64::INFINITY;
    loop {
        if ((2 * r + 1) as f64).powi(p) > LATTICE_BUDGET {
            return Err(MelonError::NonConvergence {
                what: format!("lattice sum (error estimate {err:e})"),
                max_terms: ((r + 1) as f64).powi(p) as usize,
            });
        }
        partial += shell_block(q.exponents(), z, r, 2 * r);
        r *= 2;
        let i = table.len();
        let mut row = vec![partial];
        for j in 0..i {
            let f = 2f64.powf(alpha + j as f64);
            let v = (f * row[j] - table[i - 1][j]) / (f - 1.0);
            row.push(v);
        }
        err = (row[i] - table[i - 1][i - 1]).abs();
        let best = row[i];
        table.push(row);
        if i >= 2 && err <= 0.1 * tol * best.abs().max(1.0) {
            return Ok(best);
        }
    }
}

/// `omega_{k,a}`: half of `Gamma(w) Z_{2a}(w)` at `w = (k+1)/2 + |a|`, or
/// half of its finite part there when `p = k + 1` puts `w` on the pole.
pub fn omega(k: u32, a: &[u32], tol: f64) -> Result<f64> {
    validate_half(a)?;
    let p = a.len();
    let na = norm1(a) as f64;
    let w = (k as f64 + 1.0) / 2.0 + na;
    if p != k as usize + 1 {
        return Ok(0.5 * zgamma(a, w, tol)?);
    }
    let first = if norm1(a) == 0 { -PI.powf(w) / w } else { 0.0 };
    let laurent = residue_constant(a) * PI.powf(p as f64 / 2.0) * PI.ln();
    let ints = PI.powf(w - 2.0 * na) / (-4f64).powi(norm1(a) as i32) * entire_integrals(a, w, tol)?;
    Ok(0.5 * (first + laurent + ints))
}

/// `Omega_k(n)`.
pub fn big_omega(k: u32, p: usize, n: f64) -> Result<f64> {
    let pref = (n * PI).powf(p as f64 / 2.0);
    if p == k as usize + 1 {
        Ok(pref * (EULER_GAMMA - 1.0 + 0.5 * n.ln()))
    } else {
        Ok(pref * (zeta(p as f64 - k as f64)? - 1.0))
    }
}

fn check_n(n: f64) -> Result<()> {
    if n > 0.0 && n.is_finite() {
        Ok(())
    } else {
        Err(MelonError::invalid(format!("n must be positive, got {n}")))
    }
}

/// `sum_{l in Z} exp(-H^2 l^2 / n) (H l / sqrt n)^(2a) - [a = 0]`.
fn lattice_line(a: u32, h: f64, n: f64) -> f64 {
    let mut s = 0.0;
    let mut prev = f64::INFINITY;
    let mut l = 1u64;
    loop {
        let x2 = (h * l as f64).powi(2) / n;
        let term = (-x2).exp() * x2.powi(a as i32);
        s += term;
        if (term <= prev && term <= 1e-18 * s) || term == 0.0 && x2 > a as f64 {
            break;
        }
        prev = term;
        l += 1;
    }
    2.0 * s
}

/// `sum_{m in H Z^p, m != 0} exp(-|m|^2/n) (m / sqrt n)^(2a)`.
fn lattice_shell(a: &[u32], h: f64, n: f64) -> f64 {
    if a.iter().all(|&x| x == 0) {
        let e = lattice_line(0, h, n);
        return (a.len() as f64 * e.ln_1p()).exp_m1();
    }
    a.iter()
        .map(|&ai| {
            let l = lattice_line(ai, h, n);
            if ai == 0 {
                1.0 + l
            } else {
                l
            }
        })
        .product()
}

/// `sum_{h >= 1} w(h) * lattice_shell(h + 1)`, stopped once the terms are
/// past their peak and negligible.
fn h_sum(a: &[u32], n: f64, tol: f64, w: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut small = 0;
    let mut h = 1u64;
    loop {
        let hf = h as f64;
        let term = w(hf) * lattice_shell(a, hf + 1.0, n);
        sum += term;
        let mag = term.abs();
        if (hf + 1.0).powi(2) > n && mag <= prev && mag <= 1e-3 * tol * sum.abs() {
            small += 1;
            if small == 2 || mag == 0.0 {
                return sum;
            }
        } else {
            small = 0;
        }
        prev = mag;
        h += 1;
    }
}

/// `g_{k,a}(n) = sum_{h>=1} (h+1)^k sum_{m in (h+1)Z^p, m != 0}
/// exp(-|m|^2/n) (m/sqrt n)^(2a)`, summed directly.
pub fn g_exact(k: u32, a: &[u32], n: f64, tol: f64) -> Result<f64> {
    validate_half(a)?;
    check_n(n)?;
    Ok(h_sum(a, n, tol, |h| (h + 1.0).powi(k as i32)))
}

/// Large-`n` expansion of `g_{k,a}(n)`, exact up to `O(n^-M)` for every `M`.
pub fn g_asymptotic(k: u32, a: &[u32], n: f64, tol: f64) -> Result<f64> {
    validate_half(a)?;
    check_n(n)?;
    let p = a.len();
    let mut v = residue_constant(a) * big_omega(k, p, n)? + omega(k, a, tol)? * n.powf((k as f64 + 1.0) / 2.0);
    if norm1(a) == 0 {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        v += 1.0 - rational_to_f64(&bernoulli(k + 1)) * sign / (k as f64 + 1.0);
    }
    Ok(v)
}

/// `G_{s,a}(n) = sum_{h>=1} ((h-1)^s - h^s) sum_{m in (h+1)Z^p, m != 0}
/// (m/sqrt n)^(2a) exp(-|m|^2/n)`, summed directly.
#[allow(non_snake_case)]
pub fn G_exact(s: u32, a: &[u32], n: f64, tol: f64) -> Result<f64> {
    validate_half(a)?;
    check_n(n)?;
    if s == 0 {
        return Err(MelonError::invalid("s must be at least 1"));
    }
    Ok(h_sum(a, n, tol, |h| (h - 1.0).powi(s as i32) - h.powi(s as i32)))
}

/// `G_{s,a}` assembled from `g_{k,a}`, `k < s`.
#[allow(non_snake_case)]
pub fn G_from_g(s: u32, a: &[u32], n: f64, tol: f64) -> Result<f64> {
    let mut v = 0.0;
    for k in 0..s {
        let sign = if (s - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        let c = crate::special::binomial_f64(s, k) * (2f64.powi((s - k) as i32) - 1.0) * sign;
        v += c * g_exact(k, a, n, tol)?;
    }
    Ok(v)
}
