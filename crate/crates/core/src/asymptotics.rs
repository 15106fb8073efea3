//! Large-`n` behaviour of the height: the theta determinant `T_p`, the
//! moment constants `kappa_s`, the finite sums `lambda_k`, and the limiting
//! distribution function in three equivalent forms.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::det::{det_exact, det_f64, det_identity_plus_minus_one, inverse_exact};
use crate::dirichlet::omega;
use crate::error::{MelonError, Result};
use crate::exact::rational_to_f64;
use crate::quad::integrate;
use crate::special::{binomial_f64, fact_ratio, theta_reciprocal_split, theta_tails};

fn check_p(p: u32) -> Result<()> {
    if p == 0 {
        Err(MelonError::invalid("p must be at least 1"))
    } else {
        Ok(())
    }
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// `M_p = 2^(p^2) prod_{i<p} (2i+1)!`.
pub fn m_const(p: u32) -> Result<BigUint> {
    check_p(p)?;
    let mut m = BigUint::one() << (p as usize * p as usize);
    for i in 0..p as u64 {
        m *= factorial(2 * i + 1);
    }
    Ok(m)
}

/// The `p x p` theta determinant `T_p(t) = det(theta_{2i+2j+2}(t))` and the
/// normalised ratio `F(t) = t^(p^2+p/2) T_p(t) / ((-pi)^(p^2) M_p)`.
///
/// For `t < 1` the matrix is the power-law leading part `L = s D K D` plus an
/// exponentially small remainder `X`, where `K = ((2i+2j+2)!/(i+j+1)!)`,
/// `D = diag((-pi/t)^i)` and `s = (-pi/t) t^(-1/2)`. Then
/// `F = det(I + L^-1 X)`, and `1 - F` is the sum of the principal minors of
/// `L^-1 X`, free of cancellation.
#[derive(Debug, Clone)]
pub struct ThetaDeterminant {
    p: usize,
    kinv: Vec<f64>,
    m_p: f64,
}

impl ThetaDeterminant {
    pub fn new(p: u32) -> Result<Self> {
        check_p(p)?;
        let n = p as usize;
        let k: Vec<Vec<BigRational>> = (0..n as u64)
            .map(|i| {
                (0..n as u64)
                    .map(|j| {
                        BigRational::from_integer(BigInt::from(
                            factorial(2 * i + 2 * j + 2) / factorial(i + j + 1),
                        ))
                    })
                    .collect()
            })
            .collect();
        let inv = inverse_exact(&k)?;
        let kinv = inv.iter().flatten().map(rational_to_f64).collect();
        let m_p = m_const(p)?.to_f64().unwrap_or(f64::INFINITY);
        Ok(Self { p: n, kinv, m_p })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn exponent(&self) -> f64 {
        let p = self.p as f64;
        p * p + p / 2.0
    }

    fn norm_sign(&self) -> f64 {
        if (self.p * self.p).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// `det(I + L^-1 X) - 1` for `t < 1`.
    fn small_t_excess(&self, t: f64) -> f64 {
        let p = self.p;
        let (_, rem) = theta_reciprocal_split(2 * p as u32 - 1, t);
        let dinv: Vec<f64> = (0..p).map(|i| (-t / PI).powi(i as i32)).collect();
        let sinv = (-t / PI) * t.sqrt();
        let mut b = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..p {
                let mut acc = 0.0;
                for k in 0..p {
                    acc += self.kinv[i * p + k] * dinv[k] * rem[k + j + 1];
                }
                b[i * p + j] = sinv * dinv[i] * acc;
            }
        }
        det_identity_plus_minus_one(&b, p)
    }

    fn large_t_matrix_det(&self, t: f64) -> f64 {
        let p = self.p;
        let tails = theta_tails(2 * p as u32 - 1, t);
        let m: Vec<f64> = (0..p * p).map(|ij| tails[ij / p + ij % p + 1]).collect();
        det_f64(m, p)
    }

    /// `T_p(t)`.
    pub fn t_det(&self, t: f64) -> f64 {
        if t < 1.0 {
            let lead = self.norm_sign() * PI.powi((self.p * self.p) as i32) * self.m_p * t.powf(-self.exponent());
            lead * (1.0 + self.small_t_excess(t))
        } else {
            self.large_t_matrix_det(t)
        }
    }

    /// `F(t) = t^(p^2+p/2) T_p(t) / ((-pi)^(p^2) M_p)`.
    pub fn ratio(&self, t: f64) -> f64 {
        if t < 1.0 {
            1.0 + self.small_t_excess(t)
        } else {
            let norm = self.norm_sign() * PI.powi((self.p * self.p) as i32) * self.m_p;
            t.powf(self.exponent()) * self.large_t_matrix_det(t) / norm
        }
    }

    /// `1 - F(t)`.
    pub fn survival(&self, t: f64) -> f64 {
        if t < 1.0 {
            -self.small_t_excess(t)
        } else {
            1.0 - self.ratio(t)
        }
    }
}

/// `T_p(t) = det(theta_{2i+2j+2}(t))`.
pub fn t_det(p: u32, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(MelonError::invalid(format!("t must be positive, got {t}")));
    }
    Ok(ThetaDeterminant::new(p)?.t_det(t))
}

/// `kappa_s^(p)` with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaResult {
    pub p: u32,
    pub s: f64,
    pub value: f64,
    pub err_estimate: f64,
}

/// Below this `t` the `kappa` integrand is replaced by zero.
pub const KAPPA_T0: f64 = 0.05;

/// `kappa_s^(p) = (pi^(s/2) / 2) int_0^inf t^(-1-s/2) (1 - F(t)) dt`.
///
/// The integrand is at most `C t^-(1+s/2) exp(-pi/t)` on `(0, 0.05)` and is
/// dropped there; beyond the point `T_max` where `F < 1e-17` the integrand is
/// `t^(-1-s/2)` and is integrated in closed form.
pub fn kappa(p: u32, s: f64, tol: f64) -> Result<KappaResult> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(MelonError::invalid(format!("s must be positive, got {s}")));
    }
    let td = ThetaDeterminant::new(p)?;
    kappa_with(&td, s, tol)
}

pub(crate) fn kappa_with(td: &ThetaDeterminant, s: f64, tol: f64) -> Result<KappaResult> {
    let p = td.p() as u32;
    let mut t_max = 2.0;
    while td.ratio(t_max).abs() > 1e-17 {
        t_max *= 1.25;
    }
    let f = |t: f64| t.powf(-1.0 - s / 2.0) * td.survival(t);
    let abs_tol = 0.25 * tol;
    let lo = integrate(&f, KAPPA_T0, 1.0, abs_tol, 0.0)?;
    let hi = integrate(&f, 1.0, t_max, abs_tol, 0.0)?;
    let pref = PI.powf(s / 2.0) / 2.0;
    let tail = 2.0 / s * t_max.powf(-s / 2.0);
    // neglected head: |1 - F| <= 2 |X|-type bound; use the integrand at t0 times t0
    let head = (f(KAPPA_T0) * KAPPA_T0).abs();
    let value = pref * (lo.value + hi.value + tail);
    let err = pref * (lo.err + hi.err + head + 1e-17 * tail) + 4.0 * f64::EPSILON * value.abs();
    if err > tol {
        return Err(MelonError::Quadrature { tol, err });
    }
    Ok(KappaResult {
        p,
        s,
        value,
        err_estimate: err,
    })
}

/// Entry `(2i+2j+2)! / ((i+j+1-a_i)! (2a_i)!)`, zero when `a_i > i+j+1`.
fn lambda_entry(i: u64, j: u64, ai: u64) -> BigRational {
    if ai > i + j + 1 {
        return BigRational::zero();
    }
    let num = factorial(2 * i + 2 * j + 2);
    let den = factorial(i + j + 1 - ai) * factorial(2 * ai);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `lambda_k = -sum_a (-4)^|a| det((2i+2j+2)! / ((i+j+1-a_i)! (2a_i)!)) omega_{k-1,a}`
/// for `k >= 1` (the sum runs over `0 <= a_i <= i + p`, beyond which a row
/// of the determinant vanishes), and `lambda_0 = -(3/2) M_p`.
pub fn lambda_sum(p: u32, k: u32, tol: f64) -> Result<f64> {
    check_p(p)?;
    if k == 0 {
        return Ok(-1.5 * m_const(p)?.to_f64().unwrap_or(f64::INFINITY));
    }
    let n = p as usize;
    let bounds: Vec<u32> = (0..p).map(|i| i + p).collect();
    let mut cache: HashMap<Vec<u32>, f64> = HashMap::new();
    let mut a = vec![0u32; n];
    let mut total = 0.0;
    loop {
        let m: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| lambda_entry(i as u64, j as u64, a[i] as u64))
                    .collect()
            })
            .collect();
        let d = det_exact(&m)?;
        if !d.is_zero() {
            let mut key = a.clone();
            key.sort_unstable();
            let w = match cache.get(&key) {
                Some(&w) => w,
                None => {
                    let w = omega(k - 1, &key, tol)?;
                    cache.insert(key, w);
                    w
                }
            };
            let norm: u32 = a.iter().sum();
            total += (-4f64).powi(norm as i32) * rational_to_f64(&d) * w;
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(-total);
            }
            a[i] += 1;
            if a[i] <= bounds[i] {
                break;
            }
            a[i] = 0;
            i += 1;
        }
    }
}

/// `E H^s ~ s kappa_s n^(s/2) - 3 C(s,2) kappa_{s-1} n^((s-1)/2) - 3/2`.
pub fn moment_asymptotic(p: u32, n: f64, s: u32, tol: f64) -> Result<f64> {
    if s == 0 {
        return Err(MelonError::invalid("s must be at least 1"));
    }
    if !(n > 0.0) {
        return Err(MelonError::invalid("n must be positive"));
    }
    let td = ThetaDeterminant::new(p)?;
    let lead = s as f64 * kappa_with(&td, s as f64, tol)?.value * n.powf(s as f64 / 2.0);
    let second = if s >= 2 {
        3.0 * binomial_f64(s, 2) * kappa_with(&td, s as f64 - 1.0, tol)?.value * n.powf((s as f64 - 1.0) / 2.0)
    } else {
        0.0
    };
    Ok(lead - second - 1.5)
}

/// Arguments of the limiting distribution function: `p` branches and the
/// scaled height `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCdfQuery {
    pub p: u32,
    pub x: f64,
}

impl LimitCdfQuery {
    pub fn new(p: u32, x: f64) -> Result<Self> {
        check_p(p)?;
        if !(x > 0.0 && x.is_finite()) {
            return Err(MelonError::invalid(format!("scaled height must be positive, got {x}")));
        }
        Ok(Self { p, x })
    }
}

/// Limiting distribution function of `(H + 2)/sqrt(n)`:
/// `pi^(p/2) x^(-2p^2-p) / ((-2)^(p^2) prod (2i+1)!) det(theta_{2i+2j+2}(pi/x^2))`.
pub fn limit_cdf_det(q: &LimitCdfQuery) -> Result<f64> {
    let td = ThetaDeterminant::new(q.p)?;
    Ok(td.ratio(PI / (q.x * q.x)))
}

/// The limiting distribution function as an ordered multiple sum:
/// `2^(p^2+p) pi^(2p^2+p/2) x^(-2p^2-p) / prod (2i+1)!` times the sum over
/// `1 <= n_0 < ... < n_{p-1}` of `V(n^2)^2 prod n_j^2 exp(-(n_j pi / x)^2)`.
pub fn limit_cdf_schehr(q: &LimitCdfQuery, tol: f64) -> Result<f64> {
    let p = q.p as usize;
    let x = q.x;
    let pf = p as f64;
    let mut log_pref = (pf * pf + pf) * 2f64.ln() + (2.0 * pf * pf + pf / 2.0) * PI.ln()
        - (2.0 * pf * pf + pf) * x.ln();
    for i in 0..p as u32 {
        log_pref -= fact_ratio(2 * i + 1, 0).ln();
    }
    let log_term = |ns: &[usize]| -> f64 {
        let mut l = 0.0;
        for (a, &na) in ns.iter().enumerate() {
            let n2 = (na * na) as f64;
            l += n2.ln() - n2 * (PI / x).powi(2);
            for &nb in &ns[a + 1..] {
                l += 2.0 * ((nb * nb) as f64 - n2).ln();
            }
        }
        l
    };
    // tuples are grouped by their largest entry N; groups shrink once N is
    // past the peak of N^(4p) exp(-(N pi/x)^2)
    let peak = x / PI * (2.0 * pf).sqrt() + pf;
    let mut total = 0.0;
    let mut big_n = p;
    loop {
        let mut group = 0.0;
        let mut ns: Vec<usize> = (1..p).collect();
        ns.push(big_n);
        if p == 1 {
            group += (log_pref + log_term(&ns)).exp();
        } else {
            // enumerate 1 <= n_0 < ... < n_{p-2} < big_n
            let mut idx: Vec<usize> = (1..p).collect();
            loop {
                ns[..p - 1].copy_from_slice(&idx);
                group += (log_pref + log_term(&ns)).exp();
                let mut i = p - 1;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    if idx[i] < big_n - (p - 1 - i) {
                        idx[i] += 1;
                        for j in i + 1..p - 1 {
                            idx[j] = idx[j - 1] + 1;
                        }
                        break;
                    }
                    if i == 0 {
                        idx.clear();
                    }
                }
                if idx.is_empty() {
                    break;
                }
            }
        }
        total += group;
        if big_n as f64 > peak && group <= 1e-3 * tol * total.max(f64::MIN_POSITIVE) {
            return Ok(total);
        }
        big_n += 1;
        if big_n > 100_000 {
            return Err(MelonError::NonConvergence {
                what: "ordered multiple sum".into(),
                max_terms: big_n,
            });
        }
    }
}

/// `sum_{m in Z} (1 - 2 m^2 x^2) exp(-m^2 x^2)`, the `p = 1` limiting
/// distribution function of `H / sqrt(n)`.
pub fn limit_cdf_p1(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(MelonError::invalid(format!("scaled height must be positive, got {x}")));
    }
    let mut s = 1.0;
    let mut m = 1u64;
    loop {
        let u = (m as f64 * x).powi(2);
        let term = 2.0 * (1.0 - 2.0 * u) * (-u).exp();
        s += term;
        if u > 1.0 && term.abs() < 1e-18 {
            return Ok(s);
        }
        m += 1;
    }
}
