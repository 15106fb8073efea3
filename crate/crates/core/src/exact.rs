//! Exact enumeration of p-watermelons with wall: total counts, counts with
//! bounded height, the height distribution and its moments.
//!
//! All counts are arbitrary-precision integers obtained from
//! Lindström–Gessel–Viennot determinants of ballot numbers. The bounded
//! counts use the repeated reflection principle, which turns each entry into
//! a finite alternating sum of binomial coefficients.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint, ToBigInt};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::det::det_bareiss;
use crate::error::{MelonError, Result};

/// The ensemble of p-watermelons of length 2n with wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WatermelonSpec {
    p: u32,
    n: u32,
}

impl WatermelonSpec {
    /// `p >= 1` branches, half-length `n`. `n = 0` is accepted and denotes the
    /// single empty watermelon, whose height is taken to be `2p - 2`.
    pub fn new(p: u32, n: u32) -> Result<Self> {
        if p == 0 {
            return Err(MelonError::invalid("p must be at least 1"));
        }
        Ok(Self { p, n })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Smallest possible height.
    pub fn min_height(&self) -> u64 {
        if self.n == 0 {
            2 * self.p as u64 - 2
        } else {
            2 * self.p as u64 - 1
        }
    }

    /// Largest possible height, `n + 2p - 2`.
    pub fn max_height(&self) -> u64 {
        self.n as u64 + 2 * self.p as u64 - 2
    }
}

/// An exact non-negative count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountResult {
    pub value: BigUint,
}

impl CountResult {
    fn from_signed(v: BigInt) -> Self {
        let value = v
            .to_biguint()
            .expect("watermelon counts are never negative");
        Self { value }
    }
}

impl std::fmt::Display for CountResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.value.fmt(f)
    }
}

/// `C(n, k)`, zero outside `0 <= k <= n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// The full row `C(len, 0..=len)` with zero-padded lookups.
#[derive(Debug, Clone)]
pub(crate) struct BinomialRow {
    len: u64,
    row: Vec<BigInt>,
    zero: BigInt,
}

impl BinomialRow {
    pub(crate) fn new(len: u64) -> Self {
        let mut row = Vec::with_capacity(len as usize + 1);
        let mut c = BigUint::one();
        row.push(BigInt::one());
        for k in 0..len {
            c *= len - k;
            c /= k + 1;
            row.push(c.to_bigint().unwrap());
        }
        Self {
            len,
            row,
            zero: BigInt::zero(),
        }
    }

    pub(crate) fn get(&self, k: i64) -> &BigInt {
        if k < 0 || k as u64 > self.len {
            &self.zero
        } else {
            &self.row[k as usize]
        }
    }
}

/// Number of ±1 paths of length `len` from height `a` to height `b` that
/// never go below zero (reflection principle).
pub fn ballot_count(a: i64, b: i64, len: u64) -> BigUint {
    if a < 0 || b < 0 || (a + b + len as i64) % 2 != 0 {
        return BigUint::zero();
    }
    let up = (len as i64 + b - a) / 2;
    let reflected = (len as i64 + a + b) / 2 + 1;
    binomial(len, up) - binomial(len, reflected)
}

fn total_matrix(spec: &WatermelonSpec, row: &BinomialRow) -> Vec<Vec<BigInt>> {
    let n = spec.n as i64;
    let p = spec.p as i64;
    (0..p)
        .map(|i| {
            (0..p)
                .map(|j| row.get(n + i - j) - row.get(n - 1 - i - j))
                .collect()
        })
        .collect()
}

/// Total number of p-watermelons of length 2n, as an LGV determinant.
pub fn count_total(spec: &WatermelonSpec) -> CountResult {
    let row = BinomialRow::new(2 * spec.n as u64);
    CountResult::from_signed(det_bareiss(&total_matrix(spec, &row)).unwrap())
}

/// Total count from the product formula
/// `prod_{j<p} C(2n+2j, n) / C(n+2j+1, n)`.
pub fn count_total_closed(spec: &WatermelonSpec) -> CountResult {
    let n = spec.n as u64;
    let mut acc = BigRational::one();
    for j in 0..spec.p as u64 {
        let num = binomial(2 * n + 2 * j, n as i64);
        let den = binomial(n + 2 * j + 1, n as i64);
        acc *= BigRational::new(num.into(), den.into());
    }
    assert!(
        acc.is_integer(),
        "product formula did not reduce to an integer for {spec:?}"
    );
    CountResult::from_signed(acc.to_integer())
}

fn bounded_matrix(spec: &WatermelonSpec, h: u64, row: &BinomialRow) -> Vec<Vec<BigInt>> {
    let n = spec.n as i64;
    let p = spec.p as i64;
    let period = h as i64 + 1;
    // every other m has all its binomials outside [0, 2n]
    let m_max = (2 * n + 2 * p) / period;
    (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let mut e = BigInt::zero();
                    for m in -m_max..=m_max {
                        let shift = n + m * period;
                        e += row.get(shift + i - j);
                        e -= row.get(shift - 1 - i - j);
                    }
                    e
                })
                .collect()
        })
        .collect()
}

/// Number of watermelons whose height is strictly less than `h`.
pub fn count_bounded(spec: &WatermelonSpec, h: u64) -> CountResult {
    let row = BinomialRow::new(2 * spec.n as u64);
    CountResult::from_signed(det_bareiss(&bounded_matrix(spec, h, &row)).unwrap())
}

/// `M_{2n,h}` for `h = 0..=max_height+1`; the last entry is the total.
fn bounded_counts(spec: &WatermelonSpec) -> Vec<BigInt> {
    let row = BinomialRow::new(2 * spec.n as u64);
    (0..=spec.max_height() + 1)
        .into_par_iter()
        .map(|h| det_bareiss(&bounded_matrix(spec, h, &row)).unwrap())
        .collect()
}

/// Exact law of the height over the uniform ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightDistribution {
    pub spec: WatermelonSpec,
    /// Watermelons with height exactly `h`; only nonzero entries are stored.
    pub counts: BTreeMap<u64, BigUint>,
    pub total: BigUint,
}

impl HeightDistribution {
    pub fn count(&self, h: u64) -> BigUint {
        self.counts.get(&h).cloned().unwrap_or_default()
    }

    /// `P(H = h)` as an exact rational.
    pub fn probability(&self, h: u64) -> BigRational {
        BigRational::new(self.count(h).into(), self.total.clone().into())
    }

    /// `P(H <= h)` as an exact rational.
    pub fn cdf(&self, h: u64) -> BigRational {
        let below: BigUint = self.counts.range(..=h).map(|(_, c)| c).sum();
        BigRational::new(below.into(), self.total.clone().into())
    }

    /// `E[H^s]` from the pmf.
    pub fn moment(&self, s: u32) -> BigRational {
        let weighted: BigUint = self
            .counts
            .iter()
            .map(|(&h, c)| BigUint::from(h).pow(s) * c)
            .sum();
        BigRational::new(weighted.into(), self.total.clone().into())
    }
}

/// Exact height distribution, `counts[h] = M_{2n,h+1} - M_{2n,h}`.
pub fn height_pmf(spec: &WatermelonSpec) -> HeightDistribution {
    let bounded = bounded_counts(spec);
    let total = bounded.last().cloned().unwrap();
    let mut counts = BTreeMap::new();
    for (h, pair) in bounded.windows(2).enumerate() {
        let c = &pair[1] - &pair[0];
        debug_assert!(!c.is_negative());
        if !c.is_zero() {
            counts.insert(h as u64, c.to_biguint().unwrap());
        }
    }
    HeightDistribution {
        spec: *spec,
        counts,
        total: total.to_biguint().unwrap(),
    }
}

/// `E[H^s]` from the telescoped sum
/// `(1/M) sum_{h>=1} (h^s - (h-1)^s)(M - M_h)`.
pub fn exact_moment(spec: &WatermelonSpec, s: u32) -> Result<BigRational> {
    if s == 0 {
        return Err(MelonError::invalid("moment order s must be at least 1"));
    }
    let bounded = bounded_counts(spec);
    let total = bounded.last().cloned().unwrap();
    let mut acc = BigInt::zero();
    for h in 1..=spec.max_height() {
        let diff = BigInt::from(h).pow(s) - BigInt::from(h - 1).pow(s);
        acc += diff * (&total - &bounded[h as usize]);
    }
    Ok(BigRational::new(acc, total))
}

/// Convert an exact rational to the nearest-ish `f64`.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
