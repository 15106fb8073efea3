//! Determinants: fraction-free Bareiss elimination for exact integer and
//! rational matrices, and partial-pivoting LU for floating point.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{MelonError, Result};

fn check_square<T>(m: &[Vec<T>]) -> Result<usize> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(MelonError::invalid("matrix is not square"));
    }
    Ok(n)
}

/// Exact determinant of an integer matrix by Bareiss elimination.
///
/// Every intermediate division is exact, so entries stay integral and
/// grow at most like the minors of the input.
pub fn det_bareiss(matrix: &[Vec<BigInt>]) -> Result<BigInt> {
    let n = check_square(matrix)?;
    if n == 0 {
        return Ok(BigInt::one());
    }
    let mut a: Vec<Vec<BigInt>> = matrix.to_vec();
    let mut sign_flip = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign_flip = !sign_flip;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    Ok(if sign_flip { -d } else { d })
}

/// Exact determinant of a rational matrix.
///
/// Rows are cleared of denominators, the integer determinant is taken by
/// Bareiss elimination and the row scalings are divided back out.
pub fn det_exact(matrix: &[Vec<BigRational>]) -> Result<BigRational> {
    check_square(matrix)?;
    let mut scale = BigInt::one();
    let mut int_rows = Vec::with_capacity(matrix.len());
    for row in matrix {
        let lcm = row
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        int_rows.push(
            row.iter()
                .map(|x| x.numer() * (&lcm / x.denom()))
                .collect::<Vec<_>>(),
        );
        scale *= lcm;
    }
    let d = det_bareiss(&int_rows)?;
    Ok(BigRational::new(d, scale))
}

/// Exact inverse of a nonsingular rational matrix (Gauss-Jordan).
pub fn inverse_exact(matrix: &[Vec<BigRational>]) -> Result<Vec<Vec<BigRational>>> {
    let n = check_square(matrix)?;
    let mut a: Vec<Vec<BigRational>> = matrix.to_vec();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| MelonError::invalid("matrix is singular"))?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = &a[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for j in 0..n {
                let t = &f * &a[col][j];
                a[r][j] -= t;
                let t = &f * &inv[col][j];
                inv[r][j] -= t;
            }
        }
    }
    Ok(inv)
}

/// Floating-point determinant by LU with partial pivoting. `a` is row-major
/// `n x n` and is consumed as scratch space.
pub fn det_f64(mut a: Vec<f64>, n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut det = 1.0;
    for k in 0..n {
        let (piv, maxval) = (k..n)
            .map(|r| (r, a[r * n + k].abs()))
            .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
        if maxval == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let pivot = a[k * n + k];
        det *= pivot;
        for i in k + 1..n {
            let f = a[i * n + k] / pivot;
            if f != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
    }
    det
}

/// `det(I + b) - 1` as the sum of all nonempty principal minors of `b`.
///
/// No `1 - 1` cancellation occurs, so the result keeps full relative
/// accuracy when `b` is small.
pub fn det_identity_plus_minus_one(b: &[f64], n: usize) -> f64 {
    debug_assert_eq!(b.len(), n * n);
    let mut total = 0.0;
    let mut idx = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        idx.clear();
        idx.extend((0..n).filter(|&i| mask & (1 << i) != 0));
        let k = idx.len();
        let mut sub = Vec::with_capacity(k * k);
        for &i in &idx {
            for &j in &idx {
                sub.push(b[i * n + j]);
            }
        }
        total += det_f64(sub, k);
    }
    total
}

/// Exact integer `x` as a big rational, for building test matrices.
#[cfg(test)]
pub(crate) fn rat(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int_matrix(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect()
    }

    /// Leibniz expansion, the independent oracle for small matrices.
    fn det_leibniz(m: &[Vec<BigInt>]) -> BigInt {
        let n = m.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut total = BigInt::zero();
        fn rec(k: usize, perm: &mut Vec<usize>, m: &[Vec<BigInt>], total: &mut BigInt) {
            let n = perm.len();
            if k == n {
                let mut inv = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if perm[i] > perm[j] {
                            inv += 1;
                        }
                    }
                }
                let mut prod = BigInt::one();
                for (i, &j) in perm.iter().enumerate() {
                    prod *= &m[i][j];
                }
                if inv % 2 == 1 {
                    *total -= prod;
                } else {
                    *total += prod;
                }
                return;
            }
            for i in k..n {
                perm.swap(k, i);
                rec(k + 1, perm, m, total);
                perm.swap(k, i);
            }
        }
        rec(0, &mut perm, m, &mut total);
        total
    }

    #[test]
    fn identity_has_unit_determinant() {
        let id = int_matrix(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(det_bareiss(&id).unwrap(), BigInt::one());
    }

    #[test]
    fn equal_rows_give_zero() {
        let m = int_matrix(&[&[1, 2, 3], &[4, 5, 6], &[1, 2, 3]]);
        assert_eq!(det_bareiss(&m).unwrap(), BigInt::zero());
        let q: Vec<Vec<BigRational>> = m
            .iter()
            .map(|r| r.iter().map(|x| BigRational::new(x.clone(), BigInt::from(7))).collect())
            .collect();
        assert!(det_exact(&q).unwrap().is_zero());
    }

    #[test]
    fn zero_pivot_requires_row_swap() {
        let m = int_matrix(&[&[0, 1, 2], &[3, 0, 1], &[4, 5, 0]]);
        assert_eq!(det_bareiss(&m).unwrap(), det_leibniz(&m));
    }

    #[test]
    fn factorial_hankel_determinant_p3() {
        // (2i+2j+2)!/(i+j+1)! for 0 <= i,j < 3; expected 2^9 * 1! * 3! * 5!.
        let fact = |k: u64| (1..=k).fold(BigInt::one(), |acc, x| acc * x);
        let m: Vec<Vec<BigInt>> = (0..3u64)
            .map(|i| {
                (0..3u64)
                    .map(|j| fact(2 * i + 2 * j + 2) / fact(i + j + 1))
                    .collect()
            })
            .collect();
        assert_eq!(det_leibniz(&m), BigInt::from(368640));
        assert_eq!(det_bareiss(&m).unwrap(), BigInt::from(368640));
    }

    #[test]
    fn rational_determinant_matches_hand_value() {
        let half = BigRational::new(1.into(), 2.into());
        let third = BigRational::new(1.into(), 3.into());
        let m = vec![vec![half.clone(), third.clone()], vec![third.clone(), half.clone()]];
        assert_eq!(det_exact(&m).unwrap(), BigRational::new(5.into(), 36.into()));
    }

    #[test]
    fn inverse_round_trips() {
        let m: Vec<Vec<BigRational>> = vec![
            vec![rat(2), rat(12), rat(120)],
            vec![rat(12), rat(120), rat(1680)],
            vec![rat(120), rat(1680), rat(30240)],
        ];
        let inv = inverse_exact(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: BigRational = (0..3).map(|k| &m[i][k] * &inv[k][j]).sum();
                assert_eq!(s, if i == j { rat(1) } else { rat(0) });
            }
        }
    }

    #[test]
    fn principal_minor_sum_matches_direct() {
        let b = vec![0.1, -0.2, 0.05, 0.3, 0.01, -0.07, 0.02, 0.4, -0.3];
        let mut ib = b.clone();
        for i in 0..3 {
            ib[i * 3 + i] += 1.0;
        }
        let direct = det_f64(ib, 3) - 1.0;
        assert!((det_identity_plus_minus_one(&b, 3) - direct).abs() < 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn bareiss_agrees_with_leibniz(entries in proptest::collection::vec(-50i64..50, 16)) {
            let m: Vec<Vec<BigInt>> = entries.chunks(4).map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
            proptest::prop_assert_eq!(det_bareiss(&m).unwrap(), det_leibniz(&m));
        }
    }
}
