//! Small exact linear algebra over the rationals.
//!
//! Matrices here are tiny (a handful of rows), so a dense Gauss-Jordan
//! elimination on `BigRational` entries is all that is needed.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;
pub type RationalMatrix = Vec<Vec<Rational>>;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_rational_matrix(rows: &[Vec<i64>]) -> RationalMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&v| rat(v)).collect())
        .collect()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Reduced row echelon form; returns the pivot columns.
fn rref(m: &mut RationalMatrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in 0..cols {
                    let delta = &factor * &m[r][j];
                    m[i][j] = &m[i][j] - delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &RationalMatrix) -> usize {
    let mut work = m.clone();
    rref(&mut work).len()
}

pub fn rank_i64(rows: &[Vec<i64>]) -> usize {
    rank(&to_rational_matrix(rows))
}

/// Affine rank of a point set: rank of the differences to the first point.
pub fn affine_rank_i64(points: &[Vec<i64>]) -> usize {
    let Some(first) = points.first() else {
        return 0;
    };
    let diffs: Vec<Vec<i64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(first).map(|(a, b)| a - b).collect())
        .collect();
    if diffs.is_empty() {
        0
    } else {
        rank_i64(&diffs)
    }
}

pub fn affine_rank_rational(points: &[Vec<Rational>]) -> usize {
    let Some(first) = points.first() else {
        return 0;
    };
    let diffs: RationalMatrix = points[1..]
        .iter()
        .map(|p| p.iter().zip(first).map(|(a, b)| a - b).collect())
        .collect();
    if diffs.is_empty() {
        0
    } else {
        rank(&diffs)
    }
}

/// Basis of the right kernel `{x : m x = 0}` of a `rows x cols` matrix.
pub fn kernel(m: &RationalMatrix, cols: usize) -> Vec<Vec<Rational>> {
    let mut work = m.clone();
    let pivots = rref(&mut work);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); cols];
            v[f] = Rational::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -work[row][f].clone();
            }
            v
        })
        .collect()
}

/// Solves a square system; `None` when singular.
pub fn solve(a: &RationalMatrix, b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut aug: RationalMatrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots.iter().any(|&p| p >= n) {
        return None;
    }
    Some(aug.iter().map(|r| r[n].clone()).collect())
}

pub fn inverse(a: &RationalMatrix) -> Option<RationalMatrix> {
    let n = a.len();
    let mut aug: RationalMatrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn determinant(a: &RationalMatrix) -> Rational {
    let n = a.len();
    let mut m = a.clone();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !m[i][c].is_zero()) else {
            return Rational::zero();
        };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det = &det * &m[c][c];
        for i in c + 1..n {
            if !m[i][c].is_zero() {
                let factor = &m[i][c] / &m[c][c];
                for j in c..n {
                    let delta = &factor * &m[c][j];
                    m[i][j] = &m[i][j] - delta;
                }
            }
        }
    }
    det
}

/// Scales a rational vector to the primitive integer vector with the same direction.
pub fn primitive_integer(v: &[Rational]) -> Vec<i64> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    let ints: Vec<BigInt> = v.iter().map(|r| (r * &lcm).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let g = if g.is_zero() { BigInt::one() } else { g };
    ints.iter()
        .map(|x| (x / &g).to_i64().expect("normal entry fits in i64"))
        .collect()
}

pub fn gcd_slice(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |acc, &x| acc.gcd(&x)).abs()
}

pub fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_difference_row() {
        let m = to_rational_matrix(&[vec![2, 1]]);
        let k = kernel(&m, 2);
        assert_eq!(k.len(), 1);
        assert_eq!(primitive_integer(&k[0]), vec![-1, 2]);
    }

    #[test]
    fn inverse_and_determinant() {
        let m = to_rational_matrix(&[vec![2, 1], vec![1, 2]]);
        assert_eq!(determinant(&m), rat(3));
        let inv = inverse(&m).unwrap();
        assert_eq!(inv[0][0], rat_frac(2, 3));
        assert_eq!(inv[0][1], rat_frac(-1, 3));
        assert!(inverse(&to_rational_matrix(&[vec![1, 2], vec![2, 4]])).is_none());
    }

    #[test]
    fn ranks() {
        assert_eq!(affine_rank_i64(&[vec![0, 0], vec![1, 1], vec![2, 2]]), 1);
        assert_eq!(affine_rank_i64(&[vec![0, 0], vec![1, 0], vec![0, 1]]), 2);
        assert_eq!(affine_rank_i64(&[vec![3, 3]]), 0);
    }
}
