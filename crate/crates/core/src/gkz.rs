//! A-hypergeometric checks for `a ↦ M_{1/f}(a, s)`.
//!
//! Derivatives in the coefficients are themselves Mellin-type integrals:
//! `∂^c (1/f) = (-1)^{|c|} |c|! z^{⟨c,α⟩} / f^{1+|c|}`, so both the Euler
//! (homogeneity) operators and the box operators reduce to calls of
//! [`mellin_eval_many`] on one shared grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coamoeba::ArgDirection;
use crate::error::{Error, Result};
use crate::lattice::ExponentVector;
use crate::laurent::LaurentPolynomial;
use crate::mellin::{convergence_domain, mellin_eval_many, MellinValue, QuadratureSpec, TubePoint};

/// Entries of reported kernel vectors are capped at this modulus.
pub const MAX_KERNEL_ENTRY: i64 = 4;

/// Columns `(1, α_k)` in the polynomial's canonical term order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AMatrix {
    pub exponents: Vec<ExponentVector>,
    pub columns: Vec<Vec<i64>>,
}

impl AMatrix {
    pub fn from_exponents(exponents: &[ExponentVector]) -> Result<Self> {
        let n = exponents.first().map(|e| e.dim()).ok_or_else(|| {
            Error::InvalidInput("A-matrix needs at least one exponent".into())
        })?;
        if exponents.iter().any(|e| e.dim() != n) {
            return Err(Error::InvalidInput("exponents of mixed dimension".into()));
        }
        let columns = exponents
            .iter()
            .map(|e| {
                let mut c = vec![1];
                c.extend_from_slice(&e.0);
                c
            })
            .collect();
        Ok(AMatrix {
            exponents: exponents.to_vec(),
            columns,
        })
    }

    pub fn from_polynomial(f: &LaurentPolynomial) -> Result<Self> {
        Self::from_exponents(&f.support())
    }

    /// Number of columns `N`.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Number of rows `1 + n`.
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }

    pub fn row(&self, j: usize) -> Vec<i64> {
        self.columns.iter().map(|c| c[j]).collect()
    }

    pub fn apply(&self, b: &[i64]) -> Vec<i64> {
        (0..self.rows())
            .map(|j| self.columns.iter().zip(b).map(|(c, v)| c[j] * v).sum())
            .collect()
    }
}

/// Integer vector `b` with `A b = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelVector {
    pub b: Vec<i64>,
}

impl KernelVector {
    pub fn plus(&self) -> Vec<u32> {
        self.b.iter().map(|&v| v.max(0) as u32).collect()
    }

    pub fn minus(&self) -> Vec<u32> {
        self.b.iter().map(|&v| (-v).max(0) as u32).collect()
    }

    /// Common monomial exponent `⟨b^±, α⟩` and common order `|b^±|` of the
    /// two derivative integrands, if they agree.
    pub fn integrand_identity(&self, a: &AMatrix) -> Option<(ExponentVector, u32)> {
        let n = a.rows().checked_sub(1)?;
        let side = |c: &[u32]| -> (Vec<i64>, u32) {
            let mut e = vec![0i64; n];
            for (alpha, &k) in a.exponents.iter().zip(c) {
                for (ej, aj) in e.iter_mut().zip(&alpha.0) {
                    *ej += aj * k as i64;
                }
            }
            (e, c.iter().sum())
        };
        let (ep, np) = side(&self.plus());
        let (em, nm) = side(&self.minus());
        (ep == em && np == nm).then_some((ExponentVector(ep), np))
    }

    pub fn max_entry(&self) -> i64 {
        self.b.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

fn checked(v: Option<i128>) -> Result<i128> {
    v.ok_or_else(|| Error::Unsupported("integer overflow in kernel computation".into()))
}

/// Saturated integer basis of `ker A`, by unimodular column operations on `[A; I]`.
///
/// Vectors are size-reduced against each other and normalised so that the
/// first nonzero entry is positive.
pub fn integer_kernel(a: &AMatrix) -> Result<Vec<KernelVector>> {
    let ncols = a.len();
    let nrows = a.rows();
    // Column j of the working matrix: A-part then identity part.
    let mut cols: Vec<Vec<i128>> = (0..ncols)
        .map(|j| {
            let mut c: Vec<i128> = a.columns[j].iter().map(|&v| v as i128).collect();
            c.extend((0..ncols).map(|i| (i == j) as i128));
            c
        })
        .collect();
    let mut pivot = 0;
    for r in 0..nrows {
        // Euclid across the remaining columns until only one is nonzero in row r.
        loop {
            let live: Vec<usize> = (pivot..ncols).filter(|&j| cols[j][r] != 0).collect();
            if live.len() <= 1 {
                if let Some(&j) = live.first() {
                    cols.swap(pivot, j);
                    pivot += 1;
                }
                break;
            }
            let best = *live.iter().min_by_key(|&&j| cols[j][r].abs()).expect("nonempty");
            for &j in &live {
                if j == best {
                    continue;
                }
                let q = cols[j][r].div_euclid(cols[best][r]);
                for i in 0..cols[j].len() {
                    let v = checked(cols[best][i].checked_mul(q))?;
                    cols[j][i] = checked(cols[j][i].checked_sub(v))?;
                }
            }
        }
    }
    let mut basis: Vec<Vec<i128>> = cols[pivot..]
        .iter()
        .map(|c| c[nrows..].to_vec())
        .collect();
    size_reduce(&mut basis)?;
    basis
        .into_iter()
        .map(|mut v| {
            if v.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            let b = v
                .into_iter()
                .map(|x| i64::try_from(x).map_err(|_| Error::Unsupported("kernel entry overflow".into())))
                .collect::<Result<Vec<i64>>>()?;
            Ok(KernelVector { b })
        })
        .collect()
}

fn norm2(v: &[i128]) -> i128 {
    v.iter().map(|x| x * x).sum()
}

/// Pairwise reduction `b_i ← b_i - round(⟨b_i,b_j⟩/⟨b_j,b_j⟩) b_j` until stable.
fn size_reduce(basis: &mut [Vec<i128>]) -> Result<()> {
    let mut changed = true;
    let mut rounds = 0;
    while changed && rounds < 64 {
        changed = false;
        rounds += 1;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                if i == j {
                    continue;
                }
                let nj = norm2(&basis[j]);
                if nj == 0 {
                    continue;
                }
                let dot: i128 = basis[i].iter().zip(&basis[j]).map(|(x, y)| x * y).sum();
                let q = (2 * dot + nj).div_euclid(2 * nj);
                if q == 0 {
                    continue;
                }
                let cand: Vec<i128> = basis[i]
                    .iter()
                    .zip(&basis[j])
                    .map(|(x, y)| x - q * y)
                    .collect();
                if norm2(&cand) < norm2(&basis[i]) {
                    basis[i] = cand;
                    changed = true;
                }
            }
        }
    }
    Ok(())
}

/// A-matrix of `supp f` and its integer kernel, dropping basis vectors with
/// entries above [`MAX_KERNEL_ENTRY`].
pub fn a_matrix_kernel(f: &LaurentPolynomial) -> Result<(AMatrix, Vec<KernelVector>)> {
    let a = AMatrix::from_polynomial(f)?;
    let mut kernel = integer_kernel(&a)?;
    kernel.retain(|k| {
        let keep = k.max_entry() <= MAX_KERNEL_ENTRY;
        if !keep {
            log::warn!("dropping kernel vector {:?}: entries exceed {}", k.b, MAX_KERNEL_ENTRY);
        }
        keep
    });
    Ok((a, kernel))
}

/// `E_A(a) = a_1 a_2 a_3 a_4 (a_1 a_4 - a_2 a_3)` when `supp f` is the unit square.
pub fn unit_square_discriminant(f: &LaurentPolynomial) -> Option<Complex64> {
    if f.nvars() != 2 || f.len() != 4 {
        return None;
    }
    let c = |e: [i64; 2]| f.coeff(&ExponentVector(e.to_vec()));
    let (a1, a2, a3, a4) = (c([0, 0]), c([1, 0]), c([0, 1]), c([1, 1]));
    if [a1, a2, a3, a4].iter().any(|v| v.norm() == 0.0) {
        return None;
    }
    Some(a1 * a2 * a3 * a4 * (a1 * a4 - a2 * a3))
}

/// Rejects unit-square coefficients on the principal A-determinant locus.
pub fn check_unit_square_guard(f: &LaurentPolynomial) -> Result<()> {
    if unit_square_discriminant(f).is_none() {
        return Ok(());
    }
    let c = |e: [i64; 2]| f.coeff(&ExponentVector(e.to_vec()));
    let (p, q) = (c([0, 0]) * c([1, 1]), c([1, 0]) * c([0, 1]));
    if (p - q).norm() <= 1e-12 * (p.norm() + q.norm()) {
        return Err(Error::OnDiscriminant(format!("a1 a4 = a2 a3 = {p}")));
    }
    Ok(())
}

/// Normalised residuals of the `1 + n` homogeneity equations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerResidual {
    /// Degree row first, then one entry per variable.
    pub residuals: Vec<f64>,
    /// Error-propagated bound for each residual.
    pub err_bounds: Vec<f64>,
    pub mellin: MellinValue,
    pub derivatives: Vec<MellinValue>,
}

/// `|M + Σ a_k ∂_k M| / |M|` and `|s_j M + Σ_k α_{jk} a_k ∂_k M| / |M|`, with
/// `∂_k M` the transform of `-z^{α_k} / f²`.
pub fn euler_residual(
    f: &LaurentPolynomial,
    s: &TubePoint,
    theta: &ArgDirection,
    spec: &QuadratureSpec,
) -> Result<EulerResidual> {
    check_unit_square_guard(f)?;
    let n = f.nvars();
    let terms: Vec<(ExponentVector, Complex64)> = f.terms().map(|(e, c)| (e.clone(), *c)).collect();
    let mut integrands = vec![(LaurentPolynomial::one(n), 1)];
    for (e, _) in &terms {
        integrands.push((LaurentPolynomial::monomial(e.clone(), Complex64::new(-1.0, 0.0)), 2));
    }
    let mut values = mellin_eval_many(&integrands, f, s, theta, spec)?;
    let mellin = values.remove(0);
    let m = mellin.value;
    let mnorm = m.norm();

    let mut residuals = Vec::with_capacity(n + 1);
    let mut err_bounds = Vec::with_capacity(n + 1);
    let mut deg = m;
    let mut deg_err = mellin.err_estimate;
    for ((_, a), d) in terms.iter().zip(&values) {
        deg += a * d.value;
        deg_err += a.norm() * d.err_estimate;
    }
    residuals.push(deg.norm() / mnorm);
    err_bounds.push(deg_err / mnorm);
    for j in 0..n {
        let sj = s.component(j);
        let mut r = sj * m;
        let mut err = sj.norm() * mellin.err_estimate;
        for ((e, a), d) in terms.iter().zip(&values) {
            let w = e.0[j] as f64;
            r += a * d.value * w;
            err += (a.norm() * d.err_estimate * w).abs();
        }
        residuals.push(r.norm() / mnorm);
        err_bounds.push(err / mnorm);
    }
    Ok(EulerResidual {
        residuals,
        err_bounds,
        mellin,
        derivatives: values,
    })
}

/// Result of applying `□_b = ∂^{b⁺} - ∂^{b⁻}` to `M_{1/f}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxResidual {
    pub b: Vec<i64>,
    pub residual: f64,
    /// Common numerator exponent `⟨b^±, α⟩` and denominator power `1 + |b^±|`.
    pub exponent: ExponentVector,
    pub power: u32,
    pub plus: Option<MellinValue>,
    pub minus: Option<MellinValue>,
}

fn derivative_integrand(a: &AMatrix, c: &[u32]) -> Result<(LaurentPolynomial, u32)> {
    let n = a.rows() - 1;
    let order: u32 = c.iter().sum();
    let mut g = LaurentPolynomial::one(n);
    for (alpha, &k) in a.exponents.iter().zip(c) {
        let mono = LaurentPolynomial::monomial(alpha.clone(), Complex64::new(1.0, 0.0));
        g = g.multiply(&mono.pow(k)?)?;
    }
    let factorial: f64 = (1..=order).map(|v| v as f64).product();
    let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok((g.scale(&Complex64::new(sign * factorial, 0.0)), 1 + order))
}

/// Normalised `|∂^{b⁺} M - ∂^{b⁻} M|`.
///
/// The two integrands are built independently as products of `z^{α_k}` and
/// compared symbolically before either is integrated.
pub fn box_residual(
    f: &LaurentPolynomial,
    b: &KernelVector,
    s: &TubePoint,
    theta: &ArgDirection,
    spec: &QuadratureSpec,
) -> Result<BoxResidual> {
    check_unit_square_guard(f)?;
    let a = AMatrix::from_polynomial(f)?;
    if b.b.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.b.len(),
        });
    }
    if a.apply(&b.b).iter().any(|&v| v != 0) {
        return Err(Error::InvalidInput(format!("{:?} is not in the kernel of A", b.b)));
    }
    let (exponent, order) = b
        .integrand_identity(&a)
        .ok_or_else(|| Error::InvariantViolation("derivative integrands differ".into()))?;
    if order == 0 {
        return Ok(BoxResidual {
            b: b.b.clone(),
            residual: 0.0,
            exponent,
            power: 1,
            plus: None,
            minus: None,
        });
    }
    let (gp, pp) = derivative_integrand(&a, &b.plus())?;
    let (gm, pm) = derivative_integrand(&a, &b.minus())?;
    if gp != gm || pp != pm {
        return Err(Error::InvariantViolation("derivative integrands differ".into()));
    }
    let domain = convergence_domain(&gp, f, pp)?;
    if !domain.contains(&s.sigma) {
        return Err(Error::Domain(format!(
            "Re s = {:?} shifted by {:?} leaves the convergence domain of power {}",
            s.sigma, exponent.0, pp
        )));
    }
    let mut v = mellin_eval_many(&[(gp, pp)], f, s, theta, spec)?;
    let plus = v.remove(0);
    let mut v = mellin_eval_many(&[(gm, pm)], f, s, theta, spec)?;
    let minus = v.remove(0);
    let scale = plus.value.norm().max(minus.value.norm());
    let residual = if scale == 0.0 {
        0.0
    } else {
        (plus.value - minus.value).norm() / scale
    };
    Ok(BoxResidual {
        b: b.b.clone(),
        residual,
        exponent,
        power: pp,
        plus: Some(plus),
        minus: Some(minus),
    })
}
