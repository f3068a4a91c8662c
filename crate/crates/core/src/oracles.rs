//! Closed-form Mellin transforms and entire factors used as ground truth.
//!
//! Everything here is independent of the trapezoid machinery in
//! [`crate::mellin`]: formulas are evaluated through [`crate::gamma`] and the
//! one genuinely integral oracle (products of linear forms) uses its own
//! simplex quadrature.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{determinant, inverse, to_f64, to_rational_matrix};
use crate::gamma::{gamma, rgamma};
use crate::lattice::ExponentVector;
use crate::laurent::LaurentPolynomial;
use crate::mellin::{QuadratureSpec, TubePoint};

fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Principal branch of `a^w`.
fn cpow(a: Complex64, w: Complex64) -> Complex64 {
    (w * a.ln()).exp()
}

fn rpow(a: f64, w: Complex64) -> Complex64 {
    (w * a.ln()).exp()
}

/// Affine form `c_0 + Σ c_k z_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    pub coeffs: Vec<f64>,
}

impl LinearForm {
    pub fn new(coeffs: Vec<f64>) -> Self {
        LinearForm { coeffs }
    }

    /// `1 + ⟨a, z⟩`.
    pub fn unit_constant(a: &[f64]) -> Self {
        let mut coeffs = vec![1.0];
        coeffs.extend_from_slice(a);
        LinearForm { coeffs }
    }

    pub fn nvars(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn to_polynomial(&self) -> Result<LaurentPolynomial> {
        let n = self.nvars();
        let terms = self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, &c)| {
            let e = if k == 0 {
                ExponentVector::zeros(n)
            } else {
                ExponentVector::unit(n, k - 1)
            };
            (e, cplx(c))
        });
        LaurentPolynomial::from_terms(n, terms)
    }
}

fn check_dim(s: &TubePoint, n: usize) -> Result<()> {
    if s.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s.dim(),
        });
    }
    Ok(())
}

/// `M_{1/(c_0 + Σ c_k z_k)}(s) = c_0^{Σs-1} ∏ c_k^{-s_k} ∏ Γ(s_k) Γ(1 - Σ s_k)`.
pub fn linear_fraction_mellin(c: &[f64], s: &TubePoint) -> Result<Complex64> {
    if c.len() < 2 {
        return Err(Error::InvalidInput("need at least two coefficients".into()));
    }
    let n = c.len() - 1;
    check_dim(s, n)?;
    if c.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("coefficients must be positive".into()));
    }
    let total: f64 = s.sigma.iter().sum();
    if s.sigma.iter().any(|&v| v <= 0.0) || total >= 1.0 {
        return Err(Error::Domain(format!(
            "Re s = {:?} outside the strip 0 < Re s_k, Σ Re s_k < 1",
            s.sigma
        )));
    }
    let ss: Complex64 = s.to_complex().iter().sum();
    let mut v = rpow(c[0], ss - 1.0) * gamma(cplx(1.0) - ss);
    for (k, sk) in s.to_complex().into_iter().enumerate() {
        v *= rpow(c[k + 1], -sk) * gamma(sk);
    }
    Ok(v)
}

/// One-dimensional rule on `(0, 1)`: nodes `u`, complements `1 - u`, weights.
#[derive(Clone, Debug)]
struct UnitRule {
    nodes: Vec<(f64, f64, f64)>,
}

impl UnitRule {
    fn gauss(degree: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(degree).expect("positive degree"));
        let nodes = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (1.0 + x), 0.5 * (1.0 - x), 0.5 * w))
            .collect();
        UnitRule { nodes }
    }

    /// Tanh-sinh rule with step `h`; tolerates integrable endpoint singularities.
    fn tanh_sinh(h: f64) -> Self {
        const T_MAX: f64 = 6.2;
        let k_max = (T_MAX / h).floor() as i64;
        let mut nodes = Vec::with_capacity(2 * k_max as usize + 1);
        for k in -k_max..=k_max {
            let t = k as f64 * h;
            let q = PI * t.sinh();
            let u = 1.0 / (1.0 + (-q).exp());
            let v = 1.0 / (1.0 + q.exp());
            let w = h * PI * t.cosh() * u * v;
            if u > 0.0 && v > 0.0 && w > 0.0 {
                nodes.push((u, v, w));
            }
        }
        UnitRule { nodes }
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }
}

const MAX_SIMPLEX_POINTS: usize = 20_000_000;

/// `∫_{σ_m} F(τ, 1 - Στ) dτ` through the collapsed-coordinate map of the cube.
fn simplex_integral<F>(m: usize, singular: bool, spec: &QuadratureSpec, integrand: F) -> Result<Complex64>
where
    F: Fn(&[f64], f64) -> Complex64,
{
    if m == 0 {
        return Ok(integrand(&[], 1.0));
    }
    let levels = 8;
    let mut prev: Option<Complex64> = None;
    let mut last_diff = f64::INFINITY;
    for level in 0..levels {
        let rule = if singular {
            UnitRule::tanh_sinh(0.5 / (1u32 << level) as f64)
        } else {
            UnitRule::gauss(8 << level)
        };
        if rule.len().pow(m as u32) > MAX_SIMPLEX_POINTS {
            break;
        }
        let v = cube_sum(&rule, m, &integrand);
        if let Some(p) = prev {
            last_diff = (v - p).norm();
            if last_diff <= spec.tol * v.norm().max(f64::MIN_POSITIVE) {
                return Ok(v);
            }
        }
        prev = Some(v);
    }
    Err(Error::NoConvergence {
        refinements: levels,
        last_diff,
    })
}

fn cube_sum<F>(rule: &UnitRule, m: usize, integrand: &F) -> Complex64
where
    F: Fn(&[f64], f64) -> Complex64,
{
    let len = rule.len();
    let total = len.pow(m as u32);
    let mut tau = vec![0.0; m];
    let mut acc = Complex64::new(0.0, 0.0);
    for mut flat in 0..total {
        let mut idx = [0usize; 3];
        for d in (0..m).rev() {
            idx[d] = flat % len;
            flat /= len;
        }
        // τ_k = u_k ∏_{i<k} (1 - u_i); the Jacobian is ∏ (1 - u_i)^{m-1-i}.
        let mut rest = 1.0;
        let mut weight = 1.0;
        for d in 0..m {
            let (u, v, w) = rule.nodes[idx[d]];
            tau[d] = rest * u;
            weight *= w * rest;
            rest *= v;
        }
        acc += integrand(&tau, rest) * weight;
    }
    acc
}

fn check_product_input(a: &[Vec<f64>]) -> Result<(usize, usize, bool)> {
    if a.is_empty() {
        return Err(Error::InvalidInput("need at least one linear factor".into()));
    }
    let m = a.len() - 1;
    let n = a[0].len();
    if n == 0 || a.iter().any(|v| v.len() != n) {
        return Err(Error::InvalidInput("factor vectors must share one nonzero length".into()));
    }
    if m > 3 {
        return Err(Error::Unsupported(format!("{} linear factors (at most 4)", m + 1)));
    }
    if a.iter().flatten().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Domain("linear factor coefficients must be non-negative".into()));
    }
    for j in 0..n {
        if a.iter().all(|v| v[j] == 0.0) {
            return Err(Error::Domain(format!("variable {} appears in no factor", j + 1)));
        }
    }
    let singular = a.iter().flatten().any(|&v| v == 0.0);
    Ok((m, n, singular))
}

fn alpha_tau(a: &[Vec<f64>], tau: &[f64], rest: f64, j: usize) -> f64 {
    let mut v = rest * a[0][j];
    for (k, t) in tau.iter().enumerate() {
        v += t * a[k + 1][j];
    }
    v
}

/// `∫_{σ_m} ∏_j α_j(τ)^{-s_j} dτ` with `α(τ) = (1 - Στ) a_0 + Σ τ_k a_k`.
///
/// Gauss-Legendre on the collapsed cube when every entry is positive;
/// otherwise some `α_j` vanishes on the boundary and tanh-sinh is used.
pub fn product_linear_phi(a: &[Vec<f64>], s: &TubePoint, spec: &QuadratureSpec) -> Result<Complex64> {
    let (m, n, singular) = check_product_input(a)?;
    check_dim(s, n)?;
    let sc = s.to_complex();
    simplex_integral(m, singular, spec, |tau, rest| {
        let mut log = Complex64::new(0.0, 0.0);
        for (j, sj) in sc.iter().enumerate() {
            log -= sj * alpha_tau(a, tau, rest, j).ln();
        }
        log.exp()
    })
}

/// `∏_k (1 + ⟨a_k, z⟩)`.
pub fn product_linear_polynomial(a: &[Vec<f64>]) -> Result<LaurentPolynomial> {
    let (_, n, _) = check_product_input(a)?;
    let mut p = LaurentPolynomial::one(n);
    for ak in a {
        p = p.multiply(&LinearForm::unit_constant(ak).to_polynomial()?)?;
    }
    Ok(p)
}

/// `Φ(s) ∏ Γ(s_j) Γ(m + 1 - Σ s_j)`, the transform of `1 / ∏(1 + ⟨a_k, z⟩)`.
pub fn product_linear_mellin(a: &[Vec<f64>], s: &TubePoint, spec: &QuadratureSpec) -> Result<Complex64> {
    let phi = product_linear_phi(a, s, spec)?;
    let m = (a.len() - 1) as f64;
    let sc = s.to_complex();
    let ss: Complex64 = sc.iter().sum();
    let g: Complex64 = sc.iter().map(|&v| gamma(v)).product();
    Ok(phi * g * gamma(cplx(m + 1.0) - ss))
}

/// Right-hand side `m! ∫_{σ_m} (1 + ⟨α(τ), z⟩)^{-(m+1)} dτ` of the
/// partial-fractions identity for `1 / ∏(1 + ⟨a_k, z⟩)`.
pub fn partial_fractions_rhs(a: &[Vec<f64>], z: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    let (m, n, _) = check_product_input(a)?;
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: z.len(),
        });
    }
    let factorial: f64 = (1..=m).map(|k| k as f64).product();
    let v = simplex_integral(m, false, spec, |tau, rest| {
        let mut d = 1.0;
        for (j, zj) in z.iter().enumerate() {
            d += alpha_tau(a, tau, rest, j) * zj;
        }
        cplx(d.powi(-(m as i32 + 1)))
    })?;
    Ok(factorial * v.re)
}

/// Exponent vector change `w_j = z^{α_j}`: `1/δ` and the columns `β_k` of `α^{-1}`.
fn monomial_change_data(alphas: &[Vec<i64>]) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = alphas.len();
    if n == 0 || alphas.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("need n exponent vectors of length n".into()));
    }
    let m = to_rational_matrix(alphas);
    let det = to_f64(&determinant(&m));
    let inv = inverse(&m).ok_or(Error::SingularMatrix)?;
    let betas = (0..n)
        .map(|k| (0..n).map(|j| to_f64(&inv[j][k])).collect())
        .collect();
    Ok((det.abs(), betas))
}

/// `M_{1/(1 + Σ z^{α_k})}(s) = (1/δ) ∏ Γ(⟨β_k, s⟩) Γ(1 - Σ ⟨β_k, s⟩)`.
pub fn monomial_change_mellin(alphas: &[Vec<i64>], s: &TubePoint) -> Result<Complex64> {
    let (delta, betas) = monomial_change_data(alphas)?;
    check_dim(s, alphas.len())?;
    let sc = s.to_complex();
    let forms: Vec<Complex64> = betas
        .iter()
        .map(|b| b.iter().zip(&sc).map(|(x, y)| y * x).sum())
        .collect();
    let total: f64 = forms.iter().map(|v| v.re).sum();
    if forms.iter().any(|v| v.re <= 0.0) || total >= 1.0 {
        return Err(Error::Domain(format!(
            "⟨β_k, Re s⟩ = {:?} outside 0 < ⟨β_k, σ⟩, Σ < 1",
            forms.iter().map(|v| v.re).collect::<Vec<_>>()
        )));
    }
    let ss: Complex64 = forms.iter().sum();
    let g: Complex64 = forms.iter().map(|&v| gamma(v)).product();
    Ok(g * gamma(cplx(1.0) - ss) / delta)
}

/// `1 + Σ z^{α_k}`.
pub fn monomial_change_polynomial(alphas: &[Vec<i64>]) -> Result<LaurentPolynomial> {
    let n = alphas.len();
    let mut terms = vec![(ExponentVector::zeros(n), cplx(1.0))];
    terms.extend(alphas.iter().map(|a| (ExponentVector(a.clone()), cplx(1.0))));
    LaurentPolynomial::from_terms(n, terms)
}

/// Argument in `(0, 2π)`.
fn positive_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

fn check_roots(roots: &[Complex64]) -> Result<()> {
    for (i, &zi) in roots.iter().enumerate() {
        if zi.norm() == 0.0 {
            return Err(Error::Domain("zero root".into()));
        }
        if zi.im == 0.0 && zi.re > 0.0 {
            return Err(Error::Domain(format!("root {zi} lies on the positive real axis")));
        }
        for &zj in &roots[i + 1..] {
            if (zi - zj).norm() <= 1e-10 * zi.norm().max(1.0) {
                return Err(Error::RepeatedRoot(zi.to_string()));
            }
        }
    }
    Ok(())
}

/// `Ψ(s) = -e^{-iπs} Σ_j z_j^{s-1} / f'(z_j)` for `f = lead · ∏ (z - z_j)`,
/// with `arg z_j ∈ (0, 2π)`; then `M_{1/f}(s) = Ψ(s) Γ(s) Γ(1 - s)`.
pub fn one_var_psi(roots: &[Complex64], lead: Complex64, s: Complex64) -> Result<Complex64> {
    if roots.is_empty() {
        return Err(Error::InvalidInput("need at least one root".into()));
    }
    if lead.norm() == 0.0 {
        return Err(Error::InvalidInput("zero leading coefficient".into()));
    }
    check_roots(roots)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (j, &zj) in roots.iter().enumerate() {
        let mut deriv = lead;
        for (i, &zi) in roots.iter().enumerate() {
            if i != j {
                deriv *= zj - zi;
            }
        }
        let log = Complex64::new(zj.norm().ln(), positive_arg(zj));
        sum += ((s - 1.0) * log).exp() / deriv;
    }
    Ok(-(Complex64::new(0.0, -PI) * s).exp() * sum)
}

/// `Ψ(k)` for `k = 1, …, m - 1`; all of these vanish.
pub fn psi_zero_check(roots: &[Complex64], lead: Complex64) -> Result<Vec<Complex64>> {
    (1..roots.len())
        .map(|k| one_var_psi(roots, lead, cplx(k as f64)))
        .collect()
}

/// Roots and leading coefficient of a univariate polynomial with nonzero constant term.
pub fn univariate_roots(f: &LaurentPolynomial) -> Result<(Vec<Complex64>, Complex64)> {
    if f.nvars() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: f.nvars(),
        });
    }
    let support = f.support();
    if support.iter().any(|e| e.0[0] < 0) || f.coeff(&ExponentVector::zeros(1)).norm() == 0.0 {
        return Err(Error::InvalidInput(
            "expected a polynomial in z with nonzero constant term".into(),
        ));
    }
    let degree = support.iter().map(|e| e.0[0]).max().unwrap_or(0) as usize;
    let mut coeffs = vec![cplx(0.0); degree + 1];
    for (e, c) in f.terms() {
        coeffs[e.0[0] as usize] = *c;
    }
    let roots = crate::coamoeba::polynomial_roots(&coeffs)?;
    Ok((roots, coeffs[degree]))
}

const SERIES_RADIUS: f64 = 0.995;
const MAX_SERIES_TERMS: usize = 1_000_000;

fn hyp_series(a: Complex64, b: Complex64, z: Complex64) -> Result<Complex64> {
    let mut term = cplx(1.0);
    let mut sum = cplx(1.0);
    let warmup = (a.norm() + b.norm()) as usize + 2;
    for k in 0..MAX_SERIES_TERMS {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((kf + 1.0) * (kf + 1.0)) * z;
        sum += term;
        if term.norm() == 0.0 {
            return Ok(sum);
        }
        if k > warmup && term.norm() <= 1e-17 * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        refinements: MAX_SERIES_TERMS,
        last_diff: term.norm(),
    })
}

/// `₂F₁(a, b; 1; z)`.
///
/// Sums the series at `z` or, when `z/(z-1)` is closer to the origin, at the
/// Pfaff image `(1-z)^{-a} ₂F₁(a, 1-b; 1; z/(z-1))`. At `z = 1` the Gauss
/// value `Γ(1-a-b) / (Γ(1-a) Γ(1-b))` is returned when `Re(1-a-b) > 0`.
pub fn gauss_2f1(a: Complex64, b: Complex64, z: Complex64) -> Result<Complex64> {
    if z == cplx(1.0) {
        let c = cplx(1.0) - a - b;
        if c.re <= 0.0 {
            return Err(Error::Unsupported(format!(
                "Gauss value at z = 1 needs Re(1 - a - b) > 0, got {}",
                c.re
            )));
        }
        return Ok(gamma(c) * rgamma(cplx(1.0) - a) * rgamma(cplx(1.0) - b));
    }
    let w = z / (z - 1.0);
    if z.norm() <= w.norm() && z.norm() < SERIES_RADIUS {
        hyp_series(a, b, z)
    } else if w.norm() < SERIES_RADIUS {
        Ok(cpow(cplx(1.0) - z, -a) * hyp_series(a, cplx(1.0) - b, w)?)
    } else {
        Err(Error::Unsupported(format!(
            "no transformation maps z = {z} into the disk of radius {SERIES_RADIUS}"
        )))
    }
}

/// Which closed form [`example3_phi`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Example3Case {
    Generic,
    A1Zero,
    A2Zero,
    A3Zero,
    A4Zero,
}

impl Example3Case {
    pub fn as_str(&self) -> &'static str {
        match self {
            Example3Case::Generic => "generic",
            Example3Case::A1Zero => "a1=0",
            Example3Case::A2Zero => "a2=0",
            Example3Case::A3Zero => "a3=0",
            Example3Case::A4Zero => "a4=0",
        }
    }
}

pub fn example3_case(a: &[Complex64; 4]) -> Result<Example3Case> {
    let zeros: Vec<usize> = (0..4).filter(|&k| a[k].norm() == 0.0).collect();
    match zeros.as_slice() {
        [] => Ok(Example3Case::Generic),
        [0] => Ok(Example3Case::A1Zero),
        [1] => Ok(Example3Case::A2Zero),
        [2] => Ok(Example3Case::A3Zero),
        [3] => Ok(Example3Case::A4Zero),
        _ => Err(Error::OnDiscriminant(format!(
            "{} vanishing coefficients, no degeneration formula",
            zeros.len()
        ))),
    }
}

/// `a_1 + a_2 z_1 + a_3 z_2 + a_4 z_1 z_2`.
pub fn example3_polynomial(a: &[Complex64; 4]) -> Result<LaurentPolynomial> {
    let exps = [[0, 0], [1, 0], [0, 1], [1, 1]];
    let terms = exps
        .iter()
        .zip(a)
        .filter(|(_, c)| c.norm() != 0.0)
        .map(|(e, c)| (ExponentVector(e.to_vec()), *c));
    LaurentPolynomial::from_terms(2, terms)
}

/// Entire factor for the unit-square family, normalised by
/// `Γ(s_1) Γ(s_2) Γ(1-s_1) Γ(1-s_2)`:
/// `a_1^{s_1+s_2-1} a_2^{-s_1} a_3^{-s_2} ₂F₁(s_1, s_2; 1; 1 - a_1 a_4 / (a_2 a_3))`,
/// or the matching closed form when exactly one coefficient vanishes.
///
/// The generic formula is also used on `a_1 a_4 = a_2 a_3`, where the
/// hypergeometric argument is zero.
pub fn example3_phi(a: &[Complex64; 4], s: &TubePoint) -> Result<Complex64> {
    check_dim(s, 2)?;
    let (s1, s2) = (s.component(0), s.component(1));
    let one = cplx(1.0);
    let [a1, a2, a3, a4] = *a;
    let v = match example3_case(a)? {
        Example3Case::Generic => {
            let z = one - a1 * a4 / (a2 * a3);
            cpow(a1, s1 + s2 - 1.0) * cpow(a2, -s1) * cpow(a3, -s2) * gauss_2f1(s1, s2, z)?
        }
        Example3Case::A4Zero => {
            cpow(a1, s1 + s2 - 1.0)
                * cpow(a2, -s1)
                * cpow(a3, -s2)
                * gamma(one - s1 - s2)
                * rgamma(one - s1)
                * rgamma(one - s2)
        }
        Example3Case::A1Zero => {
            cpow(a2, s2 - 1.0)
                * cpow(a3, s1 - 1.0)
                * cpow(a4, one - s1 - s2)
                * gamma(s1 + s2 - 1.0)
                * rgamma(s1)
                * rgamma(s2)
        }
        Example3Case::A2Zero => {
            cpow(a1, s2 - 1.0)
                * cpow(a3, s1 - s2)
                * cpow(a4, -s1)
                * gamma(s2 - s1)
                * rgamma(one - s1)
                * rgamma(s2)
        }
        Example3Case::A3Zero => {
            cpow(a1, s1 - 1.0)
                * cpow(a2, s2 - s1)
                * cpow(a4, -s2)
                * gamma(s1 - s2)
                * rgamma(s1)
                * rgamma(one - s2)
        }
    };
    Ok(v)
}

/// `Γ(s_1) Γ(s_2) Γ(1-s_1) Γ(1-s_2)`, the skeleton of the full unit square.
pub fn unit_square_skeleton(s: &TubePoint) -> Result<Complex64> {
    check_dim(s, 2)?;
    let (s1, s2) = (s.component(0), s.component(1));
    let one = cplx(1.0);
    Ok(gamma(s1) * gamma(s2) * gamma(one - s1) * gamma(one - s2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn tight() -> QuadratureSpec {
        QuadratureSpec::with_tol(1e-13)
    }

    #[test]
    fn linear_fraction_cases() {
        let s = TubePoint::real(vec![0.5, 0.25]);
        let base = linear_fraction_mellin(&[1.0, 1.0, 1.0], &s).unwrap();
        let expected = gamma(cplx(0.5)) * gamma(cplx(0.25)) * gamma(cplx(0.25));
        assert!(rel(base, expected) < 1e-14);
        let scaled = linear_fraction_mellin(&[2.0, 2.0, 2.0], &s).unwrap();
        assert!(rel(scaled, base * 0.5) < 1e-14);

        let s1 = TubePoint::new(vec![0.3], vec![0.7]);
        let z = s1.component(0);
        let v = linear_fraction_mellin(&[2.0, 5.0], &s1).unwrap();
        let want = rpow(2.0, z - 1.0) * rpow(5.0, -z) * gamma(z) * gamma(one() - z);
        assert!(rel(v, want) < 1e-14);

        assert!(matches!(
            linear_fraction_mellin(&[1.0, 1.0, 1.0], &TubePoint::real(vec![0.6, 0.5])),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            linear_fraction_mellin(&[1.0, -1.0], &TubePoint::real(vec![0.5])),
            Err(Error::Domain(_))
        ));
    }

    fn one() -> Complex64 {
        cplx(1.0)
    }

    #[test]
    fn product_linear_closed_forms() {
        let s = TubePoint::real(vec![0.5]);
        let v = product_linear_phi(&[vec![1.0], vec![2.0]], &s, &tight()).unwrap();
        assert!((v - cplx((2f64.sqrt() - 1.0) / 0.5)).norm() < 1e-13);

        // Constant integrand over the simplex.
        let s2 = TubePoint::new(vec![0.3, 0.4], vec![0.2, -0.1]);
        let ss = s2.component(0) + s2.component(1);
        for m in 1..=3usize {
            let a = vec![vec![1.7, 1.7]; m + 1];
            let v = product_linear_phi(&a, &s2, &tight()).unwrap();
            let fact: f64 = (1..=m).map(|k| k as f64).product();
            assert!(rel(v, rpow(1.7, -ss) / fact) < 1e-12, "m = {m}");
        }

        // Beta-function degeneration, integrable endpoint singularities.
        let sb = TubePoint::real(vec![0.7, 0.8]);
        let v = product_linear_phi(&[vec![2.0, 0.0], vec![0.0, 3.0]], &sb, &tight()).unwrap();
        let beta = gamma(cplx(0.3)) * gamma(cplx(0.2)) * rgamma(cplx(0.5));
        let want = rpow(2.0, -cplx(0.7)) * rpow(3.0, -cplx(0.8)) * beta;
        assert!(rel(v, want) < 1e-9, "{v} vs {want}");

        assert!(matches!(
            product_linear_phi(&vec![vec![1.0]; 5], &s, &tight()),
            Err(Error::Unsupported(_))
        ));
    }

    // Reference values from mpmath adaptive quadrature at 25 digits.
    #[test]
    fn product_linear_matches_reference_quadrature() {
        let s = TubePoint::new(vec![0.3, 0.4], vec![0.2, 0.0]);
        let v = product_linear_phi(&[vec![1.0, 2.0], vec![3.0, 0.5]], &s, &tight()).unwrap();
        assert!(rel(v, c(0.767_419_702_679_398_097_7, -0.102_671_230_752_007_256_4)) < 1e-12);

        let s = TubePoint::new(vec![0.6, 0.5], vec![0.0, -0.3]);
        let a = [vec![1.0, 2.0], vec![3.0, 0.5], vec![0.7, 1.1]];
        let v = product_linear_phi(&a, &s, &tight()).unwrap();
        assert!(rel(v, c(0.368_176_714_460_428_659_0, 0.016_549_837_448_361_046_07)) < 1e-12);
    }

    #[test]
    fn partial_fractions_identity() {
        let a = [vec![1.0, 2.0], vec![3.0, 0.5], vec![0.7, 1.1]];
        for z in [[0.3, 0.9], [2.0, 0.1], [5.0, 7.0]] {
            let lhs: f64 = a
                .iter()
                .map(|ak| 1.0 / (1.0 + ak[0] * z[0] + ak[1] * z[1]))
                .product();
            let rhs = partial_fractions_rhs(&a, &z, &tight()).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * lhs, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn monomial_change_cases() {
        let s = TubePoint::real(vec![1.0, 1.0]);
        let v = monomial_change_mellin(&[vec![2, 1], vec![1, 2]], &s).unwrap();
        let g = gamma(cplx(1.0 / 3.0));
        assert!(rel(v, g * g * g / 3.0) < 1e-14);

        let s = TubePoint::new(vec![0.2, 0.3], vec![0.5, 0.0]);
        let id = monomial_change_mellin(&[vec![1, 0], vec![0, 1]], &s).unwrap();
        let ex1 = linear_fraction_mellin(&[1.0, 1.0, 1.0], &s).unwrap();
        assert!(rel(id, ex1) < 1e-14);

        let s = TubePoint::real(vec![1.2]);
        let v = monomial_change_mellin(&[vec![3]], &s).unwrap();
        let want = gamma(cplx(0.4)) * gamma(cplx(0.6)) / 3.0;
        assert!(rel(v, want) < 1e-14);

        assert_eq!(
            monomial_change_mellin(&[vec![1, 2], vec![2, 4]], &s),
            Err(Error::SingularMatrix)
        );
    }

    #[test]
    fn psi_cases() {
        // (1 + z)(1 + 2z) = 2 (z + 1)(z + 1/2)
        let roots = [cplx(-1.0), cplx(-0.5)];
        let zeros = psi_zero_check(&roots, cplx(2.0)).unwrap();
        assert_eq!(zeros.len(), 1);
        assert!(zeros[0].norm() < 1e-14);

        for s in [c(0.3, 0.0), c(0.8, 2.0), c(-1.5, 0.4)] {
            assert!((one_var_psi(&[cplx(-1.0)], one(), s).unwrap() - one()).norm() < 1e-13);
            let (a, b) = (2.0, 3.0);
            let v = one_var_psi(&[cplx(-a / b)], cplx(b), s).unwrap();
            assert!(rel(v, rpow(a, s - 1.0) * rpow(b, -s)) < 1e-13);
        }

        assert!(matches!(
            one_var_psi(&[cplx(-1.0), cplx(-1.0)], one(), one()),
            Err(Error::RepeatedRoot(_))
        ));
        assert!(matches!(one_var_psi(&[cplx(2.0)], one(), one()), Err(Error::Domain(_))));

        let f = LaurentPolynomial::from_real_terms(1, &[(&[0], 1.0), (&[1], 3.0), (&[2], 2.0)]).unwrap();
        let (r, lead) = univariate_roots(&f).unwrap();
        assert_eq!(lead, cplx(2.0));
        assert!(psi_zero_check(&r, lead).unwrap()[0].norm() < 1e-13);
    }

    // Reference values from mpmath hyp2f1 at 30 digits.
    #[test]
    fn gauss_2f1_reference_values() {
        let cases = [
            (c(0.3, 0.0), c(0.4, 0.0), c(0.5, 0.0), c(1.080_238_540_990_661_537_3, 0.0)),
            (c(0.3, 0.2), c(0.6, -0.1), c(-0.5, 0.0), c(0.919_164_458_831_772_769_6, -0.034_518_769_777_397_754_24)),
            (c(0.3, 0.0), c(0.4, 0.0), c(-3.0, 0.0), c(0.826_514_911_795_330_312_8, 0.0)),
            (c(0.25, 0.0), c(0.5, 0.0), c(0.9, 0.0), c(1.256_067_700_049_532_712_4, 0.0)),
            (c(0.4, 1.5), c(0.35, -0.7), c(0.2, 0.6), c(0.770_598_385_298_961_225_6, 0.638_943_661_888_092_906_6)),
            (c(0.7, 0.0), c(0.6, 0.0), c(-2.0, 1.0), c(0.600_824_241_015_686_988_6, 0.087_395_739_492_303_412_99)),
        ];
        for (a, b, z, want) in cases {
            let v = gauss_2f1(a, b, z).unwrap();
            assert!(rel(v, want) < 1e-12, "2F1({a},{b};1;{z}) = {v}, want {want}");
        }
    }

    #[test]
    fn gauss_2f1_identities() {
        let (a, b) = (c(0.3, 0.1), c(0.45, -0.2));
        assert_eq!(gauss_2f1(a, b, cplx(0.0)).unwrap(), one());
        let at1 = gauss_2f1(a, b, one()).unwrap();
        let want = gamma(one() - a - b) / (gamma(one() - a) * gamma(one() - b));
        assert!(rel(at1, want) < 1e-13);
        let z = cplx(0.5);
        let lhs = gauss_2f1(a, b, z).unwrap();
        let rhs = cpow(one() - z, one() - a - b) * gauss_2f1(one() - a, one() - b, z).unwrap();
        assert!(rel(lhs, rhs) < 1e-13);
        assert!(matches!(gauss_2f1(c(0.7, 0.0), c(0.6, 0.0), one()), Err(Error::Unsupported(_))));
        assert!(matches!(gauss_2f1(a, b, cplx(3.0)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn example3_cases() {
        let s = TubePoint::new(vec![0.3, 0.4], vec![0.1, -0.2]);
        let ones = [one(); 4];
        assert!((example3_phi(&ones, &s).unwrap() - one()).norm() < 1e-15);

        // Each single-zero family is a linear fraction after a unimodular
        // monomial substitution; divide by the square skeleton to get Φ.
        let (p, q, r) = (1.3, 0.7, 2.0);
        let cases: [([f64; 4], [f64; 2], [f64; 3], [f64; 4]); 4] = [
            // a4 = 0: f = a1 + a2 z1 + a3 z2.
            ([p, q, r, 0.0], [0.3, 0.4], [p, q, r], [1.0, 0.0, 0.0, 1.0]),
            // a1 = 0: w = 1/z gives a4 + a3 w1 + a2 w2 at 1 - s.
            ([0.0, q, r, p], [0.6, 0.7], [p, r, q], [-1.0, 0.0, 0.0, -1.0]),
            // a2 = 0: w1 = z1 z2, w2 = z2.
            ([p, 0.0, r, q], [0.3, 0.6], [p, q, r], [1.0, 0.0, -1.0, 1.0]),
            // a3 = 0: w1 = z1, w2 = z1 z2.
            ([p, q, 0.0, r], [0.6, 0.3], [p, q, r], [1.0, -1.0, 0.0, 1.0]),
        ];
        for (coeffs, sigma, lin, map) in cases {
            let a = coeffs.map(cplx);
            let s = TubePoint::new(sigma.to_vec(), vec![0.15, -0.1]);
            let (s1, s2) = (s.component(0), s.component(1));
            let shift = if map[0] < 0.0 { one() } else { cplx(0.0) };
            let w = TubePoint::from_complex(&[
                shift + s1 * map[0] + s2 * map[1],
                shift + s1 * map[2] + s2 * map[3],
            ]);
            let mellin = linear_fraction_mellin(&lin, &w).unwrap();
            let want = mellin / unit_square_skeleton(&s).unwrap();
            let got = example3_phi(&a, &s).unwrap();
            assert!(rel(got, want) < 1e-12, "{:?}: {got} vs {want}", example3_case(&a).unwrap());
        }
        let a1 = [c(0.0, 0.0), one(), one(), one()];
        let a4 = [one(), one(), one(), c(0.0, 0.0)];

        let two = [c(0.0, 0.0), one(), one(), c(0.0, 0.0)];
        assert!(matches!(example3_phi(&two, &s), Err(Error::OnDiscriminant(_))));
        assert_eq!(example3_case(&a1).unwrap(), Example3Case::A1Zero);
        assert_eq!(example3_polynomial(&a4).unwrap().len(), 3);
    }
}
