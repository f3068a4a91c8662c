//! Laurent polynomials with a sparse exponent → coefficient map.
//!
//! The container is generic over the coefficient ring so the same code
//! serves floating evaluation (`Complex64`) and the exact integration-by-parts
//! recursion (`Complex<BigRational>`). Terms are kept in lexicographic order
//! of their exponent vectors and zero coefficients are never stored.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{ExponentVector, Face, NewtonPolytope};

/// Largest `|⟨α, x⟩|` for which [`LaurentPolynomial::evaluate_log`] is guaranteed finite.
pub const SAFE_LOG_RANGE: f64 = 700.0;

pub type GaussianRational = Complex<BigRational>;

/// Coefficient ring for [`Poly`].
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
}

impl Coefficient for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

impl Coefficient for GaussianRational {
    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }
    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_integer(BigInt::from(v)), BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

/// Sparse Laurent polynomial `Σ a_α z^α` over a coefficient ring `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<C: Coefficient> {
    nvars: usize,
    terms: BTreeMap<ExponentVector, C>,
}

pub type LaurentPolynomial = Poly<Complex64>;
pub type ExactPolynomial = Poly<GaussianRational>;

impl<C: Coefficient> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::monomial(ExponentVector::zeros(nvars), c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    pub fn monomial(exp: ExponentVector, c: C) -> Self {
        let nvars = exp.dim();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        Poly { nvars, terms }
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing repeats.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ExponentVector, C)>,
    {
        let mut p = Self::zero(nvars);
        for (exp, c) in terms {
            if exp.dim() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    found: exp.dim(),
                });
            }
            p.add_term(exp, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exp: ExponentVector, c: C) {
        let updated = match self.terms.remove(&exp) {
            Some(old) => old + c,
            None => c,
        };
        if !updated.is_zero() {
            self.terms.insert(exp, updated);
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: &ExponentVector) -> C {
        self.terms.get(exp).cloned().unwrap_or_else(C::zero)
    }

    pub fn support(&self) -> Vec<ExponentVector> {
        self.terms.keys().cloned().collect()
    }

    pub fn newton_polytope(&self) -> Result<NewtonPolytope> {
        if self.is_zero() {
            return Err(Error::InvalidInput("zero polynomial has no Newton polytope".into()));
        }
        NewtonPolytope::from_points(&self.support())
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, a) in &self.terms {
            out.add_term(e.clone(), a.clone() * c.clone());
        }
        out
    }

    /// Product of two polynomials (coefficient convolution).
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(e1.add(e2), c1.clone() * c2.clone());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut out = Self::one(self.nvars);
        for _ in 0..k {
            out = out.multiply(self)?;
        }
        Ok(out)
    }

    /// Keeps only the monomials whose exponents are in `support`.
    pub fn truncate_to_support(&self, support: &[ExponentVector]) -> Self {
        let mut out = Self::zero(self.nvars);
        for e in support {
            if let Some(c) = self.terms.get(e) {
                out.terms.insert(e.clone(), c.clone());
            }
        }
        out
    }

    /// The truncated polynomial `f_Γ`.
    pub fn truncate_to_face(&self, face: &Face) -> Self {
        self.truncate_to_support(&face.support)
    }

    /// `Σ (⟨mu, α⟩ - c) a_α z^α`, the λ-derivative at `λ = 1` of `λ^{-c} p(λ^mu z)`.
    pub fn weighted_euler_derivative(&self, mu: &[i64], c: i64) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, a) in &self.terms {
            let w = e.dot(mu) - c;
            if w != 0 {
                out.terms.insert(e.clone(), a.clone() * C::from_i64(w));
            }
        }
        out
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        let mut out = Poly::<D>::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }
}

/// Point `w = x + iθ` in logarithmic coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPoint {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
}

impl LogPoint {
    pub fn new(x: Vec<f64>, theta: Vec<f64>) -> Self {
        LogPoint { x, theta }
    }

    pub fn real(x: Vec<f64>) -> Self {
        let theta = vec![0.0; x.len()];
        LogPoint { x, theta }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `Exp(w)` coordinatewise.
    pub fn to_z(&self) -> Vec<Complex64> {
        self.x
            .iter()
            .zip(&self.theta)
            .map(|(&x, &t)| Complex64::from_polar(x.exp(), t))
            .collect()
    }
}

impl LaurentPolynomial {
    /// Evaluates `Σ a_α e^{⟨α, x + iθ⟩}`.
    pub fn evaluate_log(&self, at: &LogPoint) -> Result<Complex64> {
        if at.x.len() != self.nvars || at.theta.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                found: at.x.len(),
            });
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for (e, a) in &self.terms {
            let lm = e.dot_f64(&at.x);
            if lm > SAFE_LOG_RANGE {
                return Err(Error::Overflow { log_modulus: lm });
            }
            sum += a * Complex64::from_polar(lm.exp(), e.dot_f64(&at.theta));
        }
        Ok(sum)
    }

    pub fn evaluate(&self, z: &[Complex64]) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        for (e, a) in &self.terms {
            let mut m = *a;
            for (zi, &k) in z.iter().zip(&e.0) {
                m *= zi.powi(k as i32);
            }
            sum += m;
        }
        sum
    }

    /// `Σ |a_α| e^{⟨α, x⟩}`, the scale used by the relative non-vanishing tests.
    pub fn term_magnitude_sum(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, a)| a.norm() * e.dot_f64(x).exp())
            .sum()
    }

    pub fn to_exact(&self) -> Result<ExactPolynomial> {
        let mut out = ExactPolynomial::zero(self.nvars);
        for (e, a) in &self.terms {
            let c = Complex::new(f64_to_rational(a.re)?, f64_to_rational(a.im)?);
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> PolynomialJson {
        PolynomialJson {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, a)| TermJson {
                    exp: e.0.clone(),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }

    pub fn from_json(doc: &PolynomialJson) -> Result<Self> {
        if doc.nvars == 0 {
            return Err(Error::InvalidInput("nvars must be at least 1".into()));
        }
        let terms = doc.terms.iter().map(|t| {
            (
                ExponentVector(t.exp.clone()),
                Complex64::new(t.re, t.im),
            )
        });
        let p = Self::from_terms(doc.nvars, terms)?;
        if p.terms.values().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite coefficient".into()));
        }
        Ok(p)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: PolynomialJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("polynomial JSON: {e}")))?;
        Self::from_json(&doc)
    }

    /// Convenience constructor from `(exponent, real coefficient)` pairs.
    pub fn from_real_terms(nvars: usize, terms: &[(&[i64], f64)]) -> Result<Self> {
        Self::from_terms(
            nvars,
            terms
                .iter()
                .map(|(e, c)| (ExponentVector(e.to_vec()), Complex64::new(*c, 0.0))),
        )
    }

    /// Largest coefficient modulus difference against `other`.
    pub fn max_coeff_distance(&self, other: &Self) -> f64 {
        let mut keys: Vec<&ExponentVector> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }
}

impl ExactPolynomial {
    pub fn to_complex(&self) -> LaurentPolynomial {
        self.map_coefficients(|c| {
            Complex64::new(
                c.re.to_f64().unwrap_or(f64::NAN),
                c.im.to_f64().unwrap_or(f64::NAN),
            )
        })
    }

    /// `(exponent, "re", "im")` with exact rational strings.
    pub fn exact_terms(&self) -> Vec<(Vec<i64>, String, String)> {
        self.terms
            .iter()
            .map(|(e, c)| (e.0.clone(), c.re.to_string(), c.im.to_string()))
            .collect()
    }
}

/// Simplest rational whose nearest double is `x`.
///
/// Walks the continued-fraction convergents of the exact binary value and
/// returns the first one that rounds back to `x`, so `0.9` becomes `9/10`.
pub fn f64_to_rational(x: f64) -> Result<BigRational> {
    let exact = BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidInput(format!("non-finite coefficient {x}")))?;
    if exact.is_integer() {
        return Ok(exact);
    }
    let negative = exact.is_negative();
    let mut rest = exact.abs();
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    loop {
        let a = rest.floor().to_integer();
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        let candidate = BigRational::new(h.clone(), k.clone());
        if candidate.to_f64() == Some(x.abs()) {
            return Ok(if negative { -candidate } else { candidate });
        }
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            return Ok(exact);
        }
        rest = frac.recip();
    }
}

/// JSON polynomial document: `{"nvars": n, "terms": [{"exp": [...], "re": .., "im": ..}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub nvars: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

fn format_monomial(f: &mut fmt::Formatter<'_>, e: &ExponentVector) -> fmt::Result {
    let mut first = true;
    for (i, &k) in e.0.iter().enumerate() {
        if k == 0 {
            continue;
        }
        if !first {
            write!(f, "*")?;
        }
        first = false;
        if k == 1 {
            write!(f, "z{}", i + 1)?;
        } else {
            write!(f, "z{}^{}", i + 1, k)?;
        }
    }
    if first {
        write!(f, "1")?;
    }
    Ok(())
}

impl fmt::Display for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if a.im == 0.0 {
                write!(f, "{}", a.re)?;
            } else {
                write!(f, "({}{:+}i)", a.re, a.im)?;
            }
            if e.0.iter().any(|&k| k != 0) {
                write!(f, "*")?;
                format_monomial(f, e)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for ExactPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, a)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if a.im.is_zero() {
                write!(f, "{}", a.re)?;
            } else {
                write!(f, "({} + {}i)", a.re, a.im)?;
            }
            if e.0.iter().any(|&k| k != 0) {
                write!(f, "*")?;
                format_monomial(f, e)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::enumerate_faces;
    use std::f64::consts::PI;

    fn poly(terms: &[(&[i64], f64)]) -> LaurentPolynomial {
        LaurentPolynomial::from_real_terms(terms[0].0.len(), terms).unwrap()
    }

    fn four_term() -> LaurentPolynomial {
        poly(&[(&[0, 0], 1.0), (&[0, 1], 1.0), (&[2, 0], 1.0), (&[1, 2], 1.0)])
    }

    #[test]
    fn evaluate_log_examples() {
        let f = poly(&[(&[0, 0], 1.0), (&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let v = f.evaluate_log(&LogPoint::real(vec![0.0, 0.0])).unwrap();
        assert_eq!(v, Complex64::new(3.0, 0.0));

        let g = poly(&[(&[0], 1.0), (&[1], 1.0)]);
        let v = g.evaluate_log(&LogPoint::new(vec![0.0], vec![PI])).unwrap();
        assert!(v.norm() < 1e-15);

        let v = four_term().evaluate_log(&LogPoint::real(vec![0.0, 0.0])).unwrap();
        assert_eq!(v, Complex64::new(4.0, 0.0));
    }

    #[test]
    fn evaluate_log_signals_overflow() {
        let g = poly(&[(&[0], 1.0), (&[2], 1.0)]);
        assert!(matches!(
            g.evaluate_log(&LogPoint::real(vec![400.0])),
            Err(Error::Overflow { .. })
        ));
        assert!(g.evaluate_log(&LogPoint::real(vec![-400.0])).is_ok());
    }

    #[test]
    fn truncation_to_faces() {
        let f = four_term();
        let p = f.newton_polytope().unwrap();
        let faces = enumerate_faces(&p, &f.support());
        let k = p.facet_index(&[-2, -1]).unwrap();
        let facet = faces.iter().find(|fc| fc.facets == vec![k]).unwrap();
        assert_eq!(
            f.truncate_to_face(facet),
            poly(&[(&[2, 0], 1.0), (&[1, 2], 1.0)])
        );
        assert_eq!(f.truncate_to_face(&faces[0]), f);
        for face in faces.iter().filter(|fc| fc.dim == 0) {
            assert_eq!(f.truncate_to_face(face).len(), 1);
        }
    }

    #[test]
    fn weighted_euler_examples() {
        let f = four_term();
        assert_eq!(
            f.weighted_euler_derivative(&[1, 0], 0),
            poly(&[(&[2, 0], 2.0), (&[1, 2], 1.0)])
        );
        assert_eq!(
            f.weighted_euler_derivative(&[1, -1], -1),
            poly(&[(&[0, 0], 1.0), (&[2, 0], 3.0)])
        );
        let p = f.newton_polytope().unwrap();
        let faces = enumerate_faces(&p, &f.support());
        for face in faces.iter().filter(|fc| fc.facets.len() == 1) {
            let facet = &p.facets[face.facets[0]];
            assert!(f
                .truncate_to_face(face)
                .weighted_euler_derivative(&facet.mu, facet.nu)
                .is_zero());
        }
    }

    #[test]
    fn multiplication_examples() {
        let g = poly(&[(&[0], 1.0), (&[1], 1.0)]);
        assert_eq!(
            g.multiply(&g).unwrap(),
            poly(&[(&[0], 1.0), (&[1], 2.0), (&[2], 1.0)])
        );
        let one = LaurentPolynomial::one(2);
        assert_eq!(four_term().multiply(&one).unwrap(), four_term());
        assert!(g.multiply(&one).is_err());
    }

    #[test]
    fn rational_conversion_prefers_short_fractions() {
        assert_eq!(f64_to_rational(0.9).unwrap().to_string(), "9/10");
        assert_eq!(f64_to_rational(-1.5).unwrap().to_string(), "-3/2");
        assert_eq!(f64_to_rational(3.0).unwrap().to_string(), "3");
        assert_eq!(f64_to_rational(1.0 / 3.0).unwrap().to_string(), "1/3");
        let x = 0.123_456_789_012_345_67;
        assert_eq!(f64_to_rational(x).unwrap().to_f64(), Some(x));
        assert!(f64_to_rational(f64::NAN).is_err());
    }

    #[test]
    fn exact_roundtrip_and_json() {
        let f = poly(&[(&[0, 0], 0.9), (&[1, -1], -2.5)]);
        let back = f.to_exact().unwrap().to_complex();
        assert_eq!(back, f);
        let json = serde_json::to_string(&f.to_json()).unwrap();
        let parsed = LaurentPolynomial::from_json_str(&json).unwrap();
        assert_eq!(parsed, f);
        let doc = r#"{"nvars": 1, "terms": [{"exp": [0], "re": 1.0}, {"exp": [1], "re": 1.0, "im": 0.0}]}"#;
        assert_eq!(LaurentPolynomial::from_json_str(doc).unwrap().len(), 2);
        assert!(LaurentPolynomial::from_json_str(r#"{"nvars": 2, "terms": [{"exp": [0], "re": 1.0}]}"#).is_err());
    }

    #[test]
    fn zero_polynomial_is_legal() {
        let z = LaurentPolynomial::zero(2);
        assert!(z.is_zero());
        assert_eq!(z.evaluate_log(&LogPoint::real(vec![1.0, 2.0])).unwrap(), Complex64::new(0.0, 0.0));
        assert!(z.newton_polytope().is_err());
        let f = four_term();
        assert!(f.sub(&f).unwrap().is_zero());
    }

    #[test]
    fn display_is_readable() {
        assert_eq!(
            poly(&[(&[0, 0], 1.0), (&[2, 0], 3.0)]).to_string(),
            "1*1 + 3*z1^2".replace("1*1", "1")
        );
    }
}
