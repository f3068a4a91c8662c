//! Meromorphic continuation of `M_{1/f}` by repeated integration by parts.
//!
//! One step in the direction of facet `k` trades a factor
//! `u = ⟨μ_k, s⟩ - ν_k + m_k` for a higher power of `f` in the denominator
//! and a new numerator, which enlarges the convergence domain from
//! `Δ(ν - m)` to `Δ(ν - m - e_k)`. The numerators are computed with exact
//! Gaussian-rational coefficients so the containment invariant
//! `Δ_{g_m} ⊆ Δ(|m|ν + m)` can be checked without rounding.

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::coamoeba::ArgDirection;
use crate::error::{Error, Result};
use crate::gamma::{gamma, pole_distance, rgamma};
use crate::lattice::{Facet, NewtonPolytope};
use crate::laurent::{ExactPolynomial, GaussianRational, LaurentPolynomial};
use crate::mellin::{mellin_eval, MellinValue, QuadratureSpec, TubePoint};

/// A value of `|u(s)|` below this counts as evaluating on a pole.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Size of the imaginary offset used by [`phi_eval`] near gamma poles.
pub const POLE_PERTURBATION: f64 = 1e-6;

/// The product `∏_k Γ(⟨μ_k, s⟩ - ν_k)` over the facets of `Δ_f`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaSkeleton {
    pub factors: Vec<Facet>,
}

impl GammaSkeleton {
    pub fn arguments(&self, s: &TubePoint) -> Vec<Complex64> {
        self.factors.iter().map(|fc| s.linear_form(&fc.mu, fc.nu)).collect()
    }

    pub fn evaluate(&self, s: &TubePoint) -> Complex64 {
        self.arguments(s).into_iter().map(gamma).product()
    }

    pub fn reciprocal(&self, s: &TubePoint) -> Complex64 {
        self.arguments(s).into_iter().map(rgamma).product()
    }

    /// Smallest distance from any gamma argument to a pole.
    pub fn pole_distance(&self, s: &TubePoint) -> f64 {
        self.arguments(s)
            .into_iter()
            .map(pole_distance)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn gamma_skeleton(f: &LaurentPolynomial) -> Result<GammaSkeleton> {
    Ok(GammaSkeleton {
        factors: f.newton_polytope()?.facets,
    })
}

/// Linear pole factor `⟨mu, s⟩ - nu + shift`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UFactor {
    pub facet: usize,
    pub mu: Vec<i64>,
    pub nu: i64,
    pub shift: i64,
}

impl UFactor {
    pub fn value(&self, s: &TubePoint) -> Complex64 {
        s.linear_form(&self.mu, self.nu - self.shift)
    }
}

impl std::fmt::Display for UFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (i, &m) in self.mu.iter().enumerate() {
            if m == 0 {
                continue;
            }
            let sign = if m < 0 { "-" } else if first { "" } else { "+" };
            let mag = m.abs();
            if mag == 1 {
                write!(f, "{sign}s{}", i + 1)?;
            } else {
                write!(f, "{sign}{mag}*s{}", i + 1)?;
            }
            first = false;
        }
        let c = self.shift - self.nu;
        if c != 0 {
            write!(f, "{}{}", if c > 0 { "+" } else { "-" }, c.abs())?;
        }
        Ok(())
    }
}

/// Output of the integration-by-parts recursion for a multi-index `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationState {
    pub m: Vec<u32>,
    #[serde(with = "exact_serde")]
    pub g_m: ExactPolynomial,
    pub power: u32,
    pub u_factors: Vec<UFactor>,
    /// Facet index of each step, in the order applied.
    pub steps: Vec<usize>,
    pub polytope: NewtonPolytope,
}

/// Exact numerators serialize as `{"nvars", "terms": [{"exp", "re", "im"}]}` with
/// rational strings such as `"-3/2"`.
mod exact_serde {
    use std::str::FromStr;

    use num_complex::Complex;
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::lattice::ExponentVector;
    use crate::laurent::ExactPolynomial;

    #[derive(Serialize, Deserialize)]
    struct Doc {
        nvars: usize,
        terms: Vec<Term>,
    }

    #[derive(Serialize, Deserialize)]
    struct Term {
        exp: Vec<i64>,
        re: String,
        im: String,
    }

    pub fn serialize<S: Serializer>(p: &ExactPolynomial, ser: S) -> Result<S::Ok, S::Error> {
        Doc {
            nvars: p.nvars(),
            terms: p
                .exact_terms()
                .into_iter()
                .map(|(exp, re, im)| Term { exp, re, im })
                .collect(),
        }
        .serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<ExactPolynomial, D::Error> {
        let doc = Doc::deserialize(de)?;
        let parse = |v: &str| BigRational::from_str(v).map_err(serde::de::Error::custom);
        let mut terms = Vec::new();
        for t in doc.terms {
            terms.push((ExponentVector(t.exp), Complex::new(parse(&t.re)?, parse(&t.im)?)));
        }
        ExactPolynomial::from_terms(doc.nvars, terms).map_err(serde::de::Error::custom)
    }
}

impl ContinuationState {
    pub fn total(&self) -> u32 {
        self.m.iter().sum()
    }

    pub fn numerator(&self) -> LaurentPolynomial {
        self.g_m.to_complex()
    }

    pub fn u_product(&self, s: &TubePoint) -> Complex64 {
        self.u_factors.iter().map(|u| u.value(s)).product()
    }

    /// The enlarged domain `Δ(ν - m)` on which the continued integral converges.
    pub fn domain_gamma(&self) -> Vec<i64> {
        self.polytope
            .facets
            .iter()
            .zip(&self.m)
            .map(|(fc, &mk)| fc.nu - mk as i64)
            .collect()
    }
}

fn exact_scalar(k: i64) -> GaussianRational {
    <GaussianRational as crate::laurent::Coefficient>::from_i64(k)
}

fn check_containment(p: &NewtonPolytope, g: &ExactPolynomial, m: &[u32]) -> Result<()> {
    let total: i64 = m.iter().map(|&v| v as i64).sum();
    for (alpha, _) in g.terms() {
        for (k, fc) in p.facets.iter().enumerate() {
            let bound = total * fc.nu + m[k] as i64;
            if alpha.dot(&fc.mu) < bound {
                return Err(Error::InvariantViolation(format!(
                    "exponent {alpha} of g_m violates <{:?}, α> >= {bound}",
                    fc.mu
                )));
            }
        }
    }
    Ok(())
}

/// Applies the recursion along an explicit sequence of facet indices.
pub fn continue_along(f: &LaurentPolynomial, steps: &[usize]) -> Result<ContinuationState> {
    let p = f.newton_polytope()?;
    let n = f.nvars();
    let nf = p.facets.len();
    if let Some(&bad) = steps.iter().find(|&&k| k >= nf) {
        return Err(Error::InvalidInput(format!(
            "facet index {bad} out of range (polytope has {nf} facets)"
        )));
    }
    let fe = f.to_exact()?;
    let mut g = ExactPolynomial::one(n);
    let mut m = vec![0u32; nf];
    let mut u_factors = Vec::new();
    for &k in steps {
        let fc = &p.facets[k];
        let total: i64 = m.iter().map(|&v| v as i64).sum();
        let g_ek = fe.weighted_euler_derivative(&fc.mu, fc.nu);
        let g_hat = g.weighted_euler_derivative(&fc.mu, total * fc.nu + m[k] as i64);
        let first = g_ek.multiply(&g)?.scale(&exact_scalar(1 + total));
        g = first.sub(&fe.multiply(&g_hat)?)?;
        u_factors.push(UFactor {
            facet: k,
            mu: fc.mu.clone(),
            nu: fc.nu,
            shift: m[k] as i64,
        });
        m[k] += 1;
        check_containment(&p, &g, &m)?;
    }
    let power = 1 + m.iter().sum::<u32>();
    Ok(ContinuationState {
        g_m: g,
        m,
        power,
        u_factors,
        steps: steps.to_vec(),
        polytope: p,
    })
}

/// Recursion for multi-index `m`, taking facets in ascending order.
pub fn continue_to_m(f: &LaurentPolynomial, m: &[u32]) -> Result<ContinuationState> {
    let p = f.newton_polytope()?;
    if m.len() != p.facets.len() {
        return Err(Error::DimensionMismatch {
            expected: p.facets.len(),
            found: m.len(),
        });
    }
    let steps: Vec<usize> = m
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| std::iter::repeat_n(k, c as usize))
        .collect();
    continue_along(f, &steps)
}

/// `M_{1/f}(s)` on `Δ(ν - m)` via `M_{g_m / f^{1+|m|}}(s) / ∏ u(s)`.
pub fn continued_mellin_eval(
    state: &ContinuationState,
    f: &LaurentPolynomial,
    s: &TubePoint,
    theta: &ArgDirection,
    spec: &QuadratureSpec,
) -> Result<MellinValue> {
    let gamma = state.domain_gamma();
    let inside = state
        .polytope
        .facets
        .iter()
        .zip(&gamma)
        .all(|(fc, &g)| fc.value_f64(&s.sigma) > g as f64);
    if s.sigma.len() != f.nvars() {
        return Err(Error::DimensionMismatch {
            expected: f.nvars(),
            found: s.sigma.len(),
        });
    }
    if !inside {
        return Err(Error::Domain(format!(
            "Re s = {:?} is not inside Δ(ν - m) for m = {:?}",
            s.sigma, state.m
        )));
    }
    for u in &state.u_factors {
        let v = u.value(s);
        if v.norm() < POLE_TOLERANCE {
            return Err(Error::PoleHit {
                factor: u.to_string(),
                modulus: v.norm(),
            });
        }
    }
    let g = state.numerator();
    if g.is_zero() {
        return Err(Error::InvariantViolation("numerator vanished identically".into()));
    }
    let mut v = mellin_eval(&g, f, state.power, s, theta, spec)?;
    let u = state.u_product(s);
    v.value /= u;
    v.err_estimate /= u.norm();
    Ok(v)
}

/// `Φ(s)` together with how it was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiValue {
    pub value: Complex64,
    /// Point actually evaluated (differs from the request near gamma poles).
    pub s_used: TubePoint,
    pub perturbed: bool,
    pub m: Vec<u32>,
    pub mellin: MellinValue,
    pub gamma_product: Complex64,
}

/// Smallest `m` with `⟨μ_k, σ⟩ > ν_k - m_k` for every facet.
pub fn minimal_m(p: &NewtonPolytope, sigma: &[f64]) -> Vec<u32> {
    p.facets
        .iter()
        .map(|fc| {
            let gap = fc.nu as f64 - fc.value_f64(sigma);
            if gap < 0.0 {
                0
            } else {
                gap.floor() as u32 + 1
            }
        })
        .collect()
}

fn perturbation_direction(n: usize) -> Vec<f64> {
    // Irrational ratios keep ⟨μ, w⟩ ≠ 0 for every nonzero integer μ.
    let w: Vec<f64> = (0..n).map(|j| ((j + 1) as f64).sqrt()).collect();
    let len = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.into_iter().map(|v| v / len).collect()
}

/// The entire factor `Φ = M_{1/f} / ∏_k Γ(⟨μ_k, s⟩ - ν_k)`.
pub fn phi_eval(
    f: &LaurentPolynomial,
    s: &TubePoint,
    theta: &ArgDirection,
    spec: &QuadratureSpec,
) -> Result<PhiValue> {
    let skeleton = gamma_skeleton(f)?;
    let p = f.newton_polytope()?;
    if s.dim() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: s.dim(),
        });
    }
    let mut s_used = s.clone();
    let mut perturbed = false;
    if skeleton.pole_distance(s) < 1e-9 {
        for (t, w) in s_used.t.iter_mut().zip(perturbation_direction(s.dim())) {
            *t += POLE_PERTURBATION * w;
        }
        perturbed = true;
    }
    let m = minimal_m(&p, &s_used.sigma);
    let state = continue_to_m(f, &m)?;
    let mellin = continued_mellin_eval(&state, f, &s_used, theta, spec)?;
    let gamma_product = skeleton.evaluate(&s_used);
    let value = mellin.value * skeleton.reciprocal(&s_used);
    if value.re.is_nan() || value.im.is_nan() || (gamma_product.is_zero() && mellin.value.is_zero()) {
        return Err(Error::Domain("Φ is not finite at this point".into()));
    }
    Ok(PhiValue {
        value,
        s_used,
        perturbed,
        m,
        mellin,
        gamma_product,
    })
}
