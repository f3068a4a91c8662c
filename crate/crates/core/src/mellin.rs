//! Mellin integrals over the fibers `Arg⁻¹(θ)`.
//!
//! After the substitution `z = e^{x+iθ}` the transform of `g/f^p` becomes
//! `∫_{ℝⁿ} e^{⟨s, x+iθ⟩} g(e^{x+iθ}) / f(e^{x+iθ})^p dx`. The integrand is
//! analytic in a strip around the real domain and decays exponentially, so
//! a truncated tensor trapezoid rule is spectrally accurate. Polynomials are
//! evaluated with the largest exponential factored out, so no intermediate
//! value overflows however large the box is.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coamoeba::ArgDirection;
use crate::error::{Error, Result};
use crate::lattice::{ExponentVector, NewtonPolytope, ShiftedPolytope};
use crate::laurent::{LaurentPolynomial, LogPoint};

/// Ambient dimensions accepted by the quadrature routines.
pub const MAX_QUADRATURE_DIM: usize = 3;

/// Grids larger than this are refused rather than silently run for minutes.
pub const MAX_GRID_POINTS: f64 = 6.0e7;

const MIN_NODES: usize = 16;

/// Radius factor of the tail check in [`refine`].
const RADIUS_GROWTH: f64 = 1.25;

/// Complex point `s = σ + it`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubePoint {
    pub sigma: Vec<f64>,
    pub t: Vec<f64>,
}

impl TubePoint {
    pub fn new(sigma: Vec<f64>, t: Vec<f64>) -> Self {
        TubePoint { sigma, t }
    }

    pub fn real(sigma: Vec<f64>) -> Self {
        let t = vec![0.0; sigma.len()];
        TubePoint { sigma, t }
    }

    pub fn from_complex(s: &[Complex64]) -> Self {
        TubePoint {
            sigma: s.iter().map(|z| z.re).collect(),
            t: s.iter().map(|z| z.im).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn component(&self, k: usize) -> Complex64 {
        Complex64::new(self.sigma[k], self.t[k])
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|k| self.component(k)).collect()
    }

    /// `⟨mu, s⟩ - c`.
    pub fn linear_form(&self, mu: &[i64], c: i64) -> Complex64 {
        let mut v = Complex64::new(-(c as f64), 0.0);
        for (k, &m) in mu.iter().enumerate() {
            v += self.component(k) * m as f64;
        }
        v
    }
}

/// Truncation box, node counts and refinement policy for trapezoid quadrature.
///
/// An empty `radius` asks for a radius seeded from the integrand's decay
/// rate; an empty `nodes` derives node counts from `max_step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub radius: Vec<f64>,
    pub nodes: Vec<usize>,
    pub max_step: f64,
    pub tol: f64,
    pub max_refine: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            radius: Vec::new(),
            nodes: Vec::new(),
            max_step: 0.25,
            tol: 1e-10,
            max_refine: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(tol: f64) -> Self {
        QuadratureSpec {
            tol,
            ..Self::default()
        }
    }

    pub fn with_radius(mut self, radius: f64, n: usize) -> Self {
        self.radius = vec![radius; n];
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidInput("max_step must be positive".into()));
        }
        for (name, len) in [("radius", self.radius.len()), ("nodes", self.nodes.len())] {
            if len != 0 && len != n {
                return Err(Error::InvalidInput(format!(
                    "{name} has {len} entries for {n} variables"
                )));
            }
        }
        if self.radius.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidInput("radius entries must be positive".into()));
        }
        if self.nodes.iter().any(|&k| k < MIN_NODES) {
            return Err(Error::InvalidInput(format!("node counts must be at least {MIN_NODES}")));
        }
        Ok(())
    }
}

/// Result of a Mellin-type quadrature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MellinValue {
    pub value: Complex64,
    pub err_estimate: f64,
    /// The grid actually used for the returned value.
    pub spec: QuadratureSpec,
    pub refinements: usize,
}

/// Fitted bound `|f(e^{x+iθ})| e^{-⟨σ,x⟩} ≥ c e^{k|x|}` along sampled rays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub c: f64,
    pub k: f64,
}

/// One inequality `⟨mu, σ⟩ > bound` of a convergence domain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainInequality {
    pub mu: Vec<i64>,
    pub bound: i64,
    /// Numerator monomial that produced the inequality.
    pub beta: ExponentVector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceDomain {
    pub inequalities: Vec<DomainInequality>,
    /// Intersection of all inequalities, as a shifted copy of the normals of `Δ_f`.
    pub polytope: ShiftedPolytope,
    pub has_interior: bool,
}

impl ConvergenceDomain {
    pub fn contains(&self, sigma: &[f64]) -> bool {
        self.polytope.contains(sigma, true)
    }
}

/// Region of absolute convergence of the transform of `g/f^power`.
///
/// For each numerator monomial `β` and facet `k` the integrand decays in the
/// direction `-μ_k` iff `⟨μ_k, σ+β⟩ > power·ν_k`.
pub fn convergence_domain(
    g: &LaurentPolynomial,
    f: &LaurentPolynomial,
    power: u32,
) -> Result<ConvergenceDomain> {
    if power == 0 {
        return Err(Error::InvalidInput("power must be at least 1".into()));
    }
    let p = f.newton_polytope()?;
    check_numerator(g, f)?;
    let mut inequalities = Vec::new();
    let mut gamma = vec![i64::MIN; p.facets.len()];
    for beta in g.support() {
        for (k, facet) in p.facets.iter().enumerate() {
            let bound = power as i64 * facet.nu - beta.dot(&facet.mu);
            gamma[k] = gamma[k].max(bound);
            inequalities.push(DomainInequality {
                mu: facet.mu.clone(),
                bound,
                beta: beta.clone(),
            });
        }
    }
    let polytope = p.shifted(gamma)?;
    let has_interior = polytope.has_interior();
    Ok(ConvergenceDomain {
        inequalities,
        polytope,
        has_interior,
    })
}

fn check_numerator(g: &LaurentPolynomial, f: &LaurentPolynomial) -> Result<()> {
    if g.nvars() != f.nvars() {
        return Err(Error::DimensionMismatch {
            expected: f.nvars(),
            found: g.nvars(),
        });
    }
    if g.is_zero() {
        return Err(Error::InvalidInput("numerator is the zero polynomial".into()));
    }
    Ok(())
}

fn norm_i64(v: &[i64]) -> f64 {
    v.iter().map(|&a| (a * a) as f64).sum::<f64>().sqrt()
}

/// Exact worst-direction exponential decay rate of `|e^{⟨σ,x⟩} g / f^power|`.
///
/// For fixed `β` the rate in direction `u` is `power·h_{Δ_f}(u) - ⟨σ+β, u⟩`,
/// whose minimum over unit `u` is the distance from `σ+β` to the boundary of
/// `power·Δ_f`, attained at a facet normal.
pub fn decay_rate(p: &NewtonPolytope, g_support: &[ExponentVector], power: u32, sigma: &[f64]) -> f64 {
    let mut k = f64::INFINITY;
    for beta in g_support {
        for facet in &p.facets {
            let v: f64 = facet
                .mu
                .iter()
                .zip(sigma)
                .zip(&beta.0)
                .map(|((&m, &s), &b)| m as f64 * (s + b as f64))
                .sum();
            k = k.min((v - power as f64 * facet.nu as f64) / norm_i64(&facet.mu));
        }
    }
    k
}

/// `Σ b_α e^{⟨α,x⟩}` with `b_α = a_α e^{i⟨α,θ⟩}`, evaluated as `e^L · (scaled sum)`.
#[derive(Clone, Debug)]
pub(crate) struct ScaledPoly {
    exps: Vec<Vec<f64>>,
    coeffs: Vec<Complex64>,
}

impl ScaledPoly {
    pub(crate) fn new(p: &LaurentPolynomial, theta: &[f64]) -> Self {
        let mut exps = Vec::with_capacity(p.len());
        let mut coeffs = Vec::with_capacity(p.len());
        for (e, a) in p.terms() {
            exps.push(e.0.iter().map(|&v| v as f64).collect());
            coeffs.push(a * Complex64::from_polar(1.0, e.dot_f64(theta)));
        }
        ScaledPoly { exps, coeffs }
    }

    /// Returns `(L, S)` with `p(e^{x+iθ}) = e^L S` and `|S| ≤ Σ|a_α|`.
    #[inline]
    pub(crate) fn eval(&self, x: &[f64], scratch: &mut Vec<f64>) -> (f64, Complex64) {
        scratch.clear();
        let mut lmax = f64::NEG_INFINITY;
        for e in &self.exps {
            let v: f64 = e.iter().zip(x).map(|(a, b)| a * b).sum();
            lmax = lmax.max(v);
            scratch.push(v);
        }
        let mut s = Complex64::new(0.0, 0.0);
        for (v, b) in scratch.iter().zip(&self.coeffs) {
            s += b * (v - lmax).exp();
        }
        (lmax, s)
    }
}

/// Nodes and weights of one quadrature axis.
#[derive(Clone, Debug)]
pub(crate) struct Axis {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    /// Truncated infinite trapezoid rule: `nodes` equispaced points on
    /// `[-radius, radius]`, all with weight `h`. The integrands are
    /// negligible at the cut, and uniform weights make a wider box with the
    /// same step a strict extension of a narrower one.
    pub(crate) fn trapezoid(radius: f64, nodes: usize) -> Self {
        let h = 2.0 * radius / (nodes - 1) as f64;
        let points = (0..nodes).map(|i| -radius + i as f64 * h).collect();
        Axis {
            points,
            weights: vec![h; nodes],
        }
    }

    /// Periodic rule on `[-π, π)` with `nodes` points and total weight 1.
    pub(crate) fn periodic(nodes: usize) -> Self {
        let h = 2.0 * PI / nodes as f64;
        Axis {
            points: (0..nodes).map(|i| -PI + i as f64 * h).collect(),
            weights: vec![1.0 / nodes as f64; nodes],
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: Complex64,
    comp: Complex64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, v: Complex64) {
        self.sum.re = neumaier(self.sum.re, v.re, &mut self.comp.re);
        self.sum.im = neumaier(self.sum.im, v.im, &mut self.comp.im);
    }

    fn total(&self) -> Complex64 {
        self.sum + self.comp
    }
}

#[inline]
fn neumaier(sum: f64, v: f64, comp: &mut f64) -> f64 {
    let t = sum + v;
    if sum.abs() >= v.abs() {
        *comp += (sum - t) + v;
    } else {
        *comp += (v - t) + sum;
    }
    t
}

pub(crate) fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        len => {
            let (a, b) = values.split_at(len / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Tensor-product rule over `axes` for an integrand with `outputs` components.
///
/// Rows along the first axis are processed in parallel; each row is summed in
/// a fixed order and rows are combined pairwise, so the result does not
/// depend on how rayon schedules the work.
pub(crate) fn tensor_quadrature<F>(axes: &[Axis], outputs: usize, integrand: F) -> Vec<Complex64>
where
    F: Fn(&[f64], &mut [Complex64]) + Sync,
{
    tensor_quadrature_excluding(axes, outputs, None, integrand)
}

/// [`tensor_quadrature`] restricted to the nodes outside the index box `skip`.
pub(crate) fn tensor_quadrature_excluding<F>(
    axes: &[Axis],
    outputs: usize,
    skip: Option<&[Range<usize>]>,
    integrand: F,
) -> Vec<Complex64>
where
    F: Fn(&[f64], &mut [Complex64]) + Sync,
{
    let n = axes.len();
    let skipped = |idx: &[usize]| skip.is_some_and(|b| idx.iter().zip(b).all(|(i, r)| r.contains(i)));
    let rows: Vec<Vec<Complex64>> = (0..axes[0].points.len())
        .into_par_iter()
        .map(|i0| {
            let mut acc = vec![Compensated::default(); outputs];
            let mut x = vec![0.0; n];
            let mut out = vec![Complex64::new(0.0, 0.0); outputs];
            let mut idx = vec![0usize; n];
            idx[0] = i0;
            loop {
                if !skipped(&idx) {
                    let mut w = 1.0;
                    for d in 0..n {
                        x[d] = axes[d].points[idx[d]];
                        w *= axes[d].weights[idx[d]];
                    }
                    integrand(&x, &mut out);
                    for (a, v) in acc.iter_mut().zip(&out) {
                        a.add(v * w);
                    }
                }
                let mut d = n;
                loop {
                    if d == 1 {
                        return acc.iter().map(Compensated::total).collect();
                    }
                    d -= 1;
                    idx[d] += 1;
                    if idx[d] < axes[d].points.len() {
                        break;
                    }
                    idx[d] = 0;
                }
            }
        })
        .collect();
    (0..outputs)
        .map(|j| {
            let col: Vec<Complex64> = rows.iter().map(|r| r[j]).collect();
            pairwise_sum(&col)
        })
        .collect()
}

fn grid_points(nodes: &[usize]) -> f64 {
    nodes.iter().map(|&k| k as f64).product()
}

/// Alternating step-halving / radius-growth refinement of a trapezoid rule.
///
/// A growth step keeps the step and adds `RADIUS_GROWTH - 1` of the radius on
/// each side, so only the new outer shell is evaluated and its relative size
/// is the tail estimate. Converges once the most recent step change and the
/// most recent tail both fall below `tol` (relative) in every component.
fn refine<E>(
    radius: Vec<f64>,
    nodes: Vec<usize>,
    spec: &QuadratureSpec,
    outputs: usize,
    eval: E,
) -> Result<Vec<MellinValue>>
where
    E: Fn(&[Axis], Option<&[Range<usize>]>) -> Vec<Complex64>,
{
    let run = |radius: &[f64], nodes: &[usize], skip: Option<&[Range<usize>]>| -> Result<Vec<Complex64>> {
        let inner = skip.map_or(0.0, |b| b.iter().map(|r| r.len() as f64).product());
        if grid_points(nodes) - inner > MAX_GRID_POINTS {
            return Err(Error::NoConvergence {
                refinements: 0,
                last_diff: f64::INFINITY,
            });
        }
        let axes: Vec<Axis> = radius
            .iter()
            .zip(nodes)
            .map(|(&r, &k)| Axis::trapezoid(r, k))
            .collect();
        let v = eval(&axes, skip);
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain(
                "integrand is not finite on the grid; the denominator vanishes on the fiber".into(),
            ));
        }
        Ok(v)
    };

    let mut radius = radius;
    let mut nodes = nodes;
    let mut prev = run(&radius, &nodes, None)?;
    let mut node_diff = vec![f64::INFINITY; outputs];
    let mut radius_diff = vec![f64::INFINITY; outputs];
    let mut last = f64::INFINITY;
    for step in 0..spec.max_refine {
        let halve = step % 2 == 0;
        let result = if halve {
            for k in nodes.iter_mut() {
                *k = 2 * *k - 1;
            }
            run(&radius, &nodes, None)
        } else {
            let mut inner = Vec::with_capacity(nodes.len());
            for (r, k) in radius.iter_mut().zip(nodes.iter_mut()) {
                let h = 2.0 * *r / (*k - 1) as f64;
                let extra = (((*k - 1) as f64) * (RADIUS_GROWTH - 1.0) / 2.0).ceil().max(1.0) as usize;
                inner.push(extra..extra + *k);
                *k += 2 * extra;
                *r += extra as f64 * h;
            }
            run(&radius, &nodes, Some(&inner)).map(|shell| {
                shell.iter().zip(&prev).map(|(a, b)| a + b).collect()
            })
        };
        let cur = match result {
            Ok(v) => v,
            Err(Error::NoConvergence { .. }) => {
                return Err(Error::NoConvergence {
                    refinements: step,
                    last_diff: last,
                })
            }
            Err(e) => return Err(e),
        };
        let diffs: Vec<f64> = cur
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).norm() / a.norm().max(f64::MIN_POSITIVE))
            .collect();
        if halve {
            node_diff = diffs;
        } else {
            radius_diff = diffs;
        }
        prev = cur;
        let worst: Vec<f64> = node_diff
            .iter()
            .zip(&radius_diff)
            .map(|(a, b)| a.max(*b))
            .collect();
        last = worst.iter().cloned().fold(0.0, f64::max);
        if worst.iter().all(|&d| d < spec.tol) {
            let used = QuadratureSpec {
                radius: radius.clone(),
                nodes: nodes.clone(),
                ..spec.clone()
            };
            return Ok(prev
                .iter()
                .zip(&worst)
                .map(|(&value, &d)| MellinValue {
                    value,
                    err_estimate: d * value.norm(),
                    spec: used.clone(),
                    refinements: step + 1,
                })
                .collect());
        }
    }
    Err(Error::NoConvergence {
        refinements: spec.max_refine,
        last_diff: last,
    })
}

fn initial_grid(spec: &QuadratureSpec, n: usize, rate: f64) -> (Vec<f64>, Vec<usize>) {
    let radius = if spec.radius.is_empty() {
        let r = ((1.0 / spec.tol).ln() + 4.0) / rate;
        vec![r.clamp(8.0, 2000.0); n]
    } else {
        spec.radius.clone()
    };
    let nodes = if spec.nodes.is_empty() {
        radius
            .iter()
            .map(|&r| ((2.0 * r / spec.max_step).ceil() as usize + 1).max(MIN_NODES))
            .collect()
    } else {
        spec.nodes.clone()
    };
    (radius, nodes)
}

fn check_quadrature_dim(f: &LaurentPolynomial) -> Result<()> {
    let n = f.nvars();
    if n > MAX_QUADRATURE_DIM {
        return Err(Error::UnsupportedDimension {
            dim: n,
            reason: "quadrature supports at most 3 variables",
        });
    }
    Ok(())
}

fn check_point(n: usize, s: &TubePoint, theta: &ArgDirection) -> Result<()> {
    for len in [s.sigma.len(), s.t.len(), theta.dim()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    Ok(())
}

/// Mellin transform of `g / f^power` along `Arg⁻¹(θ)`.
pub fn mellin_eval(
    g: &LaurentPolynomial,
    f: &LaurentPolynomial,
    power: u32,
    s: &TubePoint,
    theta: &ArgDirection,
    spec: &QuadratureSpec,
) -> Result<MellinValue> {
    let mut v = mellin_eval_many(&[(g.clone(), power)], f, s, theta, spec)?;
    Ok(v.remove(0))
}

/// Several transforms `g_i / f^{p_i}` sharing one denominator, on a joint grid.
pub fn mellin_eval_many(
    integrands: &[(LaurentPolynomial, u32)],
    f: &LaurentPolynomial,
    s: &TubePoint,
    theta: &ArgDirection,
    spec: &QuadratureSpec,
) -> Result<Vec<MellinValue>> {
    check_quadrature_dim(f)?;
    let n = f.nvars();
    check_point(n, s, theta)?;
    spec.validate(n)?;
    if integrands.is_empty() {
        return Ok(Vec::new());
    }
    let p = f.newton_polytope()?;
    let mut rate = f64::INFINITY;
    for (g, power) in integrands {
        let domain = convergence_domain(g, f, *power)?;
        if !domain.contains(&s.sigma) {
            return Err(Error::Domain(format!(
                "Re s = {:?} is not inside the convergence domain of g/f^{}",
                s.sigma, power
            )));
        }
        rate = rate.min(decay_rate(&p, &g.support(), *power, &s.sigma));
    }

    let th = theta.theta.clone();
    let fs = ScaledPoly::new(f, &th);
    let gs: Vec<(ScaledPoly, f64)> = integrands
        .iter()
        .map(|(g, power)| (ScaledPoly::new(g, &th), *power as f64))
        .collect();
    let sigma_theta: f64 = s.sigma.iter().zip(&th).map(|(a, b)| a * b).sum();
    let t_theta: f64 = s.t.iter().zip(&th).map(|(a, b)| a * b).sum();
    let powers: Vec<i32> = integrands.iter().map(|(_, p)| *p as i32).collect();

    let integrand = |x: &[f64], out: &mut [Complex64]| {
        let mut scratch = Vec::with_capacity(8);
        let (lf, sf) = fs.eval(x, &mut scratch);
        let re0: f64 = s.sigma.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - t_theta;
        let im0: f64 = s.t.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + sigma_theta;
        for (j, (gp, pw)) in gs.iter().enumerate() {
            let (lg, sg) = gp.eval(x, &mut scratch);
            let phase = Complex64::new(re0 + lg - pw * lf, im0).exp();
            out[j] = phase * sg / sf.powi(powers[j]);
        }
    };

    let (radius, nodes) = initial_grid(spec, n, rate);
    refine(radius, nodes, spec, integrands.len(), |axes, skip| {
        tensor_quadrature_excluding(axes, integrands.len(), skip, integrand)
    })
}

/// Samples `|f(e^{ru+iθ})| e^{-r⟨σ,u⟩}` along rays and fits the bound `c e^{k r}`.
///
/// Rays are the inward facet directions `-μ_k/|μ_k|`, the coordinate axes in
/// both orientations and `ray_count` seeded random directions.
pub fn decay_check(
    f: &LaurentPolynomial,
    sigma: &[f64],
    theta: &ArgDirection,
    ray_count: usize,
) -> Result<DecayEstimate> {
    let n = f.nvars();
    if sigma.len() != n || theta.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: sigma.len(),
        });
    }
    if f.is_zero() {
        return Err(Error::InvalidInput("zero polynomial".into()));
    }
    // Lower-dimensional Newton polytopes simply contribute no facet rays.
    let mut rays: Vec<Vec<f64>> = match f.newton_polytope() {
        Ok(p) => p
            .facets
            .iter()
            .map(|fc| {
                let len = norm_i64(&fc.mu);
                fc.mu.iter().map(|&m| -(m as f64) / len).collect()
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut u = vec![0.0; n];
            u[i] = sign;
            rays.push(u);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..ray_count {
        let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len < 1e-3 {
            continue;
        }
        u.iter_mut().for_each(|v| *v /= len);
        rays.push(u);
    }

    const RAY_LENGTH: f64 = 30.0;
    const SAMPLES: usize = 31;
    let fs = ScaledPoly::new(f, &theta.theta);
    let mut scratch = Vec::new();
    let mut log_profile = |u: &[f64], r: f64| -> f64 {
        let x: Vec<f64> = u.iter().map(|v| v * r).collect();
        let (l, s) = fs.eval(&x, &mut scratch);
        let sx: f64 = sigma.iter().zip(&x).map(|(a, b)| a * b).sum();
        l + s.norm().ln() - sx
    };
    let mut k = f64::INFINITY;
    for u in &rays {
        let slope = (log_profile(u, RAY_LENGTH) - log_profile(u, RAY_LENGTH / 2.0)) / (RAY_LENGTH / 2.0);
        k = k.min(slope);
    }
    let mut log_c = f64::INFINITY;
    for u in &rays {
        for i in 0..SAMPLES {
            let r = RAY_LENGTH * i as f64 / (SAMPLES - 1) as f64;
            log_c = log_c.min(log_profile(u, r) - k * r);
        }
    }
    Ok(DecayEstimate {
        c: log_c.exp(),
        k,
    })
}

/// A Laurent coefficient together with its quadrature diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientValue {
    pub value: Complex64,
    pub err_estimate: f64,
    pub nodes: usize,
    /// Smallest `|f| / Σ|a_α|e^{⟨α,x⟩}` seen on the torus fiber of the request.
    pub min_ratio: f64,
    /// Point of the same complement component whose fiber was integrated.
    pub x_used: Vec<f64>,
    /// Order `(2π)^{-n} ∫ z_j ∂_j f / f dθ` of the component.
    pub order: Vec<f64>,
}

/// Threshold below which the torus fiber is considered to meet the zero set.
pub const NEAR_ZERO_RATIO: f64 = 1e-6;

/// `f(e^{x+iθ})` divided by its term-magnitude sum, as a function of `θ`.
struct Fiber {
    terms: Vec<(Vec<f64>, Complex64)>,
    n: usize,
    log_scale: f64,
}

impl Fiber {
    fn new(f: &LaurentPolynomial, x: &[f64]) -> Self {
        let log_scale = f.term_magnitude_sum(x).ln();
        let terms = f
            .terms()
            .map(|(e, a)| {
                let w = (e.dot_f64(x) - log_scale).exp();
                (e.0.iter().map(|&v| v as f64).collect(), a * w)
            })
            .collect();
        Fiber {
            terms,
            n: x.len(),
            log_scale,
        }
    }

    /// Scaled value and the scaled weighted derivatives `z_j ∂_j f`.
    fn eval(&self, th: &[f64], grad: Option<&mut [Complex64]>) -> Complex64 {
        let mut fv = Complex64::new(0.0, 0.0);
        match grad {
            None => {
                for (e, b) in &self.terms {
                    let phase: f64 = e.iter().zip(th).map(|(p, q)| p * q).sum();
                    fv += b * Complex64::from_polar(1.0, phase);
                }
            }
            Some(g) => {
                g.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
                for (e, b) in &self.terms {
                    let phase: f64 = e.iter().zip(th).map(|(p, q)| p * q).sum();
                    let t = b * Complex64::from_polar(1.0, phase);
                    fv += t;
                    for (gj, ej) in g.iter_mut().zip(e) {
                        *gj += t * ej;
                    }
                }
            }
        }
        fv
    }

    fn axes(&self, nodes: usize) -> Vec<Axis> {
        (0..self.n).map(|_| Axis::periodic(nodes)).collect()
    }

    fn min_ratio(&self, nodes: usize) -> f64 {
        let axes = self.axes(nodes);
        let total = nodes.pow(self.n as u32);
        (0..total)
            .into_par_iter()
            .map(|mut flat| {
                let mut th = vec![0.0; self.n];
                for d in (0..self.n).rev() {
                    th[d] = axes[d].points[flat % nodes];
                    flat /= nodes;
                }
                self.eval(&th, None).norm()
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    fn order(&self, nodes: usize) -> Vec<f64> {
        let n = self.n;
        let sums = tensor_quadrature(&self.axes(nodes), n, |th, out| {
            let mut g = vec![Complex64::new(0.0, 0.0); n];
            let fv = self.eval(th, Some(&mut g));
            for j in 0..n {
                out[j] = g[j] / fv;
            }
        });
        sums.iter().map(|v| v.re).collect()
    }

    /// Scaled coefficient integral; multiply by `e^{-⟨α,x⟩ - log_scale}` to restore.
    fn coefficient(&self, alpha: &[f64], nodes: usize) -> (Complex64, f64) {
        let sums = tensor_quadrature(&self.axes(nodes), 2, |th, out| {
            let fv = self.eval(th, None);
            let at: f64 = alpha.iter().zip(th).map(|(p, q)| p * q).sum();
            out[0] = Complex64::from_polar(1.0, -at) / fv;
            out[1] = Complex64::new(1.0 / fv.norm(), 0.0);
        });
        (sums[0], sums[1].re)
    }
}

fn scan_nodes(n: usize) -> usize {
    match n {
        1 => 512,
        2 => 96,
        _ => 32,
    }
}

/// Coefficient `c_α` of the expansion `1/f = Σ c_α z^α` valid on `Log⁻¹(x)`.
///
/// Computed as `(2π)^{-n} ∫ e^{-⟨α, x+iθ⟩} / f(e^{x+iθ}) dθ` with the periodic
/// trapezoid rule, doubling the nodes per axis until stable. The integral only
/// depends on the complement component containing `x`, and far out in a
/// component it suffers from cancellation of size `e^{-⟨α,x⟩}`; the fiber is
/// therefore moved along `α` to the best-conditioned point that the order map
/// certifies as lying in the same component.
pub fn laurent_coefficient(
    f: &LaurentPolynomial,
    alpha: &ExponentVector,
    x: &[f64],
    spec: &QuadratureSpec,
) -> Result<CoefficientValue> {
    check_quadrature_dim(f)?;
    let n = f.nvars();
    if alpha.dim() != n || x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: alpha.dim().min(x.len()),
        });
    }
    if f.is_zero() {
        return Err(Error::InvalidInput("zero denominator".into()));
    }
    spec.validate(n)?;
    let scan = scan_nodes(n);
    let base = Fiber::new(f, x);
    let min_ratio = base.min_ratio(scan);
    if min_ratio < NEAR_ZERO_RATIO {
        return Err(Error::NearZeroDenominator { min_ratio });
    }
    let order = base.order(scan);
    let alpha_f: Vec<f64> = alpha.0.iter().map(|&v| v as f64).collect();
    let log_cond = |fb: &Fiber, xp: &[f64], ratio: f64| -> f64 {
        -alpha_f.iter().zip(xp).map(|(a, b)| a * b).sum::<f64>() - fb.log_scale - ratio.ln()
    };

    let mut best_x = x.to_vec();
    let mut best_cond = log_cond(&base, x, min_ratio);
    let alpha_len = alpha_f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if alpha_len > 0.0 {
        let u: Vec<f64> = alpha_f.iter().map(|v| v / alpha_len).collect();
        let reach = 2.0 * (alpha.dot_f64(x).abs() / alpha_len + 4.0);
        let mut lambda = 0.125;
        while lambda <= reach {
            let xp: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + lambda * b).collect();
            let fb = Fiber::new(f, &xp);
            let ratio = fb.min_ratio(scan);
            if ratio > 1e-3 {
                let cond = log_cond(&fb, &xp, ratio);
                let same = fb
                    .order(scan)
                    .iter()
                    .zip(&order)
                    .all(|(a, b)| (a - b).abs() < 0.1);
                if same && cond < best_cond {
                    best_cond = cond;
                    best_x = xp;
                }
            }
            lambda *= 1.5;
        }
    }

    let fiber = Fiber::new(f, &best_x);
    let restore = (-alpha.dot_f64(&best_x) - fiber.log_scale).exp();
    let max_nodes = match n {
        1 => 1 << 16,
        2 => 1 << 11,
        _ => 1 << 8,
    };
    let mut nodes = spec.nodes.first().copied().unwrap_or(MIN_NODES).max(MIN_NODES);
    let (mut prev, _) = fiber.coefficient(&alpha_f, nodes);
    let mut last = f64::INFINITY;
    for _ in 0..spec.max_refine {
        if nodes * 2 > max_nodes {
            break;
        }
        nodes *= 2;
        let (cur, mean_abs) = fiber.coefficient(&alpha_f, nodes);
        let diff = (cur - prev).norm();
        prev = cur;
        last = diff * restore;
        let floor = 16.0 * f64::EPSILON * mean_abs;
        if diff <= spec.tol * cur.norm() || diff <= floor {
            return Ok(CoefficientValue {
                value: cur * restore,
                err_estimate: last,
                nodes,
                min_ratio,
                x_used: best_x,
                order: order.iter().map(|v| v.round()).collect(),
            });
        }
    }
    Err(Error::NoConvergence {
        refinements: spec.max_refine,
        last_diff: last,
    })
}

/// Inverse transform `(2π)^{-n} ∫ M(σ+it) e^{-⟨σ+it, x+iθ⟩} dt` at `z = e^{x+iθ}`.
///
/// `mellin_fn` receives the point `σ + it` as complex coordinates. The
/// t-grid follows the same refinement policy as [`mellin_eval`]; when the
/// spec leaves the radius open, the truncation starts at `|t| ≤ 16`.
pub fn inverse_mellin_eval<F>(
    mellin_fn: F,
    sigma: &[f64],
    z: &LogPoint,
    spec: &QuadratureSpec,
) -> Result<MellinValue>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    let n = sigma.len();
    if n == 0 || n > MAX_QUADRATURE_DIM {
        return Err(Error::UnsupportedDimension {
            dim: n,
            reason: "quadrature supports 1 to 3 variables",
        });
    }
    if z.x.len() != n || z.theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: z.x.len(),
        });
    }
    spec.validate(n)?;
    let radius = if spec.radius.is_empty() {
        vec![16.0; n]
    } else {
        spec.radius.clone()
    };
    let (radius, nodes) = initial_grid(
        &QuadratureSpec {
            radius,
            ..spec.clone()
        },
        n,
        1.0,
    );
    let scale = (2.0 * PI).powi(-(n as i32));
    let integrand = |t: &[f64], out: &mut [Complex64]| {
        let s: Vec<Complex64> = sigma.iter().zip(t).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let mut expo = Complex64::new(0.0, 0.0);
        for j in 0..n {
            expo -= s[j] * Complex64::new(z.x[j], z.theta[j]);
        }
        out[0] = mellin_fn(&s) * expo.exp() * scale;
    };
    let mut v = refine(radius, nodes, spec, 1, |axes, skip| {
        tensor_quadrature_excluding(axes, 1, skip, integrand)
    })?;
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::gamma;

    fn poly(terms: &[(&[i64], f64)]) -> LaurentPolynomial {
        LaurentPolynomial::from_real_terms(terms[0].0.len(), terms).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn binomial_transforms() {
        let one = LaurentPolynomial::one(1);
        let f = poly(&[(&[0], 1.0), (&[1], 1.0)]);
        let v = mellin_eval(
            &one,
            &f,
            1,
            &TubePoint::real(vec![0.5]),
            &ArgDirection::zero(1),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!(rel(v.value, c(PI)) < 1e-9, "{:?}", v);

        let f3 = poly(&[(&[0], 1.0), (&[3], 1.0)]);
        let v = mellin_eval(
            &one,
            &f3,
            1,
            &TubePoint::real(vec![1.2]),
            &ArgDirection::zero(1),
            &QuadratureSpec::default(),
        )
        .unwrap();
        let expected = gamma(c(0.4)) * gamma(c(0.6)) / 3.0;
        assert!(rel(v.value, expected) < 1e-9);
    }

    #[test]
    fn domain_is_enforced() {
        let one = LaurentPolynomial::one(1);
        let f = poly(&[(&[0], 1.0), (&[1], 1.0)]);
        let err = mellin_eval(
            &one,
            &f,
            1,
            &TubePoint::real(vec![1.5]),
            &ArgDirection::zero(1),
            &QuadratureSpec::default(),
        )
        .unwrap_err();
        assert_eq!(err.kind(), "DomainError");
    }

    #[test]
    fn convergence_domain_examples() {
        let one = LaurentPolynomial::one(2);
        let f = poly(&[(&[0, 0], 1.0), (&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let d = convergence_domain(&one, &f, 1).unwrap();
        assert!(d.has_interior);
        assert_eq!(d.inequalities.len(), 3);
        assert!(d.contains(&[0.2, 0.3]));
        assert!(!d.contains(&[0.6, 0.6]));

        let mono = poly(&[(&[1, 1], 2.0)]);
        assert!(matches!(
            convergence_domain(&one, &mono, 1),
            Err(Error::DegeneratePolytope { .. })
        ));

        // Numerator exponents outside the dilated polytope leave no domain.
        let g = poly(&[(&[0, 0], 1.0), (&[3, 0], 1.0)]);
        let d = convergence_domain(&g, &f, 1).unwrap();
        assert!(!d.has_interior);
    }

    #[test]
    fn decay_check_examples() {
        let f = poly(&[(&[0, 0], 1.0), (&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let th = ArgDirection::zero(2);
        let inside = decay_check(&f, &[1.0 / 3.0, 1.0 / 3.0], &th, 16).unwrap();
        assert!(inside.k > 0.1);
        let boundary = decay_check(&f, &[0.0, 0.5], &th, 16).unwrap();
        assert!(boundary.k.abs() < 1e-4);
        let mono = poly(&[(&[1, 2], 3.0)]);
        let flat = decay_check(&mono, &[1.0, 2.0], &th, 4).unwrap();
        assert!(flat.k.abs() < 1e-12);
        assert!((flat.c - 3.0).abs() < 1e-10);
    }

    #[test]
    fn laurent_coefficient_examples() {
        let f = poly(&[(&[0], 1.0), (&[1], 1.0)]);
        let spec = QuadratureSpec::default();
        let c3 = laurent_coefficient(&f, &ExponentVector(vec![3]), &[-10.0], &spec).unwrap();
        assert!((c3.value - c(-1.0)).norm() < 1e-10);
        let err = laurent_coefficient(&f, &ExponentVector(vec![0]), &[0.0], &spec).unwrap_err();
        assert_eq!(err.kind(), "NearZeroDenominator");
    }

    #[test]
    fn inverse_of_binomial() {
        let m = |s: &[Complex64]| gamma(s[0]) * gamma(c(1.0) - s[0]);
        let v = inverse_mellin_eval(m, &[0.5], &LogPoint::real(vec![0.0]), &QuadratureSpec::default()).unwrap();
        assert!((v.value - c(0.5)).norm() < 1e-8);
        let z = LogPoint::new(vec![0.0], vec![PI / 3.0]);
        let v = inverse_mellin_eval(m, &[0.5], &z, &QuadratureSpec::default()).unwrap();
        let expected = c(1.0) / (c(1.0) + Complex64::from_polar(1.0, PI / 3.0));
        assert!((v.value - expected).norm() < 1e-8);
    }

    #[test]
    fn tensor_quadrature_is_deterministic() {
        let axes = vec![Axis::trapezoid(3.0, 61), Axis::trapezoid(3.0, 61)];
        let f = |x: &[f64], out: &mut [Complex64]| {
            out[0] = c((-(x[0] * x[0]) - x[1] * x[1]).exp());
        };
        let a = tensor_quadrature(&axes, 1, f);
        let b = tensor_quadrature(&axes, 1, f);
        assert_eq!(a, b);
        assert!((a[0].re - PI).abs() < 1e-3);
    }

    #[test]
    fn spec_validation() {
        let mut spec = QuadratureSpec::default();
        assert!(spec.validate(2).is_ok());
        spec.nodes = vec![8, 8];
        assert!(spec.validate(2).is_err());
        spec.nodes = vec![];
        spec.tol = 0.0;
        assert!(spec.validate(2).is_err());
    }
}
