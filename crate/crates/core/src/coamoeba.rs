//! Coamoebas `Arg(Z_f)` for one and two variables, their facial closure, and
//! heuristic diagnostics deciding whether a fiber `Arg⁻¹(θ)` avoids the zeros
//! of every truncation `f_Γ`.
//!
//! Nothing here is a certificate: the non-vanishing check minimizes a
//! scale-free ratio over a finite box and reports what it found.

use std::cmp::Ordering;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{enumerate_faces, ExponentVector, Face};
use crate::laurent::{LaurentPolynomial, LogPoint};
use crate::mellin::ScaledPoly;

/// Highest fiber degree handed to the eigenvalue solver.
pub const MAX_FIBER_DEGREE: usize = 64;

/// Maps an angle to its representative in `[-π, π)`.
pub fn canonical_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a - two_pi * ((a + PI) / two_pi).floor();
    if r >= PI {
        r -= two_pi;
    }
    // `a + π` can round up to a multiple of 2π just below the cut.
    if r < -PI {
        r += two_pi;
    }
    r
}

/// Wrap-around distance between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    canonical_angle(a - b).abs()
}

/// Fiber direction `θ ∈ ℝⁿ`.
///
/// The given lift is kept, since the Mellin integral over `Arg⁻¹(θ)` picks up
/// the factor `e^{2πi s_k}` when `θ_k` moves by `2π`; [`ArgDirection::canonical`]
/// gives the representative in `[-π, π)ⁿ` used for torus geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgDirection {
    pub theta: Vec<f64>,
}

impl ArgDirection {
    pub fn new(theta: Vec<f64>) -> Self {
        ArgDirection { theta }
    }

    pub fn zero(n: usize) -> Self {
        ArgDirection { theta: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn canonical(&self) -> ArgDirection {
        ArgDirection {
            theta: self.theta.iter().map(|&a| canonical_angle(a)).collect(),
        }
    }

    /// Shift by `2π` in coordinate `k`.
    pub fn shifted(&self, k: usize, turns: i32) -> ArgDirection {
        let mut theta = self.theta.clone();
        theta[k] += 2.0 * PI * turns as f64;
        ArgDirection { theta }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    /// Canonical arguments of a zero.
    pub theta: Vec<f64>,
    /// Log-moduli of the same zero.
    pub x: Vec<f64>,
    /// Index of the face whose truncation produced the point (0 is the top face).
    pub face: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoamoebaCloud {
    pub dim: usize,
    pub points: Vec<CloudPoint>,
}

impl CoamoebaCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `theta_1,...,theta_n,face_id` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 0..self.dim {
            out.push_str(&format!("theta_{},", k + 1));
        }
        out.push_str("face_id\n");
        for p in &self.points {
            for t in &p.theta {
                out.push_str(&format!("{t},"));
            }
            out.push_str(&format!("{}\n", p.face));
        }
        out
    }

    fn canonicalize(&mut self) {
        self.points.sort_by(|a, b| {
            a.face.cmp(&b.face).then_with(|| cmp_vec(&a.theta, &b.theta)).then_with(|| cmp_vec(&a.x, &b.x))
        });
        // Binomial fibers repeat the same argument for every modulus.
        self.points.dedup_by(|b, a| {
            a.face == b.face && a.theta.iter().zip(&b.theta).all(|(p, q)| (p - q).abs() < 1e-12)
        });
    }
}

fn cmp_vec(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Sampling resolution for coamoeba clouds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per axis of the `(x₁, θ₁)` fiber grid.
    pub resolution: usize,
    /// The fiber grid covers `x₁ ∈ [-radius, radius]`.
    pub radius: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            resolution: 400,
            radius: 8.0,
        }
    }
}

impl GridSpec {
    pub fn new(resolution: usize) -> Self {
        GridSpec {
            resolution,
            ..Self::default()
        }
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Nonzero roots of `Σ c_j z^j` (ascending coefficients).
///
/// Negligible leading and trailing coefficients are stripped first; the
/// remaining roots come from companion-matrix eigenvalues refined by Newton.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    let tiny = 1e-14 * scale;
    let lo = coeffs.iter().position(|c| c.norm() > tiny).unwrap();
    let hi = coeffs.iter().rposition(|c| c.norm() > tiny).unwrap();
    let c = &coeffs[lo..=hi];
    let deg = c.len() - 1;
    if deg > MAX_FIBER_DEGREE {
        return Err(Error::Unsupported(format!(
            "fiber degree {deg} exceeds the cap of {MAX_FIBER_DEGREE}"
        )));
    }
    let roots = match deg {
        0 => Vec::new(),
        1 => vec![-c[0] / c[1]],
        2 => {
            let disc = (c[1] * c[1] - 4.0 * c[2] * c[0]).sqrt();
            // Pick the sign that avoids cancellation.
            let q = if (c[1].conj() * disc).re >= 0.0 {
                -0.5 * (c[1] + disc)
            } else {
                -0.5 * (c[1] - disc)
            };
            if q.norm() == 0.0 {
                vec![Complex64::new(0.0, 0.0); 2]
            } else {
                vec![q / c[2], c[0] / q]
            }
        }
        _ => {
            let lead = c[deg];
            let mut m = DMatrix::<Complex64>::zeros(deg, deg);
            for j in 0..deg {
                m[(0, j)] = -c[deg - 1 - j] / lead;
            }
            for i in 1..deg {
                m[(i, i - 1)] = Complex64::new(1.0, 0.0);
            }
            let eig = m
                .schur()
                .eigenvalues()
                .ok_or_else(|| Error::Unsupported("eigenvalue iteration failed".into()))?;
            eig.iter().copied().collect()
        }
    };
    Ok(roots
        .into_iter()
        .map(|mut r| {
            for _ in 0..3 {
                let (p, dp) = horner(c, r);
                if dp.norm() == 0.0 {
                    break;
                }
                let next = r - p / dp;
                if !next.re.is_finite() || !next.im.is_finite() {
                    break;
                }
                r = next;
            }
            r
        })
        .filter(|r| r.norm() > 0.0 && r.re.is_finite() && r.im.is_finite())
        .collect())
}

/// Coefficients of `f` as a polynomial in `z_var` after clearing negative powers,
/// with the other variables fixed to `others` (full length, entry `var` ignored).
fn univariate(f: &LaurentPolynomial, var: usize, others: &[Complex64]) -> Vec<Complex64> {
    let lo = f.terms().map(|(e, _)| e.0[var]).min().unwrap_or(0);
    let hi = f.terms().map(|(e, _)| e.0[var]).max().unwrap_or(0);
    let mut c = vec![Complex64::new(0.0, 0.0); (hi - lo + 1) as usize];
    for (e, a) in f.terms() {
        let mut v = *a;
        for (j, &k) in e.0.iter().enumerate() {
            if j != var {
                v *= others[j].powi(k as i32);
            }
        }
        c[(e.0[var] - lo) as usize] += v;
    }
    c
}

fn depends_on(f: &LaurentPolynomial, var: usize) -> bool {
    let mut vals = f.terms().map(|(e, _)| e.0[var]);
    match vals.next() {
        Some(first) => vals.any(|v| v != first),
        None => false,
    }
}

/// Relative residual below which a sampled root is accepted.
const ROOT_RESIDUAL: f64 = 1e-7;

fn accept(f: &LaurentPolynomial, x: &[f64], theta: &[f64]) -> bool {
    let v = f.evaluate_log(&LogPoint::new(x.to_vec(), theta.to_vec()));
    match v {
        Ok(v) => v.norm() < ROOT_RESIDUAL * f.term_magnitude_sum(x),
        Err(_) => false,
    }
}

fn point_from_root(z: Complex64) -> (f64, f64) {
    (z.norm().ln(), canonical_angle(z.arg()))
}

fn sample_raw(f: &LaurentPolynomial, grid: &GridSpec, face: usize) -> Result<Vec<CloudPoint>> {
    let n = f.nvars();
    let res = grid.resolution.max(2);
    let thetas: Vec<f64> = (0..res).map(|i| -PI + 2.0 * PI * i as f64 / res as f64).collect();
    match n {
        1 => {
            let roots = polynomial_roots(&univariate(f, 0, &[Complex64::new(1.0, 0.0)]))?;
            Ok(roots
                .into_iter()
                .map(|z| {
                    let (x, t) = point_from_root(z);
                    CloudPoint {
                        theta: vec![t],
                        x: vec![x],
                        face,
                    }
                })
                .filter(|p| accept(f, &p.x, &p.theta))
                .collect())
        }
        2 if !depends_on(f, 1) => {
            // Zero set is {roots in z₁} × ℂ*; sweep θ₂.
            let roots = polynomial_roots(&univariate(f, 0, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]))?;
            let mut out = Vec::new();
            for z in roots {
                let (x, t) = point_from_root(z);
                for &t2 in &thetas {
                    let p = CloudPoint {
                        theta: vec![t, t2],
                        x: vec![x, 0.0],
                        face,
                    };
                    if accept(f, &p.x, &p.theta) {
                        out.push(p);
                    }
                }
            }
            Ok(out)
        }
        2 => {
            let xs: Vec<f64> = if depends_on(f, 0) {
                // Odd count so that |z₁| = 1 is sampled.
                let count = res | 1;
                (0..count)
                    .map(|i| -grid.radius + 2.0 * grid.radius * i as f64 / (count - 1) as f64)
                    .collect()
            } else {
                vec![0.0]
            };
            let cells: Vec<(f64, f64)> = xs
                .iter()
                .flat_map(|&x| thetas.iter().map(move |&t| (x, t)))
                .collect();
            let chunks: Vec<Result<Vec<CloudPoint>>> = cells
                .par_iter()
                .map(|&(x1, t1)| {
                    let z1 = Complex64::from_polar(x1.exp(), t1);
                    let roots = polynomial_roots(&univariate(f, 1, &[z1, Complex64::new(0.0, 0.0)]))?;
                    Ok(roots
                        .into_iter()
                        .map(|z2| {
                            let (x2, t2) = point_from_root(z2);
                            CloudPoint {
                                theta: vec![canonical_angle(t1), t2],
                                x: vec![x1, x2],
                                face,
                            }
                        })
                        .filter(|p| accept(f, &p.x, &p.theta))
                        .collect())
                })
                .collect();
            let mut out = Vec::new();
            for c in chunks {
                out.extend(c?);
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!(
            "coamoeba sampling supports 1 or 2 variables, got {n}"
        ))),
    }
}

/// Samples `Arg(Z_f)`; every point is labelled with face 0.
pub fn coamoeba_sample(f: &LaurentPolynomial, grid: &GridSpec) -> Result<CoamoebaCloud> {
    let mut cloud = CoamoebaCloud {
        dim: f.nvars(),
        points: sample_raw(f, grid, 0)?,
    };
    cloud.canonicalize();
    Ok(cloud)
}

/// Faces of `Δ_f` with their truncations, or just `f` itself when `Δ_f` is not full-dimensional.
fn faces_of(f: &LaurentPolynomial) -> Vec<Face> {
    match f.newton_polytope() {
        Ok(p) => enumerate_faces(&p, &f.support()),
        Err(_) => {
            let mut faces = vec![Face {
                facets: Vec::new(),
                dim: crate::lattice::affine_dimension(&f.support()),
                support: f.support(),
            }];
            if f.len() > 1 {
                faces.extend(f.support().into_iter().map(|e| Face {
                    facets: Vec::new(),
                    dim: 0,
                    support: vec![e],
                }));
            }
            faces
        }
    }
}

/// Union of the coamoebas of all truncations `f_Γ` with at least two monomials.
pub fn closure_union_faces(f: &LaurentPolynomial, grid: &GridSpec) -> Result<CoamoebaCloud> {
    let n = f.nvars();
    if n == 0 || n > 2 {
        return Err(Error::Unsupported(format!(
            "coamoeba sampling supports 1 or 2 variables, got {n}"
        )));
    }
    let mut points = Vec::new();
    for (id, face) in faces_of(f).iter().enumerate() {
        if face.support.len() < 2 {
            continue;
        }
        points.extend(sample_raw(&f.truncate_to_face(face), grid, id)?);
    }
    let mut cloud = CoamoebaCloud { dim: n, points };
    cloud.canonicalize();
    Ok(cloud)
}

/// Minimal torus distance from `theta` to the cloud; `+∞` for an empty cloud.
pub fn theta_clearance(theta: &ArgDirection, cloud: &CoamoebaCloud) -> f64 {
    cloud
        .points
        .par_iter()
        .map(|p| {
            p.theta
                .iter()
                .zip(&theta.theta)
                .map(|(&a, &b)| angle_distance(a, b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .reduce(|| f64::INFINITY, f64::min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

/// Search box, resolution and thresholds for [`completely_nonvanishing_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub radius: f64,
    /// Grid points per axis before local refinement.
    pub grid: usize,
    /// A face passes when the minimal ratio exceeds this.
    pub epsilon: f64,
    /// A face fails when the minimal ratio falls below this.
    pub zero_threshold: f64,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            radius: 10.0,
            grid: 41,
            epsilon: 1e-3,
            zero_threshold: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceCheck {
    pub face: usize,
    pub dim: usize,
    pub support: Vec<ExponentVector>,
    pub min_ratio: f64,
    /// Log-modulus point where the minimum was found.
    pub witness: Vec<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonvanishingReport {
    pub theta: Vec<f64>,
    pub faces: Vec<FaceCheck>,
    pub overall: Verdict,
}

fn ratio(sp: &ScaledPoly, abs: &ScaledPoly, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
    let (l1, v) = sp.eval(x, scratch);
    let (l2, m) = abs.eval(x, scratch);
    v.norm() / m.re * (l1 - l2).exp()
}

fn compass_search(sp: &ScaledPoly, abs: &ScaledPoly, start: Vec<f64>, step: f64, radius: f64) -> (f64, Vec<f64>) {
    let mut scratch = Vec::new();
    let mut x = start;
    let mut best = ratio(sp, abs, &x, &mut scratch);
    let mut h = step;
    let mut iters = 0;
    while h > 1e-10 && iters < 2000 && best > 0.0 {
        iters += 1;
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + sign * h).clamp(-radius, radius);
                let r = ratio(sp, abs, &y, &mut scratch);
                if r < best {
                    best = r;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (best, x)
}

/// Grid search plus compass refinement of `|f_Γ| / Σ_{α∈Γ} |a_α| e^{⟨α,x⟩}` for every face.
pub fn completely_nonvanishing_check(
    f: &LaurentPolynomial,
    theta: &ArgDirection,
    search: &SearchSpec,
) -> Result<NonvanishingReport> {
    let n = f.nvars();
    if theta.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: theta.dim(),
        });
    }
    if f.is_zero() {
        return Err(Error::InvalidInput("zero polynomial".into()));
    }
    let g = search.grid.max(2);
    if (g as f64).powi(n as i32) > 5e6 {
        return Err(Error::Unsupported("search grid too large for this dimension".into()));
    }
    let axis: Vec<f64> = (0..g)
        .map(|i| -search.radius + 2.0 * search.radius * i as f64 / (g - 1) as f64)
        .collect();
    let step = 2.0 * search.radius / (g - 1) as f64;
    let total = g.pow(n as u32);

    let mut checks = Vec::new();
    for (id, face) in faces_of(f).iter().enumerate() {
        let fg = f.truncate_to_face(face);
        let sp = ScaledPoly::new(&fg, &theta.theta);
        let abs = ScaledPoly::new(&fg.map_coefficients(|c| Complex64::new(c.norm(), 0.0)), &vec![0.0; n]);
        let mut samples: Vec<(f64, usize)> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut scratch = Vec::new();
                let x = unflatten(flat, g, n, &axis);
                (ratio(&sp, &abs, &x, &mut scratch), flat)
            })
            .collect();
        samples.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (mut min_ratio, mut witness) = (f64::INFINITY, vec![0.0; n]);
        for &(_, flat) in samples.iter().take(5) {
            let (r, x) = compass_search(&sp, &abs, unflatten(flat, g, n, &axis), step, search.radius);
            if r < min_ratio {
                min_ratio = r;
                witness = x;
            }
        }
        let verdict = if min_ratio > search.epsilon {
            Verdict::Pass
        } else if min_ratio < search.zero_threshold {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        checks.push(FaceCheck {
            face: id,
            dim: face.dim,
            support: face.support.clone(),
            min_ratio,
            witness,
            verdict,
        });
    }
    let overall = if checks.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if checks.iter().any(|c| c.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(NonvanishingReport {
        theta: theta.theta.clone(),
        faces: checks,
        overall,
    })
}

fn unflatten(mut flat: usize, g: usize, n: usize, axis: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for d in (0..n).rev() {
        x[d] = axis[flat % g];
        flat /= g;
    }
    x
}
