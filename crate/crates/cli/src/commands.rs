use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use polymellin::coamoeba::{
    closure_union_faces, completely_nonvanishing_check, theta_clearance, GridSpec, SearchSpec,
};
use polymellin::continuation::{continue_to_m, continued_mellin_eval, gamma_skeleton, phi_eval, ContinuationState};
use polymellin::gamma::gamma;
use polymellin::gkz::{a_matrix_kernel, box_residual, euler_residual, integer_kernel};
use polymellin::lattice::enumerate_faces;
use polymellin::mellin::{convergence_domain, decay_check, inverse_mellin_eval, laurent_coefficient, mellin_eval};
use polymellin::oracles::{
    example3_phi, example3_polynomial, linear_fraction_mellin, monomial_change_mellin,
    monomial_change_polynomial, one_var_psi, product_linear_mellin, product_linear_phi,
    product_linear_polynomial, psi_zero_check, univariate_roots, unit_square_skeleton, LinearForm,
};
use polymellin::{
    ArgDirection, Error, ExponentVector, LaurentPolynomial, LogPoint, MellinValue, QuadratureSpec, Result,
    TubePoint,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::report::{InputInfo, ReportDocument};
use crate::{Command, CommandSpec, Floats, OracleCase, PointArgs, QuadArgs, EXIT_COMPUTE};

/// Runs the command in a pool capped by `--threads`, writes the report and
/// returns the process exit status.
pub fn execute(spec: &CommandSpec) -> i32 {
    let report = match spec.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| run(spec)),
            Err(e) => {
                eprintln!("error: cannot start thread pool: {e}");
                return EXIT_COMPUTE;
            }
        },
        None => run(spec),
    };
    let written = match &spec.output {
        Some(path) => fs::write(path, report.to_json()).map(|_| {
            if spec.text {
                print!("{}", report.to_text());
            }
        }),
        None => {
            if spec.text {
                print!("{}", report.to_text());
            } else {
                print!("{}", report.to_json());
            }
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return EXIT_COMPUTE;
    }
    if let Some(e) = &report.error {
        eprintln!("error: {}/{}: {}", e.module, e.kind, e.message);
        return EXIT_COMPUTE;
    }
    0
}

/// Dispatches to the owning module; failures are recorded in the report.
pub fn run(spec: &CommandSpec) -> ReportDocument {
    let mut doc = ReportDocument::new(spec.command.name(), spec.argv.clone());
    if spec.timestamp {
        doc.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
    }
    match dispatch(&spec.command, &mut doc) {
        Ok(result) => doc.result = result,
        Err(e) => doc.fail(&e),
    }
    doc
}

fn load(path: &Path, doc: &mut ReportDocument) -> Result<LaurentPolynomial> {
    let bytes = fs::read(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    doc.input = Some(InputInfo {
        path: path.display().to_string(),
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    });
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::InvalidInput(format!("{} is not UTF-8", path.display())))?;
    LaurentPolynomial::from_json_str(text)
}

fn quad_spec(q: &QuadArgs, n: usize, doc: &mut ReportDocument) -> Result<QuadratureSpec> {
    let mut spec = QuadratureSpec::default();
    if let Some(tol) = q.tol {
        spec.tol = tol;
    }
    if let Some(h) = q.max_step {
        spec.max_step = h;
    }
    if let Some(k) = q.max_refine {
        spec.max_refine = k;
    }
    if let Some(r) = &q.radius {
        spec.radius = match r.0.as_slice() {
            [one] => vec![*one; n],
            many => many.to_vec(),
        };
    }
    spec.validate(n)?;
    doc.quadrature = Some(spec.clone());
    Ok(spec)
}

fn check_dim(found: usize, n: usize) -> Result<()> {
    if found != n {
        return Err(Error::DimensionMismatch { expected: n, found });
    }
    Ok(())
}

fn tube(s: &Floats, point: &PointArgs) -> TubePoint {
    let t = point.t.as_ref().map(|t| t.0.clone()).unwrap_or_else(|| vec![0.0; s.0.len()]);
    TubePoint::new(s.0.clone(), t)
}

fn direction(theta: &Option<Floats>, n: usize) -> ArgDirection {
    theta.as_ref().map(|t| ArgDirection::new(t.0.clone())).unwrap_or_else(|| ArgDirection::zero(n))
}

fn cx(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn rel_diff(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

fn mellin_json(v: &MellinValue) -> Value {
    json!({
        "value": cx(v.value),
        "errEstimate": v.err_estimate,
        "refinements": v.refinements,
        "quadrature": v.spec,
    })
}

fn point_json(s: &TubePoint) -> Value {
    json!({ "sigma": s.sigma, "t": s.t })
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

fn dispatch(cmd: &Command, doc: &mut ReportDocument) -> Result<Value> {
    match cmd {
        Command::Polytope { input } => {
            let f = load(&input.input, doc)?;
            polytope(&f)
        }
        Command::Eval {
            input,
            s,
            point,
            power,
            quad,
        } => {
            let f = load(&input.input, doc)?;
            let n = f.nvars();
            check_dim(s.0.len(), n)?;
            let spec = quad_spec(quad, n, doc)?;
            eval(&f, &tube(s, point), &direction(&point.theta, n), *power, &spec)
        }
        Command::Continue {
            input,
            m,
            s,
            point,
            quad,
        } => {
            let f = load(&input.input, doc)?;
            let n = f.nvars();
            let spec = quad_spec(quad, n, doc)?;
            let m = m.as_ref().map(|m| m.0.clone());
            let s = match s {
                Some(s) => {
                    check_dim(s.0.len(), n)?;
                    Some(tube(s, point))
                }
                None => None,
            };
            continuation(&f, m.as_deref(), s.as_ref(), &direction(&point.theta, n), &spec)
        }
        Command::Coamoeba {
            input,
            grid,
            radius,
            epsilon,
            theta,
            out,
        } => {
            let f = load(&input.input, doc)?;
            if let Some(t) = theta {
                check_dim(t.0.len(), f.nvars())?;
            }
            coamoeba(&f, *grid, *radius, *epsilon, theta.as_ref(), out.as_deref())
        }
        Command::Gkz { input, s, point, quad } => {
            let f = load(&input.input, doc)?;
            let n = f.nvars();
            check_dim(s.0.len(), n)?;
            let spec = quad_spec(quad, n, doc)?;
            gkz(&f, &tube(s, point), &direction(&point.theta, n), &spec)
        }
        Command::Oracle {
            case,
            input,
            s,
            point,
            coeffs,
            factors,
            alphas,
            degree,
            quad,
        } => {
            let n = s.0.len();
            let spec = quad_spec(quad, n, doc)?;
            let st = tube(s, point);
            let theta = direction(&point.theta, n);
            let (f, oracle, extra) = match case {
                OracleCase::Example1 => {
                    let c = coeffs.as_ref().map(|c| c.0.clone()).unwrap_or_else(|| vec![1.0; n + 1]);
                    let f = LinearForm::new(c.clone()).to_polynomial()?;
                    (f, linear_fraction_mellin(&c, &st)?, json!({ "coeffs": c }))
                }
                OracleCase::Prop41 => {
                    let a = &factors.as_ref().expect("validated").0;
                    let phi = product_linear_phi(a, &st, &spec)?;
                    let m = product_linear_mellin(a, &st, &spec)?;
                    (product_linear_polynomial(a)?, m, json!({ "factors": a, "phi": cx(phi) }))
                }
                OracleCase::Prop42 => {
                    let a = &alphas.as_ref().expect("validated").0;
                    (monomial_change_polynomial(a)?, monomial_change_mellin(a, &st)?, json!({ "alphas": a }))
                }
                OracleCase::Binomial => {
                    let d = degree.expect("validated");
                    let f = LaurentPolynomial::from_real_terms(1, &[(&[0], 1.0), (&[d as i64], 1.0)])?;
                    let w = st.component(0) / d as f64;
                    let v = gamma(w) * gamma(Complex64::new(1.0, 0.0) - w) / d as f64;
                    (f, v, json!({ "degree": d }))
                }
                OracleCase::Psi => {
                    let f = load(input.as_ref().expect("validated"), doc)?;
                    check_dim(f.nvars(), 1)?;
                    let (roots, lead) = univariate_roots(&f)?;
                    let sc = st.component(0);
                    let psi = one_var_psi(&roots, lead, sc)?;
                    let zeros = psi_zero_check(&roots, lead)?;
                    let one = Complex64::new(1.0, 0.0);
                    let extra = json!({
                        "roots": roots.iter().map(|&r| cx(r)).collect::<Vec<_>>(),
                        "psi": cx(psi),
                        "psiAtIntegers": zeros.iter().map(|&z| cx(z)).collect::<Vec<_>>(),
                    });
                    (f, psi * gamma(sc) * gamma(one - sc), extra)
                }
                OracleCase::Example3 => {
                    let c = &coeffs.as_ref().expect("validated").0;
                    let a = [c[0], c[1], c[2], c[3]].map(|v| Complex64::new(v, 0.0));
                    let f = example3_polynomial(&a)?;
                    let phi = example3_phi(&a, &st)?;
                    let q = mellin_eval(&LaurentPolynomial::one(2), &f, 1, &st, &theta, &spec)?;
                    let quad_phi = q.value / unit_square_skeleton(&st)?;
                    return Ok(json!({
                        "case": case.as_str(),
                        "polynomial": f.to_string(),
                        "s": point_json(&st),
                        "oracle": cx(phi),
                        "quadrature": cx(quad_phi),
                        "mellin": mellin_json(&q),
                        "relDiff": rel_diff(quad_phi, phi),
                        "coeffs": c,
                    }));
                }
            };
            let q = mellin_eval(&LaurentPolynomial::one(n), &f, 1, &st, &theta, &spec)?;
            let mut out = json!({
                "case": case.as_str(),
                "polynomial": f.to_string(),
                "s": point_json(&st),
                "oracle": cx(oracle),
                "quadrature": cx(q.value),
                "mellin": mellin_json(&q),
                "relDiff": rel_diff(q.value, oracle),
            });
            if let (Value::Object(o), Value::Object(e)) = (&mut out, extra) {
                o.extend(e);
            }
            Ok(out)
        }
        Command::Invert {
            input,
            sigma,
            z,
            theta,
            quad,
        } => {
            let f = load(&input.input, doc)?;
            let n = f.nvars();
            check_dim(sigma.0.len(), n)?;
            let spec = quad_spec(quad, n, doc)?;
            invert(&f, &sigma.0, &z.0, &direction(theta, n), &spec)
        }
        Command::Laurent { input, alpha, x, quad } => {
            let f = load(&input.input, doc)?;
            let n = f.nvars();
            check_dim(alpha.0.len(), n)?;
            let spec = quad_spec(quad, n, doc)?;
            let c = laurent_coefficient(&f, &ExponentVector(alpha.0.clone()), &x.0, &spec)?;
            Ok(json!({
                "alpha": alpha.0,
                "x": x.0,
                "value": cx(c.value),
                "errEstimate": c.err_estimate,
                "nodes": c.nodes,
                "minRatio": c.min_ratio,
                "xUsed": c.x_used,
                "order": c.order,
            }))
        }
    }
}

fn polytope(f: &LaurentPolynomial) -> Result<Value> {
    let p = f.newton_polytope()?;
    let faces = enumerate_faces(&p, &f.support());
    let interior = p.shifted(p.nu())?.interior_point();
    Ok(json!({
        "polynomial": f.to_string(),
        "dim": p.dim,
        "vertices": p.vertices,
        "facets": p.facets.iter().map(|fc| json!({ "mu": fc.mu, "nu": fc.nu })).collect::<Vec<_>>(),
        "faces": faces.iter().map(|fc| json!({
            "dim": fc.dim,
            "facets": fc.facets,
            "support": fc.support,
        })).collect::<Vec<_>>(),
        "interiorPoint": interior,
    }))
}

fn eval(f: &LaurentPolynomial, s: &TubePoint, theta: &ArgDirection, power: u32, spec: &QuadratureSpec) -> Result<Value> {
    let one = LaurentPolynomial::one(f.nvars());
    let domain = convergence_domain(&one, f, power)?;
    if !domain.contains(&s.sigma) {
        return Err(Error::Domain(format!("Re s = {:?} is outside the convergence domain", s.sigma)));
    }
    let v = mellin_eval(&one, f, power, s, theta, spec)?;
    let mut out = json!({
        "polynomial": f.to_string(),
        "s": point_json(s),
        "theta": theta.theta,
        "power": power,
        "mellin": mellin_json(&v),
    });
    if power == 1 {
        let skeleton = gamma_skeleton(f)?.evaluate(s);
        let decay = decay_check(f, &s.sigma, theta, 16)?;
        out["gammaSkeleton"] = cx(skeleton);
        out["phi"] = cx(v.value / skeleton);
        out["decay"] = json!({ "c": decay.c, "k": decay.k });
    }
    Ok(out)
}

fn state_json(state: &ContinuationState) -> Value {
    json!({
        "m": state.m,
        "power": state.power,
        "steps": state.steps,
        "numerator": state.g_m.to_string(),
        "gM": to_value(state)["g_m"].clone(),
        "uFactors": state.u_factors.iter().map(|u| json!({
            "facet": u.facet,
            "mu": u.mu,
            "nu": u.nu,
            "shift": u.shift,
            "display": u.to_string(),
        })).collect::<Vec<_>>(),
        "domainGamma": state.domain_gamma(),
    })
}

fn continuation(
    f: &LaurentPolynomial,
    m: Option<&[u32]>,
    s: Option<&TubePoint>,
    theta: &ArgDirection,
    spec: &QuadratureSpec,
) -> Result<Value> {
    match (m, s) {
        (Some(m), s) => {
            let state = continue_to_m(f, m)?;
            let mut out = json!({ "state": state_json(&state) });
            if let Some(s) = s {
                let v = continued_mellin_eval(&state, f, s, theta, spec)?;
                out["s"] = point_json(s);
                out["mellin"] = mellin_json(&v);
            }
            Ok(out)
        }
        (None, Some(s)) => {
            let phi = phi_eval(f, s, theta, spec)?;
            let state = continue_to_m(f, &phi.m)?;
            Ok(json!({
                "state": state_json(&state),
                "s": point_json(s),
                "sUsed": point_json(&phi.s_used),
                "perturbed": phi.perturbed,
                "phi": cx(phi.value),
                "gammaProduct": cx(phi.gamma_product),
                "mellin": mellin_json(&phi.mellin),
            }))
        }
        (None, None) => Err(Error::InvalidInput("continue needs --m or --s".into())),
    }
}

fn coamoeba(
    f: &LaurentPolynomial,
    grid: usize,
    radius: f64,
    epsilon: f64,
    theta: Option<&Floats>,
    out: Option<&Path>,
) -> Result<Value> {
    let cloud = closure_union_faces(f, &GridSpec { resolution: grid, radius })?;
    let mut per_face = std::collections::BTreeMap::<usize, usize>::new();
    for p in &cloud.points {
        *per_face.entry(p.face).or_default() += 1;
    }
    let mut result = json!({
        "polynomial": f.to_string(),
        "grid": grid,
        "radius": radius,
        "points": cloud.len(),
        "pointsPerFace": per_face.iter().map(|(k, v)| json!({ "face": k, "points": v })).collect::<Vec<_>>(),
    });
    if let Some(path) = out {
        fs::write(path, cloud.to_csv())
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
        result["csv"] = json!(path.display().to_string());
    }
    if let Some(t) = theta {
        let dir = ArgDirection::new(t.0.clone());
        let search = SearchSpec {
            epsilon,
            ..SearchSpec::default()
        };
        result["theta"] = json!(t.0);
        result["clearance"] = json!(theta_clearance(&dir, &cloud));
        result["nonvanishing"] = to_value(&completely_nonvanishing_check(f, &dir, &search)?);
    }
    Ok(result)
}

fn gkz(f: &LaurentPolynomial, s: &TubePoint, theta: &ArgDirection, spec: &QuadratureSpec) -> Result<Value> {
    let (a, kernel) = a_matrix_kernel(f)?;
    let dropped: Vec<Vec<i64>> = integer_kernel(&a)?
        .into_iter()
        .filter(|b| !kernel.contains(b))
        .map(|b| b.b)
        .collect();
    let euler = euler_residual(f, s, theta, spec)?;
    let boxes = kernel
        .iter()
        .map(|b| box_residual(f, b, s, theta, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({
        "polynomial": f.to_string(),
        "s": point_json(s),
        "aMatrix": a.columns,
        "kernel": kernel.iter().map(|b| b.b.clone()).collect::<Vec<_>>(),
        "droppedKernel": dropped,
        "eulerResiduals": euler.residuals.iter().zip(&euler.err_bounds).map(|(r, e)| json!({
            "residual": r,
            "errBound": e,
        })).collect::<Vec<_>>(),
        "mellin": mellin_json(&euler.mellin),
        "boxResiduals": boxes.iter().map(|b| json!({
            "b": b.b,
            "residual": b.residual,
            "exponent": b.exponent,
            "power": b.power,
            "plus": b.plus.as_ref().map(mellin_json),
            "minus": b.minus.as_ref().map(mellin_json),
        })).collect::<Vec<_>>(),
    }))
}

/// Coefficients `c_0, c_1, …` when `f = c_0 + Σ c_k z_k` with every `c > 0`.
fn positive_linear_form(f: &LaurentPolynomial) -> Option<Vec<f64>> {
    let n = f.nvars();
    if f.len() != n + 1 {
        return None;
    }
    let mut c = vec![0.0; n + 1];
    for (e, a) in f.terms() {
        let slot = if e.0.iter().all(|&v| v == 0) {
            0
        } else {
            let k = e.0.iter().position(|&v| v == 1)?;
            if e.0.iter().enumerate().any(|(j, &v)| j != k && v != 0) {
                return None;
            }
            k + 1
        };
        if a.im != 0.0 || !(a.re > 0.0) {
            return None;
        }
        c[slot] = a.re;
    }
    c.iter().all(|&v| v > 0.0).then_some(c)
}

fn invert(
    f: &LaurentPolynomial,
    sigma: &[f64],
    zs: &[Vec<f64>],
    theta: &ArgDirection,
    spec: &QuadratureSpec,
) -> Result<Value> {
    let n = f.nvars();
    let linear = positive_linear_form(f);
    let roots = match (&linear, n) {
        (Some(_), _) => None,
        (None, 1) => Some(univariate_roots(f)?),
        _ => {
            return Err(Error::Unsupported(
                "invert needs a linear form with positive coefficients or a univariate f".into(),
            ))
        }
    };
    let method = if linear.is_some() { "linearForm" } else { "roots" };
    let eval_m = |s: &[Complex64]| -> Result<Complex64> {
        match (&linear, &roots) {
            (Some(c), _) => linear_fraction_mellin(c, &TubePoint::from_complex(s)),
            (None, Some((r, lead))) => {
                let one = Complex64::new(1.0, 0.0);
                if !(s[0].re > 0.0 && s[0].re < r.len() as f64) {
                    return Err(Error::Domain(format!("Re s = {} outside (0, {})", s[0].re, r.len())));
                }
                Ok(one_var_psi(r, *lead, s[0])? * gamma(s[0]) * gamma(one - s[0]))
            }
            (None, None) => unreachable!(),
        }
    };
    let s0: Vec<Complex64> = sigma.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    eval_m(&s0)?;
    let transform = |s: &[Complex64]| eval_m(s).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let mut points = Vec::new();
    for z in zs {
        let at = LogPoint::new(z.iter().map(|v| v.ln()).collect(), theta.theta.clone());
        let exact = Complex64::new(1.0, 0.0) / f.evaluate_log(&at)?;
        let v = inverse_mellin_eval(&transform, sigma, &at, spec)?;
        if !v.value.is_finite() {
            return Err(Error::NoConvergence {
                refinements: v.refinements,
                last_diff: f64::NAN,
            });
        }
        points.push(json!({
            "z": z,
            "value": cx(v.value),
            "exact": cx(exact),
            "relErr": rel_diff(v.value, exact),
            "errEstimate": v.err_estimate,
            "refinements": v.refinements,
            "quadrature": v.spec,
        }));
    }
    Ok(json!({
        "polynomial": f.to_string(),
        "sigma": sigma,
        "theta": theta.theta,
        "method": method,
        "points": points,
    }))
}
