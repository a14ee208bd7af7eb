//! Independent oracles and the `check` suite: finite-difference certification,
//! a quadrature Marcum Q, a sphere grid search and a concavity probe.

mod fd;
mod quadrature;
mod sphere;

pub use fd::{compare, fd_gradient, fd_jacobian, FdComparison};
pub use quadrature::{integrate, marcum_q_oracle, scaled_bessel_i};
pub use sphere::{sphere_grid_min, COARSE, FINEST, SEEDS};

use nalgebra::{DMatrix, DVector, Matrix3x4, Matrix4, Vector4};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::harness::{p3_reference, trial_rng, Scenario};
use crate::lift::{
    lift, pd_value_gradient_hessian, phi_gradient_hessian, phi_tilde, LiftedCode, NodeLift,
};
use crate::math::marcum_q;
use crate::optimizer::{noise_gradient, solve_subproblem, trace_objective, Halfspace};
use crate::signal::build_code_matrices;
use crate::tracking::{geometry, jacobian_h, propagate, TargetState};

/// Relative tolerance of the derivative certification.
pub const FD_TOL: f64 = 1e-4;
/// Absolute tolerance of Marcum Q against the quadrature oracle.
pub const MARCUM_TOL: f64 = 1e-10;
/// Slack allowed in the midpoint concavity inequality, relative to `|h|`.
pub const CONCAVITY_TOL: f64 = 1e-10;
/// Allowed gap between the subproblem solver and the grid oracle.
pub const SUBPROBLEM_TOL: f64 = 1e-3;
/// Relative tolerance of the Taylor model at its expansion point.
pub const TAYLOR_TOL: f64 = 1e-9;

/// Grid of `(v, a, b)` used for the Marcum comparison: 420 points.
pub fn marcum_grid() -> Vec<(u32, f64, f64)> {
    let a_vals = [0.0, 0.3, 1.0, 2.0, 3.5, 5.0, 7.0, 10.0, 15.0, 25.0];
    let b_vals = [
        0.0, 0.2, 0.7, 1.5, 2.5, 3.5, 4.5, 5.26, 6.5, 8.0, 10.0, 13.0, 18.0, 27.0,
    ];
    let mut out = Vec::new();
    for v in 1..=3 {
        for &a in &a_vals {
            for &b in &b_vals {
                out.push((v, a, b));
            }
        }
    }
    out
}

/// Largest absolute difference between `marcum_q` and the oracle over the grid,
/// with the worst point.
pub fn marcum_max_error() -> Result<(f64, (u32, f64, f64))> {
    let mut worst = (0.0, (1, 0.0, 0.0));
    for (v, a, b) in marcum_grid() {
        let e = (marcum_q(v, a, b)? - marcum_q_oracle(v, a, b)).abs();
        if e > worst.0 {
            worst = (e, (v, a, b));
        }
    }
    Ok(worst)
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 0.1 && norm <= 1.0 {
            return v / norm;
        }
    }
}

fn random_spd(rng: &mut ChaCha8Rng, scale: f64) -> Matrix4<f64> {
    let a = Matrix4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    (a * a.transpose() + Matrix4::identity() * 0.1) * scale
}

/// `h(tR₁ + (1-t)R₂) - t h(R₁) - (1-t) h(R₂)` for `h(R) = Tr((B + HᵀR⁻¹H)⁻¹)`.
pub fn concavity_gap(
    b: &Matrix4<f64>,
    h: &Matrix3x4<f64>,
    r1: &[f64; 3],
    r2: &[f64; 3],
    t: f64,
) -> Result<(f64, f64)> {
    let mix = [0, 1, 2].map(|l| t * r1[l] + (1.0 - t) * r2[l]);
    let hm = trace_objective(b, h, &mix)?;
    let h1 = trace_objective(b, h, r1)?;
    let h2 = trace_objective(b, h, r2)?;
    Ok((
        hm - t * h1 - (1.0 - t) * h2,
        hm.abs().max(h1.abs()).max(h2.abs()),
    ))
}

/// Runs `count` random concavity instances; returns the number violating
/// the inequality by more than `CONCAVITY_TOL` (relative) and the worst
/// relative gap.
pub fn concavity_probe(seed: u64, count: usize) -> Result<(usize, f64)> {
    let mut rng = trial_rng(seed, 0);
    let mut bad = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..count {
        let scale = 10f64.powf(rng.gen_range(-3.0..1.0));
        let b = random_spd(&mut rng, scale);
        let h = Matrix3x4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let r = |rng: &mut ChaCha8Rng| [0; 3].map(|_| 10f64.powf(rng.gen_range(-2.0..2.0)));
        let r1 = r(&mut rng);
        let r2 = r(&mut rng);
        let t = rng.gen_range(0.0..1.0);
        let (gap, scale) = concavity_gap(&b, &h, &r1, &r2, t)?;
        let rel = gap / scale;
        worst = worst.min(rel);
        if rel < -CONCAVITY_TOL {
            bad += 1;
        }
    }
    Ok((bad, worst))
}

/// A random subproblem instance: gradient, similarity halfspace around a
/// random reference, and `floors` random halfspaces that the reference
/// satisfies with margin.
pub fn random_subproblem(
    rng: &mut ChaCha8Rng,
    n: usize,
    floors: usize,
) -> (DVector<f64>, Vec<Halfspace>) {
    let g = random_unit(rng, n) * rng.gen_range(0.1..10.0);
    let c0 = random_unit(rng, n);
    let zeta = rng.gen_range(0.2..1.5);
    let mut cons = vec![Halfspace {
        normal: c0.clone(),
        bound: 1.0 - zeta / 2.0,
    }];
    for _ in 0..floors {
        let normal = random_unit(rng, n) * rng.gen_range(0.5..2.0);
        let bound = normal.dot(&c0) - rng.gen_range(0.05..0.8) * normal.norm();
        cons.push(Halfspace { normal, bound });
    }
    (g, cons)
}

/// Solver objective minus oracle objective for `count` random instances
/// whose oracle lattice contains a feasible point.
pub fn subproblem_gaps(seed: u64, count: usize, n: usize) -> Result<Vec<f64>> {
    let mut rng = trial_rng(seed, 1);
    let instances: Vec<_> = (0..count)
        .map(|_| random_subproblem(&mut rng, n, 3))
        .collect();
    let gaps: Vec<Option<f64>> = instances
        .par_iter()
        .map(|(g, cons)| -> Result<Option<f64>> {
            let Some(oracle) = sphere_grid_min(g, cons) else {
                return Ok(None);
            };
            let sol = solve_subproblem(g, cons, 1e-10)?;
            Ok(Some(g.dot(&sol.code) - oracle))
        })
        .collect::<Result<_>>()?;
    Ok(gaps.into_iter().flatten().collect())
}

/// Named FD comparisons for one node and code.
pub type Certification = Vec<(&'static str, FdComparison)>;

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    m.as_slice().to_vec()
}

/// Certifies the code-space derivatives of `node` at unit code `c`. The
/// target power is rescaled so that the SINR at `c` equals `sinr`, keeping
/// `P̃_d` away from its saturated tails.
pub fn certify_node(node: &NodeLift, c: &DVector<f64>, sinr: f64) -> Result<Certification> {
    let mut node = node.clone();
    node.eps_alpha = sinr / node.matrices.m0.quadratic_form(c);
    let lm = node.matrices.clone();
    let (ea, te) = (node.eps_alpha, node.threshold_exponent);
    let h = 1e-4;
    let mut out = Vec::new();

    let pd = pd_value_gradient_hessian(c, &lm, ea, te)?;
    let pd_val = |x: &DVector<f64>| {
        pd_value_gradient_hessian(x, &lm, ea, te)
            .map(|d| d.value)
            .unwrap_or(f64::NAN)
    };
    let pd_grad = |x: &DVector<f64>| {
        pd_value_gradient_hessian(x, &lm, ea, te)
            .map(|d| d.gradient)
            .unwrap()
    };
    out.push((
        "pd gradient",
        compare(
            pd.gradient.as_slice(),
            &|s| fd_gradient(&pd_val, c, s).as_slice().to_vec(),
            h,
        ),
    ));
    out.push((
        "pd hessian",
        compare(
            &flat(&pd.hessian),
            &|s| flat(&fd_jacobian(&pd_grad, c, s)),
            h,
        ),
    ));

    let (dphi, hphi) = phi_gradient_hessian(c, &lm);
    let phi_val = |x: &DVector<f64>| phi_tilde(x, &lm);
    let phi_grad = |x: &DVector<f64>| phi_gradient_hessian(x, &lm).0;
    out.push((
        "phi gradient",
        compare(
            dphi.as_slice(),
            &|s| fd_gradient(&phi_val, c, s).as_slice().to_vec(),
            h,
        ),
    ));
    out.push((
        "phi hessian",
        compare(&flat(&hphi), &|s| flat(&fd_jacobian(&phi_grad, c, s)), h),
    ));

    let g1 = node.reciprocal_energy(c)?;
    let g1_val = |x: &DVector<f64>| {
        node.reciprocal_energy(x)
            .map(|d| d.value)
            .unwrap_or(f64::NAN)
    };
    let g1_grad = |x: &DVector<f64>| node.reciprocal_energy(x).map(|d| d.gradient).unwrap();
    out.push((
        "gamma1 gradient",
        compare(
            g1.gradient.as_slice(),
            &|s| fd_gradient(&g1_val, c, s).as_slice().to_vec(),
            h,
        ),
    ));
    out.push((
        "gamma1 hessian",
        compare(
            &flat(&g1.hessian),
            &|s| flat(&fd_jacobian(&g1_grad, c, s)),
            h,
        ),
    ));

    let g2 = node.doppler_ratio(c)?;
    let g2_val = |x: &DVector<f64>| node.doppler_ratio(x).map(|d| d.value).unwrap_or(f64::NAN);
    let g2_grad = |x: &DVector<f64>| node.doppler_ratio(x).map(|d| d.gradient).unwrap();
    out.push((
        "gamma2 gradient",
        compare(
            g2.gradient.as_slice(),
            &|s| fd_gradient(&g2_val, c, s).as_slice().to_vec(),
            h,
        ),
    ));
    out.push((
        "gamma2 hessian",
        compare(
            &flat(&g2.hessian),
            &|s| flat(&fd_jacobian(&g2_grad, c, s)),
            h,
        ),
    ));
    Ok(out)
}

/// Certifies the diagonal of `D̂` as the gradient of the trace objective with
/// respect to the noise variances (in relative coordinates).
pub fn certify_noise_gradient(
    b: &Matrix4<f64>,
    h: &Matrix3x4<f64>,
    noise: &[f64; 3],
) -> Result<FdComparison> {
    let (d, _) = noise_gradient(b, h, noise)?;
    let analytic: Vec<f64> = (0..3).map(|l| d[(l, l)] * noise[l]).collect();
    let f = |u: &DVector<f64>| {
        let r = [0, 1, 2].map(|l| noise[l] * (1.0 + u[l]));
        trace_objective(b, h, &r).unwrap_or(f64::NAN)
    };
    let u0 = DVector::zeros(3);
    Ok(compare(
        &analytic,
        &|s| fd_gradient(&f, &u0, s).as_slice().to_vec(),
        1e-4,
    ))
}

/// Certifies the measurement Jacobian at `state` (positions scaled by 1 km,
/// velocities by 10 m/s).
pub fn certify_jacobian(state: &TargetState, node: [f64; 2]) -> Result<FdComparison> {
    let scale = Vector4::new(1000.0, 10.0, 1000.0, 10.0);
    let h = jacobian_h(state, node)?;
    let analytic = DMatrix::from_fn(3, 4, |i, j| h[(i, j)] * scale[j]);
    let x0 = state.to_vector();
    let map = |u: &DVector<f64>| {
        let x = x0 + Vector4::new(u[0], u[1], u[2], u[3]).component_mul(&scale);
        let g = geometry(&TargetState::from_vector(&x), node).unwrap();
        DVector::from_vec(vec![g.range, g.range_rate, g.angle])
    };
    let u0 = DVector::zeros(4);
    Ok(compare(
        &flat(&analytic),
        &|s| flat(&fd_jacobian(&map, &u0, s)),
        1e-3,
    ))
}

/// Frame-1 node models of a scenario and the lifted reference code.
pub fn frame_one_nodes(
    s: &Scenario,
) -> Result<(Vec<NodeLift>, Vec<Matrix3x4<f64>>, LiftedCode, TargetState)> {
    let state = propagate(
        &s.initial_state,
        &crate::tracking::cv_model(s.interval, 0.0),
    );
    let mut lifts = Vec::new();
    let mut jacobians = Vec::new();
    for node in &s.nodes {
        let g = geometry(&state, node.position)?;
        let cm = build_code_matrices(node, g.doppler(node.wavelength), g.angle)?;
        lifts.push(NodeLift::new(&cm, node.wavelength, node.pfa)?);
        jacobians.push(jacobian_h(&state, node.position)?);
    }
    Ok((lifts, jacobians, lift(&p3_reference(s.pulses())?), state))
}

/// Worst relative error of the Taylor model at its expansion point over all
/// nodes and measurement types.
pub fn taylor_expansion_error(s: &Scenario) -> Result<f64> {
    let (lifts, _, c0, _) = frame_one_nodes(s)?;
    let mut worst: f64 = 0.0;
    for node in &lifts {
        let tm = node.taylor_model(&c0, s.noise_floor)?;
        let model = tm.evaluate(c0.as_vector());
        let exact = node.exact_noise(c0.as_vector())?;
        for l in 0..3 {
            worst = worst.max((model[l] - exact[l]).abs() / exact[l].abs());
        }
    }
    Ok(worst)
}

/// Summary of derivative certification over random points.
#[derive(Debug, Clone)]
pub struct CertificationSummary {
    pub points: usize,
    pub failures: Vec<String>,
    /// Largest extrapolated relative error seen per quantity.
    pub worst: Vec<(&'static str, f64)>,
}

fn note(worst: &mut Vec<(&'static str, f64)>, name: &'static str, e: f64) {
    match worst.iter_mut().find(|w| w.0 == name) {
        Some(w) => w.1 = w.1.max(e),
        None => worst.push((name, e)),
    }
}

/// Certifies every analytic derivative at `points` random points each.
pub fn certify_all(s: &Scenario, seed: u64, points: usize) -> Result<CertificationSummary> {
    let (lifts, jacobians, _, state) = frame_one_nodes(s)?;
    let mut rng = trial_rng(seed, 2);
    let mut failures = Vec::new();
    let mut worst = Vec::new();
    for i in 0..points {
        let n = i % lifts.len();
        let node = &lifts[n];
        let c = random_unit(&mut rng, node.dim());
        let sinr = rng.gen_range(2.0..25.0);
        for (name, cmp) in certify_node(node, &c, sinr)? {
            note(&mut worst, name, cmp.extrapolated);
            if !cmp.passes(FD_TOL) {
                failures.push(format!("{name} at point {i}: {cmp:?}"));
            }
        }

        // Prior comparable to the measurement information so that Tr(J⁻¹)
        // is not dominated by one nearly unobserved direction.
        let noise = [0; 3].map(|_| 10f64.powf(rng.gen_range(-2.0..4.0)));
        let info = crate::tracking::information_increment(&jacobians[n], &noise.map(|r| 1.0 / r));
        let scale = 10f64.powf(rng.gen_range(-1.0..1.0)) * info.trace() / 4.0;
        let b = random_spd(&mut rng, scale);
        let cmp = certify_noise_gradient(&b, &jacobians[n], &noise)?;
        note(&mut worst, "noise gradient", cmp.extrapolated);
        if !cmp.passes(FD_TOL) {
            failures.push(format!("noise gradient at point {i}: {cmp:?}"));
        }

        let offset = [rng.gen_range(-20e3..20e3), rng.gen_range(-10e3..10e3)];
        let v = [rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)];
        let x = TargetState::new([state.x + offset[0], state.y + offset[1]], v);
        let cmp = certify_jacobian(&x, s.nodes[n].position)?;
        note(&mut worst, "measurement jacobian", cmp.extrapolated);
        if !cmp.passes(FD_TOL) {
            failures.push(format!("measurement jacobian at point {i}: {cmp:?}"));
        }
    }
    Ok(CertificationSummary {
        points,
        failures,
        worst,
    })
}

/// One line of the `check` report.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// The invariant and oracle suite behind `netwave check`.
pub fn run_checks(s: &Scenario) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();

    let (err, at) = marcum_max_error()?;
    out.push(CheckOutcome {
        name: "marcum-q vs quadrature",
        passed: err <= MARCUM_TOL,
        detail: format!(
            "max abs error {err:.3e} at (v, a, b) = {at:?} over {} points",
            marcum_grid().len()
        ),
    });

    let cert = certify_all(s, s.seed, 50)?;
    out.push(CheckOutcome {
        name: "derivative certification",
        passed: cert.failures.is_empty(),
        detail: format!(
            "{} points, {} failures, worst {:?}",
            cert.points,
            cert.failures.len(),
            cert.worst
                .iter()
                .map(|(n, e)| format!("{n}={e:.1e}"))
                .collect::<Vec<_>>()
        ),
    });

    let taylor = taylor_expansion_error(s)?;
    out.push(CheckOutcome {
        name: "taylor model at expansion point",
        passed: taylor <= TAYLOR_TOL,
        detail: format!("max relative error {taylor:.3e}"),
    });

    let (bad, worst) = concavity_probe(s.seed, 1000)?;
    out.push(CheckOutcome {
        name: "trace objective concavity",
        passed: bad == 0,
        detail: format!("{bad} of 1000 violations, worst relative gap {worst:.3e}"),
    });

    let gaps = subproblem_gaps(s.seed, 20, 6)?;
    let worst_gap = gaps.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    out.push(CheckOutcome {
        name: "subproblem vs sphere grid",
        passed: worst_gap <= SUBPROBLEM_TOL,
        detail: format!(
            "worst |solver - oracle| {worst_gap:.3e} over {} instances",
            gaps.len()
        ),
    });

    let reference = crate::harness::run_campaign(s, 0.0)?;
    let decreasing = reference
        .windows(2)
        .all(|w| w[1].pcrlb_trace < w[0].pcrlb_trace);
    out.push(CheckOutcome {
        name: "reference PCRLB decreasing",
        passed: decreasing,
        detail: format!("{} frames", reference.len()),
    });
    Ok(out)
}
