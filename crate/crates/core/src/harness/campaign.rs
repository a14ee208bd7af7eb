//! Multi-frame campaign: propagate the target, design codes frame by frame
//! and thread the information matrix forward.

use nalgebra::{DVector, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift::{lift, LiftedCode, NodeLift};
use crate::optimizer::{benchmark_lifted, frame_design, FrameProblem, NodeFrame};
use crate::signal::{build_code_matrices, RadarNodeModel, SlowTimeCode};
use crate::tracking::{
    cv_model, geometry, jacobian_h, pcrlb_diagonal, propagate, MotionModel, TargetState,
};

use super::scenario::Scenario;

/// P3 polyphase code, `exp(jπm²/M)/√M` for `m = 0..M-1`.
pub fn p3_reference(len: usize) -> Result<SlowTimeCode> {
    if len < 3 {
        return Err(Error::InvalidArgument(format!(
            "P3 code needs length >= 3, got {len}"
        )));
    }
    let m = len as f64;
    let amp = 1.0 / m.sqrt();
    let entries = DVector::from_fn(len, |i, _| {
        let k = i as f64;
        Complex64::from_polar(amp, std::f64::consts::PI * k * k / m)
    });
    SlowTimeCode::new(entries)
}

/// Exact per-frame metrics of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub zeta: f64,
    pub pcrlb_trace: f64,
    pub crlb_x: f64,
    pub crlb_y: f64,
    pub crlb_vx: f64,
    pub crlb_vy: f64,
    pub pd: Vec<f64>,
    pub pd_bench: Vec<f64>,
    pub accepted: bool,
    pub iterations: usize,
}

/// Optimizer internals of one frame, kept for diagnostics.
#[derive(Debug, Clone)]
pub struct FrameDiagnostics {
    pub frame: usize,
    /// Modelled objective before the first sweep and after every sweep.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub rejected_updates: usize,
    pub max_rejected_increase: f64,
    pub reference_objective: f64,
    pub candidate_objective: f64,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub records: Vec<FrameRecord>,
    pub diagnostics: Vec<FrameDiagnostics>,
    /// Designed codes per frame, per node.
    pub codes: Vec<Vec<LiftedCode>>,
}

/// Nodes of `s` with their target powers replaced.
pub(crate) fn with_powers(s: &Scenario, powers: &[f64]) -> Result<Vec<RadarNodeModel>> {
    if powers.len() != s.nodes.len() {
        return Err(Error::Shape(format!(
            "{} target powers for {} nodes",
            powers.len(),
            s.nodes.len()
        )));
    }
    Ok(s.nodes
        .iter()
        .zip(powers)
        .map(|(n, &p)| RadarNodeModel {
            target_power: p,
            ..n.clone()
        })
        .collect())
}

pub(crate) fn motion(s: &Scenario) -> MotionModel {
    cv_model(s.interval, 0.0)
}

/// Exact lifted quantities of one node looking at `state`.
pub(crate) fn node_lift(
    node: &RadarNodeModel,
    state: &TargetState,
) -> Result<(NodeLift, nalgebra::Matrix3x4<f64>)> {
    let g = geometry(state, node.position)?;
    let cm = build_code_matrices(node, g.doppler(node.wavelength), g.angle)?;
    Ok((
        NodeLift::new(&cm, node.wavelength, node.pfa)?,
        jacobian_h(state, node.position)?,
    ))
}

/// Builds the frame problem for `state` (true or predicted).
pub(crate) fn frame_problem(
    s: &Scenario,
    nodes: &[RadarNodeModel],
    state: &TargetState,
    prior: Matrix4<f64>,
    zeta: f64,
    reference: &LiftedCode,
) -> Result<FrameProblem> {
    let mut frames = Vec::with_capacity(nodes.len());
    for (n, node) in nodes.iter().enumerate() {
        let built = node_lift(node, state).and_then(|(exact, h)| {
            let taylor = exact.taylor_model(reference, s.noise_floor)?;
            NodeFrame::new(taylor, h, exact)
        });
        frames.push(built.map_err(|e| e.context(format!("node {}", n + 1)))?);
    }
    FrameProblem::new(frames, prior, zeta, reference.clone(), s.solver)
}

pub(crate) fn record(
    frame: usize,
    zeta: f64,
    j: &Matrix4<f64>,
    pd: Vec<f64>,
    pd_bench: Vec<f64>,
    accepted: bool,
    iterations: usize,
) -> Result<FrameRecord> {
    let d = pcrlb_diagonal(j)?;
    Ok(FrameRecord {
        frame,
        zeta,
        pcrlb_trace: d.iter().sum(),
        crlb_x: d[0],
        crlb_y: d[2],
        crlb_vx: d[1],
        crlb_vy: d[3],
        pd,
        pd_bench,
        accepted,
        iterations,
    })
}

/// Campaign with the scenario's own target powers.
pub fn run_campaign(s: &Scenario, zeta: f64) -> Result<Vec<FrameRecord>> {
    Ok(run_campaign_with_powers(s, zeta, &s.target_powers())?.records)
}

/// Campaign with explicit per-node target powers. `zeta = 0` keeps the
/// reference code without running the optimizer.
pub fn run_campaign_with_powers(s: &Scenario, zeta: f64, powers: &[f64]) -> Result<Campaign> {
    if !(0.0..=2.0).contains(&zeta) {
        return Err(Error::InvalidArgument(format!(
            "zeta must lie in [0, 2], got {zeta}"
        )));
    }
    let nodes = with_powers(s, powers)?;
    let reference = lift(&p3_reference(s.pulses())?);
    let model = motion(s);
    let mut state = s.initial_state;
    let mut j = Matrix4::identity() * s.initial_information;
    let mut out = Campaign {
        records: Vec::with_capacity(s.frames),
        diagnostics: Vec::new(),
        codes: Vec::with_capacity(s.frames),
    };
    for k in 1..=s.frames {
        let ctx = |e: Error| e.context(format!("frame {k}"));
        state = propagate(&state, &model);
        let prior = model.predict_information(&j);
        let fp = frame_problem(s, &nodes, &state, prior, zeta, &reference).map_err(ctx)?;
        let (codes, information, accepted, iterations) = if zeta == 0.0 {
            let codes = vec![reference.clone(); nodes.len()];
            let info = crate::optimizer::exact_information(&fp, &codes).map_err(ctx)?;
            (codes, info, false, 0)
        } else {
            let d = frame_design(&fp).map_err(ctx)?;
            out.diagnostics.push(FrameDiagnostics {
                frame: k,
                objective_trace: d.report.trace.clone(),
                converged: d.report.converged,
                rejected_updates: d.report.rejected_updates,
                max_rejected_increase: d.report.max_rejected_increase,
                reference_objective: d.reference_objective,
                candidate_objective: d.candidate_objective,
            });
            (d.codes, d.information, d.accepted, d.report.iterations)
        };
        let mut pd = Vec::with_capacity(nodes.len());
        let mut pd_bench = Vec::with_capacity(nodes.len());
        for (n, (nf, c)) in fp.nodes.iter().zip(&codes).enumerate() {
            let nctx = |e: Error| e.context(format!("frame {k}, node {}", n + 1));
            pd.push(
                nf.exact
                    .detection_probability(c.as_vector())
                    .map_err(nctx)?,
            );
            let bench = benchmark_lifted(&nf.exact.matrices.m0, &reference, zeta).map_err(nctx)?;
            pd_bench.push(
                nf.exact
                    .detection_probability(bench.as_vector())
                    .map_err(nctx)?,
            );
        }
        out.records
            .push(record(k, zeta, &information, pd, pd_bench, accepted, iterations).map_err(ctx)?);
        out.codes.push(codes);
        j = information;
    }
    Ok(out)
}
