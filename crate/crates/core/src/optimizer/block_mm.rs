use nalgebra::{DVector, Matrix4};

use crate::error::{Error, Result};
use crate::lift::LiftedCode;

use super::problem::{
    approx_objective, block_restriction, exact_information, exact_objective, trace_objective,
    FrameProblem,
};
use super::subproblem::{solve_subproblem, Halfspace};
use super::surrogate::build_surrogate;

/// Outcome of the block-MM loop on the modelled problem.
#[derive(Debug, Clone)]
pub struct BlockMmReport {
    pub codes: Vec<LiftedCode>,
    /// Modelled objective before the first sweep and after every sweep.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Block updates discarded because they would have raised the block
    /// objective or crossed the noise floor (rounding-level events).
    pub rejected_updates: usize,
    /// Largest block-objective increase among discarded updates.
    pub max_rejected_increase: f64,
}

/// Halfspaces of one block's subproblem: similarity plus the three floors.
pub(crate) fn block_constraints(
    fp: &FrameProblem,
    node: usize,
    sur: &super::SurrogateData,
) -> Vec<Halfspace> {
    let floor = fp.floor(node);
    let mut out = vec![Halfspace {
        normal: fp.reference.as_vector().clone(),
        bound: fp.similarity,
    }];
    for l in 0..3 {
        out.push(Halfspace {
            normal: sur.floor_normals[l].clone(),
            bound: floor - sur.floor_offsets[l],
        });
    }
    out
}

pub fn block_mm(fp: &FrameProblem) -> Result<BlockMmReport> {
    let n = fp.nodes.len();
    let mut codes = vec![fp.reference.clone(); n];
    let start = approx_objective(fp, &codes);
    if !start.is_finite() {
        return Err(Error::ExpansionPoint(
            "reference codes violate the noise floor".into(),
        ));
    }
    let mut trace = vec![start];
    let mut rejected_updates = 0;
    let mut max_rejected_increase: f64 = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..fp.config.max_iterations {
        iterations += 1;
        for p in 0..n {
            let node = &fp.nodes[p];
            let b = block_restriction(fp, &codes, p)?;
            let iterate = codes[p].as_vector();
            let sur = build_surrogate(&b, node, iterate)?;
            let constraints = block_constraints(fp, p, &sur);
            let candidate =
                match solve_subproblem(&sur.slope, &constraints, fp.config.feasibility_tol) {
                    Ok(s) => s.code,
                    Err(Error::Infeasible(_)) => {
                        rejected_updates += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
            if let Some(value) = block_value(fp, p, &b, &candidate) {
                if value <= sur.value {
                    codes[p] = LiftedCode::new(candidate)?;
                    continue;
                }
                max_rejected_increase = max_rejected_increase.max(value - sur.value);
            }
            rejected_updates += 1;
        }
        let value = approx_objective(fp, &codes);
        let previous = *trace.last().unwrap();
        trace.push(value);
        if (previous - value).abs() < fp.config.tolerance {
            converged = true;
            break;
        }
    }
    Ok(BlockMmReport {
        codes,
        trace,
        iterations,
        converged,
        rejected_updates,
        max_rejected_increase,
    })
}

/// Block objective at `code`, or `None` if it breaks the floor or similarity.
fn block_value(fp: &FrameProblem, p: usize, b: &Matrix4<f64>, code: &DVector<f64>) -> Option<f64> {
    let e = code.norm_squared();
    if (e - 1.0).abs() > 1e-9 || fp.reference.as_vector().dot(code) < fp.similarity - 1e-9 {
        return None;
    }
    let s = fp.nodes[p].taylor.evaluate(code);
    if s.iter().any(|v| *v < fp.floor(p)) {
        return None;
    }
    trace_objective(b, &fp.nodes[p].jacobian, &s).ok()
}

/// Result of one frame's design with the exact-objective acceptance gate.
#[derive(Debug, Clone)]
pub struct FrameDesign {
    pub codes: Vec<LiftedCode>,
    pub accepted: bool,
    pub information: Matrix4<f64>,
    pub objective: f64,
    pub reference_objective: f64,
    pub candidate_objective: f64,
    pub report: BlockMmReport,
}

/// Runs block-MM and keeps the candidate only if it strictly lowers the exact
/// objective relative to the all-reference codes.
pub fn frame_design(fp: &FrameProblem) -> Result<FrameDesign> {
    let report = block_mm(fp)?;
    let reference = vec![fp.reference.clone(); fp.nodes.len()];
    let reference_objective = exact_objective(fp, &reference)?;
    let candidate_objective = exact_objective(fp, &report.codes).unwrap_or(f64::INFINITY);
    let accepted = candidate_objective < reference_objective;
    let codes = if accepted {
        report.codes.clone()
    } else {
        reference
    };
    let information = exact_information(fp, &codes)?;
    Ok(FrameDesign {
        codes,
        accepted,
        information,
        objective: if accepted {
            candidate_objective
        } else {
            reference_objective
        },
        reference_objective,
        candidate_objective,
        report,
    })
}
