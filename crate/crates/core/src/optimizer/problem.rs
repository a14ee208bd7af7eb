use nalgebra::{DVector, Matrix3x4, Matrix4};

use crate::error::{Error, Result};
use crate::lift::{LiftedCode, NodeLift, TaylorModel};
use crate::math::spd_solve_and_trace_inverse;
use crate::tracking::{information_increment, to_dynamic};

/// Stopping and tolerance settings for the block-MM loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stop once successive objective values differ by less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Feasibility slack used when screening subproblem candidates.
    pub feasibility_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            max_iterations: 500,
            feasibility_tol: 1e-10,
        }
    }
}

/// Everything the optimizer needs about one node in the current frame.
#[derive(Debug, Clone)]
pub struct NodeFrame {
    pub taylor: TaylorModel,
    pub jacobian: Matrix3x4<f64>,
    pub exact: NodeLift,
    /// `λmin` of each quadratic model matrix.
    pub(crate) curvature_floor: [f64; 3],
}

impl NodeFrame {
    pub fn new(taylor: TaylorModel, jacobian: Matrix3x4<f64>, exact: NodeLift) -> Result<Self> {
        let mut curvature_floor = [0.0; 3];
        for (l, term) in taylor.terms.iter().enumerate() {
            curvature_floor[l] = term.quad.extremal_eigenvalues()?.0;
        }
        Ok(Self {
            taylor,
            jacobian,
            exact,
            curvature_floor,
        })
    }
}

/// One frame's code-design problem.
#[derive(Debug, Clone)]
pub struct FrameProblem {
    pub nodes: Vec<NodeFrame>,
    /// Predicted information `F⁻ᵀ J_{k-1} F⁻¹`.
    pub prior: Matrix4<f64>,
    /// Similarity bound: `c̃₀ᵀc̃ >= similarity`.
    pub similarity: f64,
    pub reference: LiftedCode,
    pub config: SolverConfig,
}

impl FrameProblem {
    pub fn new(
        nodes: Vec<NodeFrame>,
        prior: Matrix4<f64>,
        zeta: f64,
        reference: LiftedCode,
        config: SolverConfig,
    ) -> Result<Self> {
        if !(0.0..=2.0).contains(&zeta) {
            return Err(Error::InvalidArgument(format!(
                "similarity zeta must lie in [0, 2], got {zeta}"
            )));
        }
        if nodes.is_empty() {
            return Err(Error::InvalidArgument(
                "frame problem needs at least one node".into(),
            ));
        }
        for n in &nodes {
            if n.taylor.dim() != reference.as_vector().len() {
                return Err(Error::Shape(
                    "Taylor model and reference code sizes differ".into(),
                ));
            }
        }
        spd_solve_and_trace_inverse(&to_dynamic(&prior))?;
        Ok(Self {
            nodes,
            prior,
            similarity: 1.0 - zeta / 2.0,
            reference,
            config,
        })
    }

    pub fn floor(&self, node: usize) -> f64 {
        self.nodes[node].taylor.floor
    }
}

/// `Tr((B + Hᵀ Diag(noise)⁻¹ H)⁻¹)`, concave in the noise diagonal.
pub fn trace_objective(b: &Matrix4<f64>, h: &Matrix3x4<f64>, noise: &[f64; 3]) -> Result<f64> {
    let w = [1.0 / noise[0], 1.0 / noise[1], 1.0 / noise[2]];
    let j = b + information_increment(h, &w);
    Ok(spd_solve_and_trace_inverse(&to_dynamic(&j))?.1)
}

fn modelled_noise(fp: &FrameProblem, node: usize, code: &DVector<f64>) -> Option<[f64; 3]> {
    let s = fp.nodes[node].taylor.evaluate(code);
    let floor = fp.floor(node);
    if s.iter().all(|v| *v >= floor) {
        Some(s)
    } else {
        None
    }
}

/// Trace of the inverse modelled information; `+∞` when any modelled noise
/// term falls below the floor.
pub fn approx_objective(fp: &FrameProblem, codes: &[LiftedCode]) -> f64 {
    let mut j = fp.prior;
    for (n, c) in codes.iter().enumerate() {
        match modelled_noise(fp, n, c.as_vector()) {
            Some(s) => {
                j += information_increment(
                    &fp.nodes[n].jacobian,
                    &[1.0 / s[0], 1.0 / s[1], 1.0 / s[2]],
                )
            }
            None => return f64::INFINITY,
        }
    }
    match spd_solve_and_trace_inverse(&to_dynamic(&j)) {
        Ok((_, tr)) => tr,
        Err(_) => f64::INFINITY,
    }
}

/// Prior plus the modelled information of every node except `p`.
pub fn block_restriction(
    fp: &FrameProblem,
    codes: &[LiftedCode],
    p: usize,
) -> Result<Matrix4<f64>> {
    let mut b = fp.prior;
    for (n, c) in codes.iter().enumerate() {
        if n == p {
            continue;
        }
        let s = modelled_noise(fp, n, c.as_vector())
            .ok_or_else(|| Error::Infeasible(format!("node {n} code violates the noise floor")))?;
        b += information_increment(&fp.nodes[n].jacobian, &[1.0 / s[0], 1.0 / s[1], 1.0 / s[2]]);
    }
    spd_solve_and_trace_inverse(&to_dynamic(&b))?;
    Ok(b)
}

/// Information matrix using the exact noise terms of `codes`.
pub fn exact_information(fp: &FrameProblem, codes: &[LiftedCode]) -> Result<Matrix4<f64>> {
    let mut j = fp.prior;
    for (n, c) in codes.iter().enumerate() {
        let s = fp.nodes[n].exact.exact_noise(c.as_vector())?;
        j += information_increment(&fp.nodes[n].jacobian, &[1.0 / s[0], 1.0 / s[1], 1.0 / s[2]]);
    }
    Ok((j + j.transpose()) * 0.5)
}

/// Exact per-frame PCRLB trace for `codes`.
pub fn exact_objective(fp: &FrameProblem, codes: &[LiftedCode]) -> Result<f64> {
    let j = exact_information(fp, codes)?;
    Ok(spd_solve_and_trace_inverse(&to_dynamic(&j))?.1)
}
