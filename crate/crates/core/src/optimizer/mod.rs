//! Per-frame code design: modelled objective, block-MM with linear
//! surrogates, the exact-objective gate, and the SINR-only benchmark.

mod benchmark;
mod block_mm;
mod problem;
mod subproblem;
mod surrogate;

pub use benchmark::{benchmark_lifted, sinr_benchmark_code, sphere_quadratic_max};
pub use block_mm::{block_mm, frame_design, BlockMmReport, FrameDesign};
pub use problem::{
    approx_objective, block_restriction, exact_information, exact_objective, trace_objective,
    FrameProblem, NodeFrame, SolverConfig,
};
pub use subproblem::{minimize_over_ball, solve_subproblem, Halfspace, SubproblemSolution};
pub use surrogate::{build_surrogate, noise_gradient, SurrogateData};
