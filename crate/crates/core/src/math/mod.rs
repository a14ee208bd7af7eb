//! Numerical kernels shared by the rest of the crate.

pub mod linalg;
pub mod marcum;

pub use linalg::{
    jacobi_eigen, min_max_eigenvalues, orthogonal_complement, spd_solve_and_trace_inverse,
    Cholesky, SymmetricEigen, SymmetricMatrix,
};
pub use marcum::{detection_probability, marcum_q};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix.
pub type ComplexMatrix = DMatrix<Complex64>;
