use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x4, Matrix4};

use crate::error::Result;
use crate::math::{min_max_eigenvalues, Cholesky, SymmetricMatrix};
use crate::tracking::{information_increment, to_dynamic};

use super::problem::NodeFrame;

/// Linear majorizer of one block's objective on the unit sphere, plus linear
/// minorizers of its three modelled noise terms.
#[derive(Debug, Clone)]
pub struct SurrogateData {
    /// Gradient of the concave trace objective with respect to the noise
    /// covariance, at the current iterate.
    pub noise_gradient: Matrix3<f64>,
    pub quad: SymmetricMatrix,
    pub lin: DVector<f64>,
    pub constant: f64,
    /// `gᵀc̃ + g0` majorizes the block objective.
    pub slope: DVector<f64>,
    pub offset: f64,
    /// `h_lᵀc̃ + h_l0` minorizes the modelled noise term `l`.
    pub floor_normals: [DVector<f64>; 3],
    pub floor_offsets: [f64; 3],
    /// Block objective at the iterate.
    pub value: f64,
}

impl SurrogateData {
    pub fn majorizer(&self, c: &DVector<f64>) -> f64 {
        self.slope.dot(c) + self.offset
    }

    pub fn floor_bound(&self, l: usize, c: &DVector<f64>) -> f64 {
        self.floor_normals[l].dot(c) + self.floor_offsets[l]
    }
}

/// `R⁻¹ H (B + Hᵀ R⁻¹ H)⁻² Hᵀ R⁻¹` together with the trace objective.
pub fn noise_gradient(
    b: &Matrix4<f64>,
    h: &Matrix3x4<f64>,
    noise: &[f64; 3],
) -> Result<(Matrix3<f64>, f64)> {
    let w = [1.0 / noise[0], 1.0 / noise[1], 1.0 / noise[2]];
    let j = b + information_increment(h, &w);
    let chol = Cholesky::new(&to_dynamic(&j))?;
    let inv = chol.inverse();
    let inv = Matrix4::from_column_slice(inv.as_slice());
    let rinv = Matrix3::from_diagonal(&nalgebra::Vector3::new(w[0], w[1], w[2]));
    let g = rinv * h * inv * inv * h.transpose() * rinv;
    Ok(((g + g.transpose()) * 0.5, inv.trace()))
}

pub fn build_surrogate(
    b: &Matrix4<f64>,
    node: &NodeFrame,
    iterate: &DVector<f64>,
) -> Result<SurrogateData> {
    let tm = &node.taylor;
    let noise = tm.evaluate(iterate);
    let (grad, value) = noise_gradient(b, &node.jacobian, &noise)?;

    let n = iterate.len();
    let mut quad = DMatrix::<f64>::zeros(n, n);
    let mut lin = DVector::<f64>::zeros(n);
    let mut constant = value;
    for (l, term) in tm.terms.iter().enumerate() {
        let w = grad[(l, l)];
        quad += term.quad.matrix() * w;
        lin += &term.lin * w;
        constant += w * (term.constant - noise[l]);
    }
    let quad = SymmetricMatrix::symmetrized(quad);
    let (_, top) = min_max_eigenvalues(quad.matrix())?;

    // Replace the quadratic by λmax‖c̃‖² = λmax on the sphere and linearize the
    // remaining concave part at the iterate.
    let qx = quad.matrix() * iterate;
    let slope = (&qx - iterate * top) * 2.0 + &lin;
    let offset = 2.0 * top - iterate.dot(&qx) + constant;

    let mut floor_normals: [DVector<f64>; 3] = Default::default();
    let mut floor_offsets = [0.0; 3];
    for (l, term) in tm.terms.iter().enumerate() {
        let low = node.curvature_floor[l];
        let ax = term.quad.matrix() * iterate;
        floor_normals[l] = (&ax - iterate * low) * 2.0 + &term.lin;
        floor_offsets[l] = 2.0 * low - iterate.dot(&ax) + term.constant;
    }
    Ok(SurrogateData {
        noise_gradient: grad,
        quad,
        lin,
        constant,
        slope,
        offset,
        floor_normals,
        floor_offsets,
        value,
    })
}
