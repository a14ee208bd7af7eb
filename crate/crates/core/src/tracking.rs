//! Constant-velocity kinematics, node geometry, measurement Jacobians and the
//! information-matrix recursion behind the PCRLB.

use nalgebra::{DMatrix, Matrix3x4, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::spd_solve_and_trace_inverse;

/// Target state ordered `[x, ẋ, y, ẏ]` (meters, m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
}

impl TargetState {
    pub fn new(position: [f64; 2], velocity: [f64; 2]) -> Self {
        Self {
            x: position[0],
            vx: velocity[0],
            y: position[1],
            vy: velocity[1],
        }
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.x, self.vx, self.y, self.vy)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self {
            x: v[0],
            vx: v[1],
            y: v[2],
            vy: v[3],
        }
    }
}

/// Range, range rate (negative when receding) and look angle from one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub range: f64,
    pub range_rate: f64,
    pub angle: f64,
}

impl Geometry {
    /// Doppler shift `2 v_d / λ`.
    pub fn doppler(&self, wavelength: f64) -> f64 {
        2.0 * self.range_rate / wavelength
    }
}

pub fn geometry(x: &TargetState, node: [f64; 2]) -> Result<Geometry> {
    let dx = x.x - node[0];
    let dy = x.y - node[1];
    let range = dx.hypot(dy);
    if !(range > 0.0) || !range.is_finite() {
        return Err(Error::Geometry(format!(
            "target at ({}, {}) coincides with node at ({}, {})",
            x.x, x.y, node[0], node[1]
        )));
    }
    Ok(Geometry {
        range,
        range_rate: -(dx * x.vx + dy * x.vy) / range,
        angle: dx.atan2(dy),
    })
}

/// Jacobian of (range, range rate, angle) with respect to `[x, ẋ, y, ẏ]`.
pub fn jacobian_h(x: &TargetState, node: [f64; 2]) -> Result<Matrix3x4<f64>> {
    let g = geometry(x, node)?;
    let dx = x.x - node[0];
    let dy = x.y - node[1];
    let r = g.range;
    let r2 = r * r;
    let v = g.range_rate;
    Ok(Matrix3x4::new(
        dx / r,
        0.0,
        dy / r,
        0.0,
        -x.vx / r - dx * v / r2,
        -dx / r,
        -x.vy / r - dy * v / r2,
        -dy / r,
        dy / r2,
        0.0,
        -dx / r2,
        0.0,
    ))
}

/// Constant-velocity transition and process-noise covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub transition: Matrix4<f64>,
    pub process_noise: Matrix4<f64>,
    pub interval: f64,
    pub noise_power: f64,
}

pub fn cv_model(interval: f64, noise_power: f64) -> MotionModel {
    let t = interval;
    let mut f = Matrix4::identity();
    f[(0, 1)] = t;
    f[(2, 3)] = t;
    let block = [[t * t * t / 3.0, t * t / 2.0], [t * t / 2.0, t]];
    let mut u = Matrix4::zeros();
    for b in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                u[(2 * b + i, 2 * b + j)] = noise_power * block[i][j];
            }
        }
    }
    MotionModel {
        transition: f,
        process_noise: u,
        interval,
        noise_power,
    }
}

impl MotionModel {
    pub fn inverse_transition(&self) -> Matrix4<f64> {
        let mut f = Matrix4::identity();
        f[(0, 1)] = -self.interval;
        f[(2, 3)] = -self.interval;
        f
    }

    /// `F⁻ᵀ J F⁻¹`.
    pub fn predict_information(&self, j: &Matrix4<f64>) -> Matrix4<f64> {
        let fi = self.inverse_transition();
        let p = fi.transpose() * j * fi;
        (p + p.transpose()) * 0.5
    }
}

pub fn propagate(x: &TargetState, model: &MotionModel) -> TargetState {
    TargetState::from_vector(&(model.transition * x.to_vector()))
}

/// Fisher information of the state at a given frame.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationState {
    pub j: Matrix4<f64>,
    pub frame: usize,
}

impl InformationState {
    /// `scale * I` at frame 0.
    pub fn initial(scale: f64) -> Self {
        Self {
            j: Matrix4::identity() * scale,
            frame: 0,
        }
    }
}

/// One node's contribution: Jacobian and inverse noise variances.
#[derive(Debug, Clone, Copy)]
pub struct Contribution {
    pub h: Matrix3x4<f64>,
    pub inverse_noise: [f64; 3],
}

/// `Hᵀ Diag(w) H`.
pub fn information_increment(h: &Matrix3x4<f64>, w: &[f64; 3]) -> Matrix4<f64> {
    let mut out = Matrix4::zeros();
    for l in 0..3 {
        let row = h.row(l);
        out += row.transpose() * row * w[l];
    }
    out
}

pub fn im_recursion(
    prev: &InformationState,
    model: &MotionModel,
    contributions: &[Contribution],
) -> Result<InformationState> {
    let mut j = model.predict_information(&prev.j);
    for c in contributions {
        j += information_increment(&c.h, &c.inverse_noise);
    }
    let j = (j + j.transpose()) * 0.5;
    spd_solve_and_trace_inverse(&to_dynamic(&j))?;
    Ok(InformationState {
        j,
        frame: prev.frame + 1,
    })
}

pub fn pcrlb_trace(j: &Matrix4<f64>) -> Result<f64> {
    Ok(spd_solve_and_trace_inverse(&to_dynamic(j))?.1)
}

/// Diagonal of `J⁻¹` in state order.
pub fn pcrlb_diagonal(j: &Matrix4<f64>) -> Result<[f64; 4]> {
    let (chol, _) = spd_solve_and_trace_inverse(&to_dynamic(j))?;
    let inv = chol.inverse();
    Ok([inv[(0, 0)], inv[(1, 1)], inv[(2, 2)], inv[(3, 3)]])
}

pub fn to_dynamic(m: &Matrix4<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(4, 4, m.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basic_geometry() {
        let x = TargetState::new([3000.0, 4000.0], [30.0, 40.0]);
        let g = geometry(&x, [0.0, 0.0]).unwrap();
        assert_relative_eq!(g.range, 5000.0);
        assert_relative_eq!(g.range_rate, -50.0);
        assert_relative_eq!(g.angle, 0.75f64.atan(), max_relative = 1e-15);
        assert!(geometry(&x, [3000.0, 4000.0]).is_err());
    }

    #[test]
    fn due_north_angle_derivatives() {
        let x = TargetState::new([100.0, 5100.0], [1.0, 2.0]);
        let h = jacobian_h(&x, [100.0, 100.0]).unwrap();
        assert_relative_eq!(h[(2, 0)], 1.0 / 5000.0, max_relative = 1e-15);
        assert_eq!(h[(2, 2)], 0.0);
        assert_relative_eq!(h[(0, 2)], 1.0);
    }

    #[test]
    fn motion_model() {
        let m = cv_model(1.0, 0.0);
        assert_eq!(m.process_noise, Matrix4::zeros());
        assert_eq!(m.transition * m.inverse_transition(), Matrix4::identity());
        let x = propagate(&TargetState::new([30000.0, 55000.0], [80.0, 240.0]), &m);
        assert_eq!(x, TargetState::new([30080.0, 55240.0], [80.0, 240.0]));
        let x0 = TargetState::new([1.0, 2.0], [3.0, -4.0]);
        let two = propagate(&propagate(&x0, &cv_model(0.5, 0.0)), &cv_model(0.5, 0.0));
        let one = propagate(&x0, &cv_model(1.0, 0.0));
        assert!((two.to_vector() - one.to_vector()).norm() < 1e-12);
    }

    #[test]
    fn recursion_with_identity_transition() {
        let model = cv_model(0.0, 0.0);
        let prev = InformationState::initial(1.0);
        let mut h = Matrix3x4::zeros();
        for i in 0..3 {
            h[(i, i)] = 1.0;
        }
        let next = im_recursion(
            &prev,
            &model,
            &[Contribution {
                h,
                inverse_noise: [1.0; 3],
            }],
        )
        .unwrap();
        assert_eq!(
            next.j,
            Matrix4::from_diagonal(&Vector4::new(2.0, 2.0, 2.0, 1.0))
        );
        assert_eq!(next.frame, 1);
    }

    #[test]
    fn initial_trace() {
        let j = InformationState::initial(1e-10).j;
        assert_relative_eq!(pcrlb_trace(&j).unwrap(), 4e10, max_relative = 1e-14);
        let d = Matrix4::from_diagonal(&Vector4::new(1.0, 2.0, 4.0, 8.0));
        assert_relative_eq!(pcrlb_trace(&d).unwrap(), 1.875, max_relative = 1e-15);
    }
}
