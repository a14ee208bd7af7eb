//! Real-valued form of codes and code matrices, detection-probability and
//! Doppler-spread derivatives, and the quadratic models of the per-node
//! measurement-noise terms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::linalg::relative_asymmetry;
use crate::math::{marcum_q, ComplexMatrix, SymmetricMatrix};
use crate::signal::{CodeMatrices, SlowTimeCode, SPEED_OF_LIGHT, UNIT_ENERGY_TOL};

/// Default floor on the modelled noise terms.
pub const DEFAULT_FLOOR: f64 = 1e-8;

/// Asymmetry above which a Hessian is symmetrized (below it is left alone).
const HESSIAN_SYMMETRIZE_TOL: f64 = 1e-12;

/// `[Re c; Im c]` of a unit-energy code.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedCode(DVector<f64>);

impl LiftedCode {
    pub fn new(v: DVector<f64>) -> Result<Self> {
        let e = v.norm_squared();
        if (e - 1.0).abs() > UNIT_ENERGY_TOL || v.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "lifted code of length {} has energy {e}",
                v.len()
            )));
        }
        Ok(Self(v))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }
}

pub fn lift(c: &SlowTimeCode) -> LiftedCode {
    LiftedCode(lift_vector(c.entries()))
}

pub fn unlift(c: &LiftedCode) -> SlowTimeCode {
    SlowTimeCode::new(unlift_vector(&c.0)).expect("lifting preserves energy")
}

pub fn lift_vector(c: &DVector<Complex64>) -> DVector<f64> {
    let m = c.len();
    DVector::from_fn(2 * m, |i, _| if i < m { c[i].re } else { c[i - m].im })
}

pub fn unlift_vector(v: &DVector<f64>) -> DVector<Complex64> {
    let m = v.len() / 2;
    DVector::from_fn(m, |i, _| Complex64::new(v[i], v[i + m]))
}

/// Real block forms of the code matrices.
#[derive(Debug, Clone)]
pub struct LiftedMatrices {
    /// `c̃ᵀ m0 c̃ = cᴴM₀c`.
    pub m0: SymmetricMatrix,
    /// `c̃ᵀ m1 c̃ = Re cᴴM₁c`.
    pub m1: DMatrix<f64>,
    /// `c̃ᵀ m1_imag c̃ = Im cᴴM₁c`.
    pub m1_imag: DMatrix<f64>,
    /// `c̃ᵀ m2 c̃ = cᴴM₂c`.
    pub m2: SymmetricMatrix,
}

/// `[[Re, -Im], [Im, Re]]`.
fn real_block(m: &ComplexMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// `[[Im, Re], [-Re, Im]]`.
fn imag_block(m: &ComplexMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = m[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.im,
            (true, false) => z.re,
            (false, true) => -z.re,
        }
    })
}

pub fn lift_matrices(cm: &CodeMatrices) -> Result<LiftedMatrices> {
    Ok(LiftedMatrices {
        m0: SymmetricMatrix::new(real_block(&cm.m0))?,
        m1: real_block(&cm.m1),
        m1_imag: imag_block(&cm.m1),
        m2: SymmetricMatrix::new(real_block(&cm.m2))?,
    })
}

/// Doppler spread `(c̃ᵀM̃₀c̃)(c̃ᵀM̃₂c̃) - (c̃ᵀM̃₁c̃)² - (c̃ᵀM̂₁c̃)²`.
pub fn phi_tilde(c: &DVector<f64>, lm: &LiftedMatrices) -> f64 {
    let q0 = lm.m0.quadratic_form(c);
    let q2 = lm.m2.quadratic_form(c);
    let q1 = c.dot(&(&lm.m1 * c));
    let qh = c.dot(&(&lm.m1_imag * c));
    q0 * q2 - q1 * q1 - qh * qh
}

/// Gradient and Hessian of [`phi_tilde`].
pub fn phi_gradient_hessian(c: &DVector<f64>, lm: &LiftedMatrices) -> (DVector<f64>, DMatrix<f64>) {
    let m0 = lm.m0.matrix();
    let m2 = lm.m2.matrix();
    let s1 = &lm.m1 + lm.m1.transpose();
    let sh = &lm.m1_imag + lm.m1_imag.transpose();
    let m0c = m0 * c;
    let m2c = m2 * c;
    let s1c = &s1 * c;
    let shc = &sh * c;
    let q0 = c.dot(&m0c);
    let q2 = c.dot(&m2c);
    let q1 = 0.5 * c.dot(&s1c);
    let qh = 0.5 * c.dot(&shc);

    let grad = &m0c * (2.0 * q2) + &m2c * (2.0 * q0) - &s1c * (2.0 * q1) - &shc * (2.0 * qh);
    let hess = m0 * (2.0 * q2)
        + (&m0c * m2c.transpose()) * 4.0
        + m2 * (2.0 * q0)
        + (&m2c * m0c.transpose()) * 4.0
        - &s1 * (2.0 * q1)
        - (&s1c * s1c.transpose()) * 2.0
        - &sh * (2.0 * qh)
        - (&shc * shc.transpose()) * 2.0;
    (grad, hess)
}

/// `P̃_d` and its gradient and Hessian in the lifted code.
#[derive(Debug, Clone)]
pub struct DetectionDerivatives {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

pub fn pd_value_gradient_hessian(
    c: &DVector<f64>,
    lm: &LiftedMatrices,
    eps_alpha: f64,
    threshold_exponent: f64,
) -> Result<DetectionDerivatives> {
    let m0c = lm.m0.matrix() * c;
    let sinr = (eps_alpha * c.dot(&m0c)).max(0.0);
    let a = (2.0 * sinr).sqrt();
    let b = (2.0 * threshold_exponent).sqrt();
    let q1 = marcum_q(1, a, b)?;
    let q2 = marcum_q(2, a, b)?;
    let q3 = marcum_q(3, a, b)?;
    let gradient = &m0c * (2.0 * eps_alpha * (q2 - q1));
    let hessian = lm.m0.matrix() * (2.0 * eps_alpha * (q2 - q1))
        + (&m0c * m0c.transpose()) * (4.0 * eps_alpha * eps_alpha * (q3 - 2.0 * q2 + q1));
    Ok(DetectionDerivatives {
        value: q1,
        gradient,
        hessian,
    })
}

/// Value, gradient and Hessian of a scalar function of the lifted code.
#[derive(Debug, Clone)]
pub struct ScalarDerivatives {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// Lifted per-node quantities needed to evaluate the exact noise terms.
#[derive(Debug, Clone)]
pub struct NodeLift {
    pub matrices: LiftedMatrices,
    pub eps_alpha: f64,
    pub eps_tau: f64,
    pub eps_f: f64,
    pub eps_theta: f64,
    pub wavelength: f64,
    pub threshold_exponent: f64,
}

impl NodeLift {
    pub fn new(cm: &CodeMatrices, wavelength: f64, pfa: f64) -> Result<Self> {
        Ok(Self {
            matrices: lift_matrices(cm)?,
            eps_alpha: cm.eps_alpha,
            eps_tau: cm.eps_tau,
            eps_f: cm.eps_f,
            eps_theta: cm.eps_theta,
            wavelength,
            threshold_exponent: -pfa.ln(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrices.m0.dim()
    }

    pub fn detection(&self, c: &DVector<f64>) -> Result<DetectionDerivatives> {
        pd_value_gradient_hessian(c, &self.matrices, self.eps_alpha, self.threshold_exponent)
    }

    pub fn detection_probability(&self, c: &DVector<f64>) -> Result<f64> {
        let sinr = (self.eps_alpha * self.matrices.m0.quadratic_form(c)).max(0.0);
        marcum_q(
            1,
            (2.0 * sinr).sqrt(),
            (2.0 * self.threshold_exponent).sqrt(),
        )
    }

    /// Leading constants of the three noise terms relative to the shape
    /// functions `1/(P̃_d c̃ᵀM̃₀c̃)` (range, angle) and `c̃ᵀM̃₀c̃/(P̃_d φ̃)` (range rate).
    pub fn scales(&self) -> [f64; 3] {
        [
            SPEED_OF_LIGHT * SPEED_OF_LIGHT / (4.0 * self.eps_tau),
            self.wavelength * self.wavelength / (4.0 * self.eps_f),
            1.0 / self.eps_theta,
        ]
    }

    /// Exact `R_l / P̃_d` for each measurement, i.e. the effective noise
    /// variance once missed detections are accounted for.
    pub fn exact_noise(&self, c: &DVector<f64>) -> Result<[f64; 3]> {
        let pd = self.detection_probability(c)?;
        let q0 = self.matrices.m0.quadratic_form(c);
        let phi = phi_tilde(c, &self.matrices);
        if !(pd > 0.0 && q0 > 0.0 && phi > 0.0) {
            return Err(Error::DegenerateCode(format!(
                "pd = {pd:e}, energy = {q0:e}, Doppler spread = {phi:e}"
            )));
        }
        let k = self.scales();
        Ok([k[0] / (pd * q0), k[1] * q0 / (pd * phi), k[2] / (pd * q0)])
    }

    /// `1/(P̃_d c̃ᵀM̃₀c̃)` with gradient and Hessian.
    pub fn reciprocal_energy(&self, c: &DVector<f64>) -> Result<ScalarDerivatives> {
        let det = self.detection(c)?;
        let m0 = self.matrices.m0.matrix();
        let m0c = m0 * c;
        let q0 = c.dot(&m0c);
        let denom = det.value * q0;
        if !(denom > 0.0) {
            return Err(Error::ExpansionPoint(format!("P_d * energy = {denom:e}")));
        }
        // g = ∇(P_d q0)
        let g = &det.gradient * q0 + &m0c * (2.0 * det.value);
        let d2 = denom * denom;
        let gradient = -&g / d2;
        let hessian = -(&det.hessian * q0
            + (&det.gradient * m0c.transpose()) * 2.0
            + (&m0c * det.gradient.transpose()) * 2.0
            + m0 * (2.0 * det.value))
            / d2
            + (&g * g.transpose()) * (2.0 / (d2 * denom));
        Ok(ScalarDerivatives {
            value: 1.0 / denom,
            gradient,
            hessian: checked_symmetric(hessian, "reciprocal-energy Hessian")?,
        })
    }

    /// `c̃ᵀM̃₀c̃ / (P̃_d φ̃)` with gradient and Hessian.
    pub fn doppler_ratio(&self, c: &DVector<f64>) -> Result<ScalarDerivatives> {
        let det = self.detection(c)?;
        let m0 = self.matrices.m0.matrix();
        let m0c = m0 * c;
        let q0 = c.dot(&m0c);
        let phi = phi_tilde(c, &self.matrices);
        let (dphi, hphi) = phi_gradient_hessian(c, &self.matrices);
        let denom = det.value * phi;
        if !(denom > 0.0) {
            return Err(Error::ExpansionPoint(format!(
                "P_d * Doppler spread = {denom:e}"
            )));
        }
        // q = ∇(P_d φ̃), big_q = ∇²(P_d φ̃)
        let q = &det.gradient * phi + &dphi * det.value;
        let big_q = &det.hessian * phi
            + &det.gradient * dphi.transpose()
            + &dphi * det.gradient.transpose()
            + hphi * det.value;
        let d2 = denom * denom;
        let gradient = &m0c * (2.0 / denom) - &q * (q0 / d2);
        let hessian = m0 * (2.0 / denom)
            - (&m0c * q.transpose()) * (2.0 / d2)
            - (&q * m0c.transpose()) * (2.0 / d2)
            - big_q * (q0 / d2)
            + (&q * q.transpose()) * (2.0 * q0 / (d2 * denom));
        Ok(ScalarDerivatives {
            value: q0 / denom,
            gradient,
            hessian: checked_symmetric(hessian, "Doppler-ratio Hessian")?,
        })
    }

    /// Second-order models of the three noise terms around `c0`.
    pub fn taylor_model(&self, c0: &LiftedCode, floor: f64) -> Result<TaylorModel> {
        if !(floor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "floor must be positive, got {floor}"
            )));
        }
        let x0 = c0.as_vector();
        let pd = self.detection_probability(x0)?;
        if !(pd > 0.0) {
            return Err(Error::ExpansionPoint("zero detection probability".into()));
        }
        if !(phi_tilde(x0, &self.matrices) > 0.0) {
            return Err(Error::ExpansionPoint(
                "reference code has no Doppler spread".into(),
            ));
        }
        let energy = self.reciprocal_energy(x0)?;
        let ratio = self.doppler_ratio(x0)?;
        let k = self.scales();
        let terms = [
            QuadraticTerm::expand(&energy, x0, k[0])?,
            QuadraticTerm::expand(&ratio, x0, k[1])?,
            QuadraticTerm::expand(&energy, x0, k[2])?,
        ];
        Ok(TaylorModel {
            terms,
            floor,
            expansion: c0.clone(),
        })
    }
}

fn checked_symmetric(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let asym = relative_asymmetry(&m);
    if asym > crate::math::linalg::SYMMETRY_TOL {
        return Err(Error::ExpansionPoint(format!("{what} asymmetry {asym:e}")));
    }
    if asym > HESSIAN_SYMMETRIZE_TOL {
        return Ok((&m + m.transpose()) * 0.5);
    }
    Ok(m)
}

/// `c̃ᵀ quad c̃ + linᵀ c̃ + constant`.
#[derive(Debug, Clone)]
pub struct QuadraticTerm {
    pub quad: SymmetricMatrix,
    pub lin: DVector<f64>,
    pub constant: f64,
}

impl QuadraticTerm {
    /// Second-order expansion of `scale * f` around `x0`.
    fn expand(f: &ScalarDerivatives, x0: &DVector<f64>, scale: f64) -> Result<Self> {
        let hx0 = &f.hessian * x0;
        let quad = SymmetricMatrix::new(&f.hessian * (0.5 * scale))?;
        let lin = (&f.gradient - &hx0) * scale;
        let constant = scale * (f.value - f.gradient.dot(x0) + 0.5 * x0.dot(&hx0));
        Ok(Self {
            quad,
            lin,
            constant,
        })
    }

    pub fn evaluate(&self, c: &DVector<f64>) -> f64 {
        self.quad.quadratic_form(c) + self.lin.dot(c) + self.constant
    }

    pub fn gradient(&self, c: &DVector<f64>) -> DVector<f64> {
        self.quad.matrix() * c * 2.0 + &self.lin
    }
}

/// Quadratic models of the range, range-rate and angle noise terms.
#[derive(Debug, Clone)]
pub struct TaylorModel {
    pub terms: [QuadraticTerm; 3],
    pub floor: f64,
    pub expansion: LiftedCode,
}

impl TaylorModel {
    pub fn evaluate(&self, c: &DVector<f64>) -> [f64; 3] {
        [
            self.terms[0].evaluate(c),
            self.terms[1].evaluate(c),
            self.terms[2].evaluate(c),
        ]
    }

    pub fn dim(&self) -> usize {
        self.expansion.as_vector().len()
    }
}

pub fn evaluate_s_hat(tm: &TaylorModel, c: &DVector<f64>) -> [f64; 3] {
    tm.evaluate(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{build_code_matrices, doppler_spread, sesquilinear, RadarNodeModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn node() -> RadarNodeModel {
        RadarNodeModel {
            position: [0.0, 0.0],
            wavelength: 0.03,
            element_spacing: 0.015,
            elements: 8,
            pulses: 6,
            pri: 250e-6,
            bandwidth: 5e6,
            pulse_samples: 100,
            pulsewidth: 10e-6,
            rho_temporal: 0.8,
            rho_spatial: 0.8,
            target_power: 0.01,
            pfa: 1e-6,
        }
    }

    fn random_code(rng: &mut ChaCha8Rng, m: usize) -> SlowTimeCode {
        let v = DVector::from_fn(m, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        SlowTimeCode::normalized(v).unwrap()
    }

    #[test]
    fn lift_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_code(&mut rng, 6);
        let l = lift(&c);
        assert!((l.as_vector().norm() - 1.0).abs() < 1e-14);
        assert_eq!(unlift(&l), c);
        let e1 = SlowTimeCode::new(DVector::from_fn(4, |i, _| {
            Complex64::new((i == 0) as u8 as f64, 0.0)
        }))
        .unwrap();
        assert_eq!(lift(&e1).as_vector()[0], 1.0);
        let imag = SlowTimeCode::new(DVector::from_fn(4, |i, _| {
            Complex64::new(0.0, (i == 1) as u8 as f64)
        }))
        .unwrap();
        assert!(lift(&imag).as_vector().rows(0, 4).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bridges_to_complex_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cm = build_code_matrices(&node(), -3100.0, 0.2).unwrap();
        let lm = lift_matrices(&cm).unwrap();
        for _ in 0..100 {
            let c = random_code(&mut rng, 6);
            let x = lift(&c).into_vector();
            let e = c.entries();
            let q0 = sesquilinear(e, &cm.m0, e);
            let q1 = sesquilinear(e, &cm.m1, e);
            assert!((lm.m0.quadratic_form(&x) - q0.re).abs() < 1e-12 * q0.norm().max(1.0));
            assert!((x.dot(&(&lm.m1 * &x)) - q1.re).abs() < 1e-12 * q1.norm().max(1.0));
            assert!((x.dot(&(&lm.m1_imag * &x)) - q1.im).abs() < 1e-12 * q1.norm().max(1.0));
            let phi = doppler_spread(&c, &cm);
            assert!((phi_tilde(&x, &lm) - phi).abs() < 1e-10 * phi);
        }
        let e1 = DVector::from_fn(12, |i, _| (i == 0) as u8 as f64);
        assert!(phi_tilde(&e1, &lm).abs() < 1e-20);
    }

    #[test]
    fn real_matrix_lifts_block_diagonal() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new((i + j) as f64, 0.0));
        let b = real_block(&m);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b[(i, j)], b[(i + 3, j + 3)]);
                assert_eq!(b[(i, j + 3)], 0.0);
            }
        }
    }

    #[test]
    fn zero_snr_detection_is_pfa() {
        let cm = build_code_matrices(&node(), 0.0, 0.2).unwrap();
        let lm = lift_matrices(&cm).unwrap();
        let x = DVector::from_fn(12, |i, _| (i == 2) as u8 as f64);
        let d = pd_value_gradient_hessian(&x, &lm, 0.0, -(1e-6f64).ln()).unwrap();
        assert!((d.value - 1e-6).abs() < 1e-18);
        assert_eq!(d.gradient.norm(), 0.0);
        assert_eq!(d.hessian.norm(), 0.0);
    }

    #[test]
    fn taylor_exact_at_expansion_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = node();
        let cm = build_code_matrices(&n, 2000.0, -0.3).unwrap();
        let nl = NodeLift::new(&cm, n.wavelength, n.pfa).unwrap();
        let c0 = lift(&random_code(&mut rng, 6));
        let tm = nl.taylor_model(&c0, DEFAULT_FLOOR).unwrap();
        let exact = nl.exact_noise(c0.as_vector()).unwrap();
        let approx = tm.evaluate(c0.as_vector());
        for l in 0..3 {
            assert!((exact[l] - approx[l]).abs() <= 1e-9 * exact[l], "term {l}");
        }
        let k = 4.0 * nl.eps_tau / (SPEED_OF_LIGHT * SPEED_OF_LIGHT * nl.eps_theta);
        let r = tm.terms[2].quad.matrix() - tm.terms[0].quad.matrix() * k;
        assert!(r.norm() <= 1e-12 * tm.terms[2].quad.matrix().norm());
    }

    #[test]
    fn phi_gradient_vanishes_at_origin() {
        let cm = build_code_matrices(&node(), 100.0, 0.2).unwrap();
        let lm = lift_matrices(&cm).unwrap();
        let (g, _) = phi_gradient_hessian(&DVector::zeros(12), &lm);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn model_is_quadratic_along_lines() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = node();
        let cm = build_code_matrices(&n, 700.0, 0.1).unwrap();
        let nl = NodeLift::new(&cm, n.wavelength, n.pfa).unwrap();
        let c0 = lift(&random_code(&mut rng, 6));
        let tm = nl.taylor_model(&c0, DEFAULT_FLOOR).unwrap();
        let v = DVector::from_fn(12, |_, _| rng.gen_range(-1.0..1.0));
        let at = |t: f64| tm.evaluate(&(c0.as_vector() + &v * t));
        for l in 0..3 {
            let (f0, f1, fm) = (at(0.0)[l], at(1.0)[l], at(-1.0)[l]);
            // Interpolating parabola through t = -1, 0, 1 evaluated at t = 2.
            let predicted = f0 + 2.0 * (f1 - fm) / 2.0 + 4.0 * (f1 + fm - 2.0 * f0) / 2.0;
            let actual = at(2.0)[l];
            assert!(
                (predicted - actual).abs() <= 1e-8 * actual.abs().max(f0.abs()),
                "term {l}"
            );
        }
    }
}
