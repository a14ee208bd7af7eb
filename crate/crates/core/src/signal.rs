//! Per-node signal model: steering vectors, interference covariance, the
//! code-independent matrices, and SINR / detection / CRLB as functions of the
//! slow-time code.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{detection_probability as pd_of_sinr, Cholesky, ComplexMatrix};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Unit-energy tolerance on codes.
pub const UNIT_ENERGY_TOL: f64 = 1e-12;

/// Static description of one radar node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarNodeModel {
    /// Position in the plane, meters.
    pub position: [f64; 2],
    pub wavelength: f64,
    pub element_spacing: f64,
    pub elements: usize,
    pub pulses: usize,
    /// Pulse repetition interval, seconds.
    pub pri: f64,
    pub bandwidth: f64,
    pub pulse_samples: usize,
    pub pulsewidth: f64,
    pub rho_temporal: f64,
    pub rho_spatial: f64,
    /// Target reflection power `|α|²`.
    pub target_power: f64,
    pub pfa: f64,
}

impl RadarNodeModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("node {what}")));
        if !self.position.iter().all(|p| p.is_finite()) {
            return bad("position must be finite");
        }
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("element spacing", self.element_spacing),
            ("PRI", self.pri),
            ("bandwidth", self.bandwidth),
            ("pulsewidth", self.pulsewidth),
            ("target power", self.target_power),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive, got {v}"));
            }
        }
        if self.pulses < 3 {
            return bad("needs at least 3 pulses");
        }
        if self.elements == 0 || self.pulse_samples == 0 {
            return bad("element and sample counts must be positive");
        }
        if !(self.rho_temporal.abs() < 1.0 && self.rho_spatial.abs() < 1.0) {
            return bad("correlation coefficients must lie in (-1, 1)");
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return bad("false-alarm probability must lie in (0, 1)");
        }
        let sampled = self.pulse_samples as f64 / (2.0 * self.bandwidth);
        if (sampled - self.pulsewidth).abs() > 1e-9 * self.pulsewidth {
            return bad(&format!(
                "pulse samples times 1/(2B) is {sampled:e} s, pulsewidth is {:e} s",
                self.pulsewidth
            ));
        }
        Ok(())
    }

    /// Detector threshold exponent `-ln pfa`.
    pub fn threshold_exponent(&self) -> f64 {
        -self.pfa.ln()
    }
}

/// Unit-energy complex slow-time code.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowTimeCode(DVector<Complex64>);

impl SlowTimeCode {
    pub fn new(entries: DVector<Complex64>) -> Result<Self> {
        let e = entries.norm_squared();
        if (e - 1.0).abs() > UNIT_ENERGY_TOL {
            return Err(Error::InvalidArgument(format!(
                "code energy is {e}, expected 1"
            )));
        }
        Ok(Self(entries))
    }

    /// Scales `entries` to unit energy.
    pub fn normalized(entries: DVector<Complex64>) -> Result<Self> {
        let n = entries.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero code".into(),
            ));
        }
        Ok(Self(entries.map(|z| z / n)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &DVector<Complex64> {
        &self.0
    }
}

/// `exp(j 2π f_d m T_r)`, `m = 0..M-1`.
pub fn temporal_steering(doppler: f64, pri: f64, pulses: usize) -> DVector<Complex64> {
    DVector::from_fn(pulses, |m, _| {
        Complex64::from_polar(1.0, 2.0 * PI * doppler * m as f64 * pri)
    })
}

/// `exp(j 2π m d sinθ / λ)`, `m = 0..N_r-1`.
pub fn spatial_steering(
    angle: f64,
    spacing: f64,
    wavelength: f64,
    elements: usize,
) -> DVector<Complex64> {
    let step = 2.0 * PI * spacing * angle.sin() / wavelength;
    DVector::from_fn(elements, |m, _| Complex64::from_polar(1.0, step * m as f64))
}

/// `Σ(i, j) = ρ^|i-j|`.
pub fn exp_correlation_matrix(rho: f64, n: usize) -> Result<DMatrix<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "correlation coefficient must satisfy |rho| < 1, got {rho}"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        rho.powi((i as i32 - j as i32).abs())
    }))
}

/// `xᴴ A y` for real `A`.
fn real_sesquilinear(
    x: &DVector<Complex64>,
    a: &DMatrix<f64>,
    y: &DVector<Complex64>,
) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..x.len() {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..y.len() {
            row += y[j] * a[(i, j)];
        }
        acc += x[i].conj() * row;
    }
    acc
}

/// `xᴴ A y`.
pub fn sesquilinear(
    x: &DVector<Complex64>,
    a: &ComplexMatrix,
    y: &DVector<Complex64>,
) -> Complex64 {
    x.conjugate().dot(&(a * y))
}

/// Code-independent matrices and SNR constants for one node and frame.
#[derive(Debug, Clone)]
pub struct CodeMatrices {
    pub m0: ComplexMatrix,
    pub m1: ComplexMatrix,
    pub m2: ComplexMatrix,
    pub eps_alpha: f64,
    pub eps_tau: f64,
    pub eps_f: f64,
    pub eps_theta: f64,
}

/// Slow-time index weights `j 2π T_r m`.
pub fn doppler_weights(pri: f64, pulses: usize) -> DVector<Complex64> {
    DVector::from_fn(pulses, |m, _| {
        Complex64::new(0.0, 2.0 * PI * pri * m as f64)
    })
}

pub fn build_code_matrices(
    node: &RadarNodeModel,
    doppler: f64,
    angle: f64,
) -> Result<CodeMatrices> {
    node.validate()?;
    if !(angle.abs() < PI / 2.0) {
        return Err(Error::Geometry(format!(
            "look angle {angle} rad is not inside (-pi/2, pi/2)"
        )));
    }
    let m = node.pulses;
    let sigma_t_inv = Cholesky::new(&exp_correlation_matrix(node.rho_temporal, m)?)?.inverse();
    let sigma_s_inv =
        Cholesky::new(&exp_correlation_matrix(node.rho_spatial, node.elements)?)?.inverse();

    let at = temporal_steering(doppler, node.pri, m);
    let m0 = ComplexMatrix::from_fn(m, m, |i, j| at[i] * at[j].conj() * sigma_t_inv[(i, j)]);
    let bt = doppler_weights(node.pri, m);
    let m1 = ComplexMatrix::from_fn(m, m, |i, j| bt[i].conj() * m0[(i, j)]);
    let m2 = ComplexMatrix::from_fn(m, m, |i, j| m0[(i, j)] * bt[i] * bt[j].conj());

    let as_ = spatial_steering(angle, node.element_spacing, node.wavelength, node.elements);
    let gain = real_sesquilinear(&as_, &sigma_s_inv, &as_).re;
    let np = node.pulse_samples as f64;
    let power = node.target_power;
    let eps_alpha = np * power * gain;
    let eps_tau = 2.0 * np * power * PI * PI * node.bandwidth * node.bandwidth / 3.0 * gain;
    let eps_f = 2.0 * np * power * gain;

    // Angle information: the part of the derivative steering vector not
    // explained by the steering vector itself, in the Σ_s⁻¹ metric.
    let phase_rate = 2.0 * PI * node.element_spacing * angle.cos() / node.wavelength;
    let deriv = DVector::from_fn(node.elements, |i, _| {
        as_[i] * Complex64::new(0.0, phase_rate * i as f64)
    });
    let dd = real_sesquilinear(&deriv, &sigma_s_inv, &deriv).re;
    let da = real_sesquilinear(&deriv, &sigma_s_inv, &as_);
    let eps_theta = 2.0 * np * power * (dd - da.norm_sqr() / gain);

    for (name, v) in [
        ("eps_alpha", eps_alpha),
        ("eps_tau", eps_tau),
        ("eps_f", eps_f),
        ("eps_theta", eps_theta),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Geometry(format!("{name} = {v} is not positive")));
        }
    }
    Ok(CodeMatrices {
        m0,
        m1,
        m2,
        eps_alpha,
        eps_tau,
        eps_f,
        eps_theta,
    })
}

/// Aperiodic autocorrelation `r[k] = Σ_m c[m+k] c̄[m]` for lags `0..M-1`.
pub fn autocorrelation(c: &SlowTimeCode) -> Vec<Complex64> {
    let e = c.entries();
    let m = e.len();
    (0..m)
        .map(|k| (0..m - k).map(|i| e[i + k] * e[i].conj()).sum())
        .collect()
}

/// Largest sidelobe magnitude over the mainlobe, `max_{k>0} |r[k]| / |r[0]|`.
pub fn peak_sidelobe_ratio(c: &SlowTimeCode) -> f64 {
    let r = autocorrelation(c);
    let peak = r[0].norm();
    r[1..].iter().map(|v| v.norm()).fold(0.0, f64::max) / peak
}

/// Weighted signal energy `cᴴ M₀ c`.
pub fn signal_energy(c: &SlowTimeCode, cm: &CodeMatrices) -> f64 {
    sesquilinear(c.entries(), &cm.m0, c.entries()).re
}

pub fn sinr(c: &SlowTimeCode, cm: &CodeMatrices) -> f64 {
    cm.eps_alpha * signal_energy(c, cm)
}

pub fn detection_probability(sinr: f64, pfa: f64) -> Result<f64> {
    pd_of_sinr(sinr, pfa)
}

/// `(cᴴM₀c)(cᴴM₂c) - |cᴴM₁c|²`.
pub fn doppler_spread(c: &SlowTimeCode, cm: &CodeMatrices) -> f64 {
    let e = c.entries();
    let q0 = sesquilinear(e, &cm.m0, e).re;
    let q2 = sesquilinear(e, &cm.m2, e).re;
    let q1 = sesquilinear(e, &cm.m1, e);
    q0 * q2 - q1.norm_sqr()
}

/// Delay (s²), Doppler (Hz²) and angle (rad²) CRLB diagonal.
pub fn crlb_diagonal(c: &SlowTimeCode, cm: &CodeMatrices) -> Result<[f64; 3]> {
    let e = c.entries();
    if e.len() != cm.m0.nrows() {
        return Err(Error::Shape(format!(
            "code has {} entries, model has {} pulses",
            e.len(),
            cm.m0.nrows()
        )));
    }
    let q0 = sesquilinear(e, &cm.m0, e).re;
    let q2 = sesquilinear(e, &cm.m2, e).re;
    let phi = doppler_spread(c, cm);
    if phi <= 1e-14 * q0 * q2 || !(q0 > 0.0) {
        return Err(Error::DegenerateCode(format!(
            "Doppler spread {phi:e} is not resolvable"
        )));
    }
    Ok([
        1.0 / (cm.eps_tau * q0),
        q0 / (cm.eps_f * phi),
        1.0 / (cm.eps_theta * q0),
    ])
}

/// Range (m²), range-rate ((m/s)²) and angle (rad²) measurement variances.
pub fn measurement_covariance(
    c: &SlowTimeCode,
    cm: &CodeMatrices,
    wavelength: f64,
) -> Result<[f64; 3]> {
    let crlb = crlb_diagonal(c, cm)?;
    let t = [SPEED_OF_LIGHT / 2.0, wavelength / 2.0, 1.0];
    Ok([crlb[0] * t[0] * t[0], crlb[1] * t[1] * t[1], crlb[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn white_node() -> RadarNodeModel {
        RadarNodeModel {
            position: [0.0, 0.0],
            wavelength: 0.03,
            element_spacing: 0.015,
            elements: 8,
            pulses: 8,
            pri: 250e-6,
            bandwidth: 5e6,
            pulse_samples: 100,
            pulsewidth: 10e-6,
            rho_temporal: 0.0,
            rho_spatial: 0.0,
            target_power: 0.1,
            pfa: 1e-6,
        }
    }

    #[test]
    fn steering_edge_cases() {
        let a = temporal_steering(0.0, 1e-3, 8);
        assert!(a
            .iter()
            .all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        let a = temporal_steering(1.0 / (4.0 * 1e-3), 1e-3, 4);
        assert!((a[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((a[2] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let s = spatial_steering(PI / 6.0, 0.5, 1.0, 8);
        for m in 0..8 {
            let expect = Complex64::from_polar(1.0, PI * m as f64 / 2.0);
            assert!((s[m] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn correlation_matrix() {
        let s = exp_correlation_matrix(0.8, 2).unwrap();
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[1.0, 0.8, 0.8, 1.0]));
        assert_eq!(
            exp_correlation_matrix(0.0, 5).unwrap(),
            DMatrix::identity(5, 5)
        );
        assert!(exp_correlation_matrix(1.0, 3).is_err());
    }

    #[test]
    fn kms_inverse_is_tridiagonal() {
        let rho: f64 = 0.8;
        let n = 8;
        let inv = Cholesky::new(&exp_correlation_matrix(rho, n).unwrap())
            .unwrap()
            .inverse();
        let s = 1.0 / (1.0 - rho * rho);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j {
                    if i == 0 || i == n - 1 {
                        s
                    } else {
                        s * (1.0 + rho * rho)
                    }
                } else if i.abs_diff(j) == 1 {
                    -rho * s
                } else {
                    0.0
                };
                assert!((inv[(i, j)] - expect).abs() < 1e-12, "({i},{j})");
            }
        }
    }

    #[test]
    fn white_zero_doppler_is_identity() {
        let cm = build_code_matrices(&white_node(), 0.0, 0.3).unwrap();
        assert!((cm.m0.clone() - ComplexMatrix::identity(8, 8)).norm() < 1e-14);
        assert_relative_eq!(cm.eps_alpha, 100.0 * 0.1 * 8.0, max_relative = 1e-14);
    }

    #[test]
    fn white_angle_constant() {
        let node = white_node();
        let angle = 0.3_f64;
        let cm = build_code_matrices(&node, 0.0, angle).unwrap();
        let k = 2.0 * PI * node.element_spacing * angle.cos() / node.wavelength;
        let (s1, s2): (f64, f64) =
            (0..8).fold((0.0, 0.0), |(a, b), m| (a + m as f64, b + (m * m) as f64));
        let expect = 0.1 * 2.0 * 100.0 * k * k * (s2 - s1 * s1 / 8.0);
        assert_relative_eq!(cm.eps_theta, expect, max_relative = 1e-12);
    }

    #[test]
    fn uniform_code_doppler_bound() {
        let node = white_node();
        let cm = build_code_matrices(&node, 0.0, 0.1).unwrap();
        let c =
            SlowTimeCode::normalized(DVector::from_element(8, Complex64::new(1.0, 0.0))).unwrap();
        let crlb = crlb_diagonal(&c, &cm).unwrap();
        let mean = 3.5;
        let var = (0..8).map(|m| (m as f64 - mean).powi(2)).sum::<f64>() / 8.0;
        let w = 2.0 * PI * node.pri;
        assert_relative_eq!(
            crlb[1],
            1.0 / (cm.eps_f * w * w * var),
            max_relative = 1e-10
        );
        assert_relative_eq!(crlb[0], 1.0 / cm.eps_tau, max_relative = 1e-12);
        assert_relative_eq!(
            crlb[2] / crlb[0],
            cm.eps_tau / cm.eps_theta,
            max_relative = 1e-12
        );
    }

    #[test]
    fn covariance_scaling() {
        let node = white_node();
        let cm = build_code_matrices(&node, 1234.0, 0.2).unwrap();
        let c = SlowTimeCode::normalized(DVector::from_fn(8, |m, _| {
            Complex64::from_polar(1.0, 0.3 * (m * m) as f64)
        }))
        .unwrap();
        let crlb = crlb_diagonal(&c, &cm).unwrap();
        let r = measurement_covariance(&c, &cm, node.wavelength).unwrap();
        assert_relative_eq!(
            r[0],
            crlb[0] * SPEED_OF_LIGHT * SPEED_OF_LIGHT / 4.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            r[1],
            crlb[1] * node.wavelength * node.wavelength / 4.0,
            max_relative = 1e-15
        );
        assert_eq!(r[2], crlb[2]);
    }

    #[test]
    fn single_pulse_code_is_degenerate() {
        let node = white_node();
        let cm = build_code_matrices(&node, 0.0, 0.1).unwrap();
        let c = SlowTimeCode::new(DVector::from_fn(8, |m, _| {
            Complex64::new(if m == 3 { 1.0 } else { 0.0 }, 0.0)
        }))
        .unwrap();
        assert!(matches!(
            crlb_diagonal(&c, &cm),
            Err(Error::DegenerateCode(_))
        ));
    }

    #[test]
    fn rejects_inconsistent_pulsewidth() {
        let mut node = white_node();
        node.pulsewidth = 11e-6;
        assert!(node.validate().is_err());
        node = white_node();
        node.pulses = 2;
        assert!(node.validate().is_err());
    }
}
