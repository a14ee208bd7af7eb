//! SINR-only benchmark: maximize `c̃ᵀM̃₀c̃` over unit codes with
//! `c̃₀ᵀc̃ >= ζ₁`.
//!
//! If some top eigenvector satisfies the similarity bound it is optimal.
//! Otherwise the bound is active and the problem reduces to maximizing a
//! quadratic plus a linear term on the unit sphere of the complement of `c̃₀`,
//! which is solved through its secular equation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lift::{lift, unlift, LiftedCode};
use crate::math::{jacobi_eigen, orthogonal_complement, SymmetricMatrix};
use crate::signal::{CodeMatrices, SlowTimeCode};

/// Relative width of the top eigenvalue cluster.
const CLUSTER_TOL: f64 = 1e-10;

pub fn sinr_benchmark_code(
    cm: &CodeMatrices,
    reference: &SlowTimeCode,
    zeta: f64,
) -> Result<SlowTimeCode> {
    let lm = crate::lift::lift_matrices(cm)?;
    let c = benchmark_lifted(&lm.m0, &lift(reference), zeta)?;
    Ok(unlift(&c))
}

pub fn benchmark_lifted(
    m0: &SymmetricMatrix,
    reference: &LiftedCode,
    zeta: f64,
) -> Result<LiftedCode> {
    if !(0.0..=2.0).contains(&zeta) {
        return Err(Error::InvalidArgument(format!(
            "zeta must lie in [0, 2], got {zeta}"
        )));
    }
    let bound = 1.0 - zeta / 2.0;
    let c0 = reference.as_vector();
    let n = c0.len();
    if bound >= 1.0 {
        return Ok(reference.clone());
    }

    let eig = m0.eigen()?;
    let top = eig.values[0];
    let scale = top.abs().max(eig.values[n - 1].abs()).max(1e-300);
    let cluster: Vec<usize> = (0..n)
        .filter(|&i| top - eig.values[i] <= CLUSTER_TOL * scale)
        .collect();
    let mut proj = DVector::<f64>::zeros(n);
    for &i in &cluster {
        let v = eig.vectors.column(i);
        proj += v * v.dot(c0);
    }
    let pn = proj.norm();
    if pn >= bound && pn > 0.0 {
        return LiftedCode::new(proj / pn);
    }

    // Active similarity: c̃ = bound c̃₀ + s Q y with ‖y‖ = 1.
    let s = (1.0 - bound * bound).sqrt();
    let q = orthogonal_complement(&[c0], n);
    let mq = m0.matrix() * &q;
    let a = q.transpose() * &mq * (s * s);
    let b = mq.transpose() * c0 * (bound * s);
    let y = sphere_quadratic_max(&a, &b)?;
    let c = c0 * bound + &q * y * s;
    let e = c.norm();
    LiftedCode::new(c / e)
}

/// Global maximizer of `yᵀAy + 2bᵀy` over `‖y‖ = 1`.
pub fn sphere_quadratic_max(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let eig = jacobi_eigen(a)?;
    let n = b.len();
    let beta = eig.vectors.transpose() * b;
    let lam = &eig.values;
    let top = lam[0];
    let scale = lam
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(b.norm())
        .max(1e-300);
    let top_set: Vec<usize> = (0..n)
        .filter(|&i| top - lam[i] <= CLUSTER_TOL * scale)
        .collect();
    let top_weight = top_set
        .iter()
        .map(|&i| beta[i] * beta[i])
        .sum::<f64>()
        .sqrt();

    let norm_at = |mu: f64| -> f64 {
        (0..n)
            .map(|i| (beta[i] / (mu - lam[i])).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let y_at = |mu: f64| -> DVector<f64> {
        let coeff = DVector::from_fn(n, |i, _| beta[i] / (mu - lam[i]));
        &eig.vectors * coeff
    };

    if top_weight <= 1e-12 * scale {
        // Possible hard case: the linear term misses the top eigenspace.
        let mut coeff = DVector::<f64>::zeros(n);
        for i in 0..n {
            if !top_set.contains(&i) {
                coeff[i] = beta[i] / (top - lam[i]);
            }
        }
        let r = coeff.norm();
        if r <= 1.0 {
            coeff[top_set[0]] = (1.0 - r * r).sqrt();
            return Ok(&eig.vectors * coeff);
        }
    }

    // ‖y(μ)‖ decreases from +∞ to 0 on (top, ∞); bracket the unit crossing.
    let mut lo = top + top_weight.max(1e-300) * 0.5;
    let mut hi = top + b.norm().max(1e-300);
    while norm_at(lo) < 1.0 && lo > top {
        lo = top + (lo - top) * 0.5;
        if lo - top < 1e-300 {
            break;
        }
    }
    while norm_at(hi) > 1.0 {
        hi = top + (hi - top) * 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let y = y_at(0.5 * (lo + hi));
    let yn = y.norm();
    Ok(y / yn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lift::lift_vector;
    use num_complex::Complex64;

    fn diag(values: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(values))).unwrap()
    }

    #[test]
    fn zeta_zero_returns_reference() {
        let c0 = LiftedCode::new(DVector::from_vec(vec![0.6, 0.0, 0.0, 0.8, 0.0, 0.0])).unwrap();
        let out = benchmark_lifted(&diag(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]), &c0, 0.0).unwrap();
        assert_eq!(out, c0);
    }

    #[test]
    fn zeta_two_reaches_top_eigenvalue() {
        let m = diag(&[1.0, 2.0, 5.0, 1.0, 2.0, 5.0]);
        let c0 = LiftedCode::new(DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        let out = benchmark_lifted(&m, &c0, 2.0).unwrap();
        assert!((m.quadratic_form(out.as_vector()) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sphere_maximizer_beats_samples() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, -1.0]);
        let b = DVector::from_vec(vec![0.2, -0.4, 0.7]);
        let y = sphere_quadratic_max(&a, &b).unwrap();
        let f = |v: &DVector<f64>| v.dot(&(&a * v)) + 2.0 * b.dot(v);
        let best = f(&y);
        for i in 0..2000 {
            let t = i as f64 * 0.0137;
            let u = 0.91 * i as f64;
            let v = DVector::from_vec(vec![t.sin() * u.cos(), t.sin() * u.sin(), t.cos()]);
            assert!(f(&v) <= best + 1e-12);
        }
    }

    #[test]
    fn complex_wrapper_keeps_similarity() {
        let cm = crate::signal::build_code_matrices(
            &crate::signal::RadarNodeModel {
                position: [0.0, 0.0],
                wavelength: 0.03,
                element_spacing: 0.015,
                elements: 4,
                pulses: 4,
                pri: 250e-6,
                bandwidth: 5e6,
                pulse_samples: 100,
                pulsewidth: 10e-6,
                rho_temporal: 0.8,
                rho_spatial: 0.5,
                target_power: 0.1,
                pfa: 1e-6,
            },
            900.0,
            0.1,
        )
        .unwrap();
        let c0 =
            SlowTimeCode::normalized(DVector::from_element(4, Complex64::new(1.0, 0.0))).unwrap();
        let c = sinr_benchmark_code(&cm, &c0, 0.1).unwrap();
        let sim = lift_vector(c0.entries()).dot(&lift_vector(c.entries()));
        assert!(sim >= 0.95 - 1e-12);
        assert!(crate::signal::sinr(&c, &cm) >= crate::signal::sinr(&c0, &cm));
    }
}
