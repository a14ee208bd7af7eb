//! Grid-search oracle for `min gᵀx` over the unit sphere intersected with
//! halfspaces.
//!
//! Seeds: each hemisphere `x_n = ±√(1-‖z‖²)` is charted by
//! `z ∈ [-1, 1]^{n-1}` and sampled on a lattice of `COARSE + 1` points per
//! axis (step 0.25); the best `SEEDS` feasible points are kept.
//!
//! Refinement works on the sphere itself: a poll tries `x ± s·d`, renormalized,
//! for `d` running over `BASES` freshly rotated orthonormal bases, so
//! directions become dense and the search can slide along constraint faces.
//! A successful direction is followed with doubling strides until it stops
//! improving. The step `s` halves after `PATIENCE` consecutive failed polls,
//! down to `FINEST`. Every evaluated point lies exactly on the sphere.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::optimizer::Halfspace;

pub const COARSE: usize = 8;
pub const FINEST: f64 = 1e-7;
pub const SEEDS: usize = 40;
pub const BASES: usize = 4;
pub const PATIENCE: usize = 12;

fn point(z: &[f64], sign: f64) -> Option<DVector<f64>> {
    let r2: f64 = z.iter().map(|v| v * v).sum();
    if r2 > 1.0 {
        return None;
    }
    let mut x = DVector::zeros(z.len() + 1);
    for (i, v) in z.iter().enumerate() {
        x[i] = *v;
    }
    x[z.len()] = sign * (1.0 - r2).sqrt();
    Some(x)
}

/// Objective at the projection of `y` onto the sphere, if feasible.
fn feasible_value(
    g: &DVector<f64>,
    constraints: &[Halfspace],
    y: &DVector<f64>,
) -> Option<(f64, DVector<f64>)> {
    let norm = y.norm();
    if !(norm > 0.0) {
        return None;
    }
    let x = y / norm;
    if constraints.iter().all(|h| h.slack(&x) >= 0.0) {
        Some((g.dot(&x), x))
    } else {
        None
    }
}

fn value(g: &DVector<f64>, constraints: &[Halfspace], z: &[f64], sign: f64) -> Option<f64> {
    let x = point(z, sign)?;
    if constraints.iter().all(|h| h.slack(&x) >= 0.0) {
        Some(g.dot(&x))
    } else {
        None
    }
}

/// `±` the columns of a random orthogonal matrix.
fn rotated_basis(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    let m = DMatrix::<f64>::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let q = m.qr().q();
    let mut out = Vec::with_capacity(2 * dim);
    for j in 0..dim {
        let col: Vec<f64> = q.column(j).iter().copied().collect();
        out.push(col.iter().map(|v| -v).collect());
        out.push(col);
    }
    out
}

/// Smallest objective found, or `None` if no lattice point is feasible.
pub fn sphere_grid_min(g: &DVector<f64>, constraints: &[Halfspace]) -> Option<f64> {
    let n = g.len();
    assert!(n >= 2);
    let dim = n - 1;
    let step0 = 2.0 / COARSE as f64;
    let per_axis = COARSE + 1;
    let mut seeds: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    let total = per_axis.pow(dim as u32);
    for sign in [1.0, -1.0] {
        for k in 0..total {
            let mut rem = k;
            let z: Vec<f64> = (0..dim)
                .map(|_| {
                    let i = rem % per_axis;
                    rem /= per_axis;
                    -1.0 + step0 * i as f64
                })
                .collect();
            if let Some(v) = value(g, constraints, &z, sign) {
                seeds.push((v, z, sign));
            }
        }
    }
    if seeds.is_empty() {
        return None;
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    seeds.truncate(SEEDS);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best = f64::INFINITY;
    for (mut v, z, sign) in seeds {
        let mut x = point(&z, sign).expect("seed lies on the sphere");
        let mut step = step0 / 2.0;
        let mut failures = 0;
        while step >= FINEST {
            let mut moved = false;
            for _ in 0..BASES {
                for d in rotated_basis(&mut rng, n) {
                    let d = DVector::from_vec(d);
                    if let Some((w, y)) = feasible_value(g, constraints, &(&x + &d * step)) {
                        if w < v {
                            v = w;
                            x = y;
                            moved = true;
                            // Keep going along a direction that worked, doubling the stride.
                            let mut stride = 2.0 * step;
                            while let Some((w, y)) =
                                feasible_value(g, constraints, &(&x + &d * stride))
                            {
                                if w >= v {
                                    break;
                                }
                                v = w;
                                x = y;
                                stride *= 2.0;
                            }
                        }
                    }
                }
            }
            if moved {
                failures = 0;
            } else {
                failures += 1;
                if failures == PATIENCE {
                    step /= 2.0;
                    failures = 0;
                }
            }
        }
        best = best.min(v);
    }
    Some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_minimum_is_minus_norm() {
        let g = DVector::from_vec(vec![0.3, -0.4, 1.2]);
        let v = sphere_grid_min(&g, &[]).unwrap();
        assert!((v + g.norm()).abs() < 1e-6, "{v}");
    }
}
