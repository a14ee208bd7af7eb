//! Minimize a linear function over the unit ball intersected with a few
//! halfspaces, then lift the minimizer back onto the unit sphere.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math::orthogonal_complement;

/// `{x : normalᵀx >= bound}`.
#[derive(Debug, Clone)]
pub struct Halfspace {
    pub normal: DVector<f64>,
    pub bound: f64,
}

impl Halfspace {
    pub fn slack(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x) - self.bound
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    /// Unit-norm point with the same objective as the relaxed optimum.
    pub code: DVector<f64>,
    /// Minimizer over the ball.
    pub relaxed: DVector<f64>,
    pub objective: f64,
    /// Indices of the halfspaces active at the relaxed minimizer.
    pub active: Vec<usize>,
}

/// Minimum-norm point of `{x : a_iᵀx = b_i, i ∈ set}` and the projector
/// residual of `g` onto the orthogonal complement of the normals.
fn affine_candidate(
    g: &DVector<f64>,
    constraints: &[Halfspace],
    set: &[usize],
) -> Option<(DVector<f64>, DVector<f64>)> {
    let n = g.len();
    if set.is_empty() {
        return Some((DVector::zeros(n), g.clone()));
    }
    let k = set.len();
    let a = DMatrix::from_fn(n, k, |i, j| constraints[set[j]].normal[i]);
    let gram = a.transpose() * &a;
    // Cholesky with a relative pivot guard: near-parallel normals make the
    // affine set ill-posed and are skipped.
    let mut l = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        let mut d = gram[(j, j)];
        for m in 0..j {
            d -= l[(j, m)] * l[(j, m)];
        }
        if !(d > 1e-12 * gram[(j, j)]) {
            return None;
        }
        l[(j, j)] = d.sqrt();
        for i in j + 1..k {
            let mut s = gram[(i, j)];
            for m in 0..j {
                s -= l[(i, m)] * l[(j, m)];
            }
            l[(i, j)] = s / l[(j, j)];
        }
    }
    let solve = |rhs: &DVector<f64>| -> DVector<f64> {
        let mut y = rhs.clone();
        for i in 0..k {
            for m in 0..i {
                y[i] -= l[(i, m)] * y[m];
            }
            y[i] /= l[(i, i)];
        }
        for i in (0..k).rev() {
            for m in i + 1..k {
                y[i] -= l[(m, i)] * y[m];
            }
            y[i] /= l[(i, i)];
        }
        y
    };
    let bounds = DVector::from_fn(k, |j, _| constraints[set[j]].bound);
    let point = &a * solve(&bounds);
    let residual = g - &a * solve(&(a.transpose() * g));
    Some((point, residual))
}

/// Exact minimizer of `gᵀx` over `‖x‖ <= 1` and the halfspaces, by
/// enumerating active sets. Returns `None` when the set is empty.
pub fn minimize_over_ball(
    g: &DVector<f64>,
    constraints: &[Halfspace],
    tol: f64,
) -> Option<(DVector<f64>, Vec<usize>)> {
    let m = constraints.len();
    let gnorm = g.norm();
    let mut best: Option<(f64, DVector<f64>, Vec<usize>)> = None;
    for mask in 0u32..(1 << m) {
        let set: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let Some((point, residual)) = affine_candidate(g, constraints, &set) else {
            continue;
        };
        let norm2 = point.norm_squared();
        if norm2 > 1.0 + tol {
            continue;
        }
        let radius = (1.0 - norm2).max(0.0).sqrt();
        let rnorm = residual.norm();
        let x = if rnorm > 1e-13 * gnorm.max(1e-300) {
            &point - residual * (radius / rnorm)
        } else {
            point
        };
        let feasible = constraints
            .iter()
            .all(|h| h.slack(&x) >= -tol * h.normal.norm().max(1.0));
        if !feasible {
            continue;
        }
        let obj = g.dot(&x);
        if best.as_ref().map_or(true, |(b, _, _)| obj < *b) {
            best = Some((obj, x, set));
        }
    }
    best.map(|(_, x, set)| (x, set))
}

/// Solves the linear subproblem and returns a unit-norm point achieving the
/// relaxed optimum. Needs `g.len() > constraints.len() + 1` free directions.
pub fn solve_subproblem(
    g: &DVector<f64>,
    constraints: &[Halfspace],
    tol: f64,
) -> Result<SubproblemSolution> {
    let (relaxed, active) = minimize_over_ball(g, constraints, tol).ok_or_else(|| {
        Error::Infeasible("no point of the ball satisfies every halfspace".into())
    })?;
    let objective = g.dot(&relaxed);
    let norm2 = relaxed.norm_squared();
    let code = if norm2 < 1.0 - 1e-15 {
        let mut span: Vec<&DVector<f64>> = vec![&relaxed];
        span.extend(constraints.iter().map(|h| &h.normal));
        let q = orthogonal_complement(&span, g.len());
        if q.ncols() == 0 {
            return Err(Error::Infeasible(
                "no direction orthogonal to the iterate and constraint normals".into(),
            ));
        }
        let u = q.column(0).into_owned();
        let sign = if g.dot(&u) > 0.0 { -1.0 } else { 1.0 };
        &relaxed + u * (sign * (1.0 - norm2).sqrt())
    } else {
        relaxed.clone()
    };
    Ok(SubproblemSolution {
        code,
        relaxed,
        objective,
        active,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_is_negative_gradient() {
        let g = DVector::from_vec(vec![3.0, -4.0, 0.0, 0.0, 0.0, 0.0]);
        let s = solve_subproblem(&g, &[], 1e-12).unwrap();
        let expect = -&g / 5.0;
        assert!((s.code - expect).norm() < 1e-15);
        assert!((s.objective + 5.0).abs() < 1e-14);
    }

    #[test]
    fn interior_relaxation_is_lifted_to_sphere() {
        // g parallel to the constraint normal: optimum lies on a face, strictly
        // inside the ball.
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let g = a.clone();
        let h = Halfspace {
            normal: a.clone(),
            bound: 0.3,
        };
        let s = solve_subproblem(&g, &[h.clone()], 1e-12).unwrap();
        assert!((s.objective - 0.3).abs() < 1e-14);
        assert!((s.code.norm() - 1.0).abs() < 1e-14);
        assert!((g.dot(&s.code) - 0.3).abs() < 1e-14);
        assert!(h.slack(&s.code) >= -1e-14);
    }

    #[test]
    fn similarity_of_one_pins_reference() {
        let c0 = DVector::from_vec(vec![0.6, 0.0, 0.8, 0.0, 0.0, 0.0]);
        let g = DVector::from_vec(vec![1.0, 2.0, -1.0, 0.5, 0.0, 3.0]);
        let s = solve_subproblem(
            &g,
            &[Halfspace {
                normal: c0.clone(),
                bound: 1.0,
            }],
            1e-12,
        )
        .unwrap();
        assert!((s.code - c0).norm() < 1e-7);
    }

    #[test]
    fn empty_feasible_set_errors() {
        let a = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let g = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        let r = solve_subproblem(
            &g,
            &[Halfspace {
                normal: a,
                bound: 2.0,
            }],
            1e-12,
        );
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }
}
