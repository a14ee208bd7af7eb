//! Small dense symmetric kernels: cyclic Jacobi eigen-decomposition and a
//! Cholesky factor that reports the failing pivot.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated (and averaged away) on construction.
pub const SYMMETRY_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 64;

/// Real symmetric matrix. Construction averages the two triangles, so
/// `m[(i, j)] == m[(j, i)]` holds exactly afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Wraps `m`, failing when it is not square or its relative asymmetry
    /// exceeds [`SYMMETRY_TOL`].
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let asym = relative_asymmetry(&m);
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidArgument(format!(
                "matrix asymmetry {asym:.3e} exceeds {SYMMETRY_TOL:.0e}"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Averages `m` with its transpose without checking.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let s = (&m + m.transpose()) * 0.5;
        Self(s)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `xᵀ M x`.
    pub fn quadratic_form(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * x))
    }

    pub fn eigen(&self) -> Result<SymmetricEigen> {
        jacobi_eigen(&self.0)
    }

    /// `(λmin, λmax)`.
    pub fn extremal_eigenvalues(&self) -> Result<(f64, f64)> {
        let e = self.eigen()?;
        Ok((e.values[e.values.len() - 1], e.values[0]))
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::new(&self.0)
    }
}

/// `max |m - mᵀ| / max(1, max |m|)`.
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut asym: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for i in 0..n {
        for j in 0..n {
            asym = asym.max((m[(i, j)] - m[(j, i)]).abs());
            scale = scale.max(m[(i, j)].abs());
        }
    }
    asym / scale
}

/// Eigenpairs sorted by descending eigenvalue; `vectors` holds them as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Cyclic Jacobi rotations until the off-diagonal mass is at rounding level.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Shape(
            "eigen-decomposition needs a square matrix".into(),
        ));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let frob = a.norm();
    let mut converged = n < 2 || frob == 0.0;
    let mut sweep = 0;
    while !converged {
        if sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
        }
        sweep += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
        }
        converged = off.sqrt() <= 1e-15 * frob;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Lower-triangular Cholesky factor `m = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factors `m`, reporting the first non-positive pivot.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::Shape("Cholesky needs a square matrix".into()));
        }
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = 0.5 * (m[(i, j)] + m[(j, i)]);
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solves `m x = b` for each column of `b`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.l.nrows();
        let mut x = b.clone();
        for col in 0..x.ncols() {
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= self.l[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / self.l[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = x[(i, col)];
                for k in i + 1..n {
                    s -= self.l[(k, i)] * x[(k, col)];
                }
                x[(i, col)] = s / self.l[(i, i)];
            }
        }
        x
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let x = self.solve(&DMatrix::from_column_slice(b.len(), 1, b.as_slice()));
        DVector::from_column_slice(x.as_slice())
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.l.nrows();
        let inv = self.solve(&DMatrix::identity(n, n));
        (&inv + inv.transpose()) * 0.5
    }

    /// `tr(m⁻¹) = ‖L⁻¹‖²_F`.
    pub fn trace_inverse(&self) -> f64 {
        let n = self.l.nrows();
        let mut total = 0.0;
        // Column j of L⁻¹ by forward substitution on e_j.
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            for i in j..n {
                let mut s = if i == j { 1.0 } else { 0.0 };
                for k in j..i {
                    s -= self.l[(i, k)] * col[k];
                }
                col[i] = s / self.l[(i, i)];
                total += col[i] * col[i];
            }
        }
        total
    }
}

/// Factors `m` and returns the factor with `tr(m⁻¹)`.
pub fn spd_solve_and_trace_inverse(m: &DMatrix<f64>) -> Result<(Cholesky, f64)> {
    let chol = Cholesky::new(m)?;
    let tr = chol.trace_inverse();
    Ok((chol, tr))
}

/// `(λmin, λmax)` of a symmetric matrix.
pub fn min_max_eigenvalues(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let e = jacobi_eigen(m)?;
    Ok((e.values[e.values.len() - 1], e.values[0]))
}

/// Orthonormal basis (as columns) of the orthogonal complement of `span`.
/// Vectors in `span` need not be independent.
pub fn orthogonal_complement(span: &[&DVector<f64>], dim: usize) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let push = |basis: &mut Vec<DVector<f64>>, v: &DVector<f64>| -> bool {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in basis.iter() {
                let proj = b.dot(&w);
                w.axpy(-proj, b, 1.0);
            }
        }
        let n = w.norm();
        if n > 1e-10 * v.norm().max(1e-300) && n > 1e-300 {
            basis.push(w / n);
            true
        } else {
            false
        }
    };
    for v in span {
        push(&mut basis, v);
    }
    let taken = basis.len();
    for i in 0..dim {
        if basis.len() == dim {
            break;
        }
        let e = DVector::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 });
        push(&mut basis, &e);
    }
    DMatrix::from_columns(&basis[taken..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diag_trace_inverse() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 4.0]));
        let (_, tr) = spd_solve_and_trace_inverse(&m).unwrap();
        assert_abs_diff_eq!(tr, 0.75, epsilon = 1e-15);
        let (_, tr) = spd_solve_and_trace_inverse(&DMatrix::identity(4, 4)).unwrap();
        assert_abs_diff_eq!(tr, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn indefinite_names_pivot() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 2.0, 1.0]);
        match spd_solve_and_trace_inverse(&m) {
            Err(Error::NotPositiveDefinite { pivot }) => assert_eq!(pivot, 2),
            other => panic!("expected definiteness error, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_on_known_spectrum() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (lo, hi) = min_max_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_asymmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(SymmetricMatrix::new(m).is_err());
        let m = DMatrix::from_row_slice(2, 3, &[1.0; 6]);
        assert!(matches!(SymmetricMatrix::new(m), Err(Error::Shape(_))));
    }

    #[test]
    fn complement_is_orthonormal() {
        let a = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, 2.0, 0.0, 0.0, 0.0]);
        let c = DVector::from_vec(vec![0.0, 1.0, 1.0, 0.0, 0.0]);
        let q = orthogonal_complement(&[&a, &b, &c], 5);
        assert_eq!(q.ncols(), 3);
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-14);
        assert!((q.transpose() * &a).norm() < 1e-14);
        assert!((q.transpose() * &c).norm() < 1e-14);
    }
}
