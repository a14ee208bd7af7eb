//! Central finite differences with a Richardson step-halving estimate.

use nalgebra::{DMatrix, DVector};

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn fd_gradient(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Central-difference Jacobian of a vector map (columns are input directions).
pub fn fd_jacobian(
    f: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = (0..x.len())
        .map(|i| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
        .collect();
    DMatrix::from_columns(&cols)
}

/// Comparison of an analytic derivative with finite differences at steps
/// `h` and `h/2`.
#[derive(Debug, Clone, Copy)]
pub struct FdComparison {
    /// Relative error against the step-`h` estimate.
    pub coarse: f64,
    /// Relative error against the step-`h/2` estimate.
    pub fine: f64,
    /// Relative error against the Richardson extrapolation `(4D(h/2) - D(h))/3`.
    pub extrapolated: f64,
}

impl FdComparison {
    /// Passes when the extrapolated error is within `tol` and halving the
    /// step did not make the raw estimate worse (unless it is already within `tol`).
    pub fn passes(&self, tol: f64) -> bool {
        self.extrapolated <= tol && (self.fine <= tol || self.fine < self.coarse)
    }
}

/// Compares flattened analytic values against `estimate(h)` and `estimate(h/2)`.
pub fn compare(analytic: &[f64], estimate: &dyn Fn(f64) -> Vec<f64>, h: f64) -> FdComparison {
    let d1 = estimate(h);
    let d2 = estimate(h / 2.0);
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|t| t * t).sum::<f64>().sqrt();
    let scale = norm(&mut analytic.iter().copied()).max(1e-300);
    let err = |d: &[f64]| norm(&mut analytic.iter().zip(d).map(|(a, b)| a - b)) / scale;
    let rich: Vec<f64> = d1
        .iter()
        .zip(&d2)
        .map(|(a, b)| (4.0 * b - a) / 3.0)
        .collect();
    FdComparison {
        coarse: err(&d1),
        fine: err(&d2),
        extrapolated: err(&rich),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_gradient() {
        let f = |x: &DVector<f64>| x[0].powi(3) + x[0] * x[1];
        let x = DVector::from_vec(vec![1.2, -0.7]);
        let analytic = [3.0 * 1.44 - 0.7, 1.2];
        let c = compare(
            &analytic,
            &|h| fd_gradient(&f, &x, h).as_slice().to_vec(),
            1e-3,
        );
        assert!(c.passes(1e-8), "{c:?}");
    }
}
