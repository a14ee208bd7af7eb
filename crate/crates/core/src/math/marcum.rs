//! Generalized Marcum Q function of integer order.
//!
//! With `x = a²/2` and `y = b²/2`, `Q_v(a, b) = P(J - K <= v - 1)` where
//! `K ~ Poisson(x)` and `J ~ Poisson(y)` are independent. Both pmfs are built
//! outward from their modes, so nothing overflows for arguments up to and
//! beyond 60, and every summand is non-negative.

use crate::error::{Error, Result};

/// Below this mode the pmf is computed by a direct product.
const DIRECT_PMF_LIMIT: usize = 30;

/// Half-width of the retained pmf window, in standard deviations.
const TAIL_SIGMAS: f64 = 15.0;

/// `Q_order(a, b)` for `order >= 1` and finite non-negative `a`, `b`.
pub fn marcum_q(order: u32, a: f64, b: f64) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidArgument("Marcum Q order must be >= 1".into()));
    }
    if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "Marcum Q arguments must be finite and non-negative (a = {a}, b = {b})"
        )));
    }
    let x = 0.5 * a * a;
    let y = 0.5 * b * b;
    if y == 0.0 {
        return Ok(1.0);
    }
    let v = order as usize;
    let mixing = PoissonWindow::new(x);
    let threshold = PoissonWindow::new(y);

    let q = if y <= x + v as f64 {
        // Q is the larger side; accumulate 1 - Q = sum_k P(K = k) P(J >= v + k).
        let upper = threshold.upper_tails();
        let mut acc = 0.0;
        for (i, w) in mixing.pmf.iter().enumerate() {
            acc += w * threshold.tail_at(&upper, v + mixing.lo + i, 0.0);
        }
        1.0 - acc
    } else {
        // Q = sum_k P(K = k) P(J < v + k).
        let lower = threshold.lower_tails();
        let mut acc = 0.0;
        for (i, w) in mixing.pmf.iter().enumerate() {
            acc += w * threshold.tail_at(&lower, v + mixing.lo + i, 1.0);
        }
        acc
    };
    Ok(q.clamp(0.0, 1.0))
}

/// Detection probability of a square-law detector for a Swerling-0 target:
/// `Q_1(sqrt(2 sinr), sqrt(-2 ln pfa))`.
pub fn detection_probability(sinr: f64, pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "false-alarm probability must lie in (0, 1), got {pfa}"
        )));
    }
    if !(sinr >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "SINR must be >= 0, got {sinr}"
        )));
    }
    marcum_q(1, (2.0 * sinr).sqrt(), (-2.0 * pfa.ln()).sqrt())
}

/// Poisson pmf restricted to the window `[lo, lo + pmf.len())` outside of
/// which the mass is negligible.
struct PoissonWindow {
    lo: usize,
    pmf: Vec<f64>,
}

impl PoissonWindow {
    fn new(mean: f64) -> Self {
        if mean == 0.0 {
            return Self {
                lo: 0,
                pmf: vec![1.0],
            };
        }
        let mode = mean.floor() as usize;
        let half = (TAIL_SIGMAS * mean.sqrt() + 30.0).ceil() as usize;
        let lo = mode.saturating_sub(half);
        let hi = mode + half;
        let mut pmf = vec![0.0; hi - lo + 1];
        let peak = poisson_pmf_at(mode, mean);
        pmf[mode - lo] = peak;
        let mut p = peak;
        for j in (lo..mode).rev() {
            // P(j) = P(j + 1) (j + 1) / mean
            p *= (j + 1) as f64 / mean;
            pmf[j - lo] = p;
        }
        p = peak;
        for j in mode + 1..=hi {
            p *= mean / j as f64;
            pmf[j - lo] = p;
        }
        Self { lo, pmf }
    }

    /// `out[i] = P(J < lo + i)`, summed from the small end.
    fn lower_tails(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pmf.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for p in &self.pmf {
            acc += p;
            out.push(acc);
        }
        out
    }

    /// `out[i] = P(J >= lo + i)`, summed from the small end of the tail.
    fn upper_tails(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.pmf.len() + 1];
        let mut acc = 0.0;
        for i in (0..self.pmf.len()).rev() {
            acc += self.pmf[i];
            out[i] = acc;
        }
        // Mass below the window is negligible, so P(J >= j) for j <= lo is 1.
        out[0] = 1.0;
        out
    }

    /// Looks up a cumulative table built by `lower_tails`/`upper_tails` at `n`,
    /// returning `beyond` past the upper end of the window.
    fn tail_at(&self, table: &[f64], n: usize, beyond: f64) -> f64 {
        if n <= self.lo {
            table[0]
        } else if n - self.lo < table.len() {
            table[n - self.lo]
        } else {
            beyond
        }
    }
}

/// Poisson pmf at `m`, accurate to a few ulps in relative terms.
fn poisson_pmf_at(m: usize, mean: f64) -> f64 {
    if m < DIRECT_PMF_LIMIT {
        let mut p = (-mean).exp();
        for j in 1..=m {
            p *= mean / j as f64;
        }
        return p;
    }
    let mf = m as f64;
    // ln P(m) = m ln(mean/m) + (m - mean) - ln sqrt(2 pi m) - stirling_tail(m)
    let log_ratio = ((mean - mf) / mf).ln_1p();
    let lp = mf * log_ratio + (mf - mean)
        - 0.5 * (2.0 * std::f64::consts::PI * mf).ln()
        - stirling_tail(mf);
    lp.exp()
}

/// `ln m! - (m ln m - m + ln sqrt(2 pi m))` for `m >= 30`.
fn stirling_tail(m: f64) -> f64 {
    let r = 1.0 / m;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 / 1680.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_signal_is_rayleigh_tail() {
        for &b in &[0.0, 0.3, 1.0, 2.5, 5.0, 9.0] {
            let q = marcum_q(1, 0.0, b).unwrap();
            assert_abs_diff_eq!(q, (-b * b / 2.0).exp(), epsilon = 1e-15);
        }
    }

    #[test]
    fn zero_threshold_is_one() {
        for v in 1..4 {
            assert_eq!(marcum_q(v, 3.7, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn higher_order_at_zero_signal_is_erlang_tail() {
        // Q_3(0, b) = exp(-y)(1 + y + y²/2)
        let b: f64 = 2.2;
        let y = b * b / 2.0;
        let expect = (-y).exp() * (1.0 + y + y * y / 2.0);
        assert_abs_diff_eq!(marcum_q(3, 0.0, b).unwrap(), expect, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(marcum_q(1, f64::NAN, 1.0).is_err());
        assert!(marcum_q(1, 1.0, f64::INFINITY).is_err());
        assert!(marcum_q(0, 1.0, 1.0).is_err());
        assert!(marcum_q(1, -1.0, 1.0).is_err());
    }

    #[test]
    fn pfa_floor() {
        let pfa = 1e-6;
        assert_abs_diff_eq!(
            detection_probability(0.0, pfa).unwrap(),
            pfa,
            epsilon = 1e-18
        );
    }

    #[test]
    fn large_arguments_stay_bounded() {
        assert_abs_diff_eq!(marcum_q(1, 60.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(marcum_q(1, 1.0, 60.0).unwrap() < 1e-300);
        let mid = marcum_q(2, 60.0, 60.0).unwrap();
        assert!(mid > 0.4 && mid < 0.6, "{mid}");
    }
}
