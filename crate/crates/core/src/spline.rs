//! Natural cubic spline interpolation.

use alloc::vec::Vec;

/// Interpolating cubic spline with zero second derivative at both ends.
///
/// Stores the knot abscissae, ordinates and the second derivatives solved
/// from the tridiagonal continuity system.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    /// Builds the spline through `(xs[i], ys[i])`. `xs` must be strictly
    /// increasing with at least two points.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2 && ys.len() == n, "need matching knots, at least two");
        assert!(xs.windows(2).all(|w| w[0] < w[1]), "knots must increase");
        let mut m = alloc::vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on interior second derivatives.
            let k = n - 2;
            let mut cp = alloc::vec![0.0; k];
            let mut dp = alloc::vec![0.0; k];
            for i in 0..k {
                let h0 = xs[i + 1] - xs[i];
                let h1 = xs[i + 2] - xs[i + 1];
                let diag = 2.0 * (h0 + h1);
                let rhs = 6.0 * ((ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0);
                if i == 0 {
                    cp[i] = h1 / diag;
                    dp[i] = rhs / diag;
                } else {
                    let denom = diag - h0 * cp[i - 1];
                    cp[i] = h1 / denom;
                    dp[i] = (rhs - h0 * dp[i - 1]) / denom;
                }
            }
            m[k] = dp[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = dp[i] - cp[i] * m[i + 2];
            }
        }
        Self { xs, ys, m }
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.m
    }

    /// Evaluates the spline; outside the knot range the end cubic is
    /// extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            j if j >= n => n - 2,
            j => j - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}
