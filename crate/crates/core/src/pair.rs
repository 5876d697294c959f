//! The interval-shape pair `(f_o, f_e)`: an odd centre-shift function and an
//! even half-width function, each a natural cubic spline on 13 equally
//! spaced knots over `[-d, d]`.
//!
//! Only 11 numbers are free: `f_o(1..=5)` and `f_e(0..=5)` (in knot units).
//! Parity fills in the negative knots, and the end knots are pinned at
//! `f_o(±d) = 0`, `f_e(±d) = z_{1-α/2}`, which are also the values taken for
//! `|x| ≥ d`.

use alloc::vec::Vec;

use crate::normal;
use crate::spline::NaturalSpline;
use crate::{Error, Result};

/// Number of free odd knots, `f_o(1), …, f_o(5)`.
pub const ODD_KNOTS: usize = 5;
/// Number of free even knots, `f_e(0), …, f_e(5)`.
pub const EVEN_KNOTS: usize = 6;
/// Total number of free knot values.
pub const FREE_KNOTS: usize = ODD_KNOTS + EVEN_KNOTS;
/// Default support half-width.
pub const DEFAULT_D: f64 = 6.0;

const HALF: usize = 6;
const FULL: usize = 2 * HALF + 1;

#[derive(Debug, Clone, PartialEq)]
pub struct KnotFunctionPair {
    alpha: f64,
    d: f64,
    z: f64,
    odd_knots: [f64; ODD_KNOTS],
    even_knots: [f64; EVEN_KNOTS],
    odd: NaturalSpline,
    even: NaturalSpline,
}

fn knot_positions(d: f64) -> Vec<f64> {
    (0..FULL)
        .map(|k| d * (k as f64 - HALF as f64) / HALF as f64)
        .collect()
}

fn check_alpha_d(alpha: f64, d: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0, 1)"));
    }
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidArgument("d must be positive and finite"));
    }
    Ok(())
}

impl KnotFunctionPair {
    /// Builds the pair from its free knot values.
    pub fn new(
        odd_knots: [f64; ODD_KNOTS],
        even_knots: [f64; EVEN_KNOTS],
        alpha: f64,
        d: f64,
    ) -> Result<Self> {
        check_alpha_d(alpha, d)?;
        if odd_knots.iter().chain(&even_knots).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteKnot);
        }
        if let Some((index, &value)) = even_knots.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeEvenKnot { index, value });
        }
        Ok(Self::build(odd_knots, even_knots, alpha, d))
    }

    fn build(
        odd_knots: [f64; ODD_KNOTS],
        even_knots: [f64; EVEN_KNOTS],
        alpha: f64,
        d: f64,
    ) -> Self {
        let z = normal::two_sided_critical(alpha);
        let xs = knot_positions(d);
        let odd = NaturalSpline::new(xs.clone(), full_odd(&odd_knots).to_vec());
        let even = NaturalSpline::new(xs, full_even(&even_knots, z).to_vec());
        Self {
            alpha,
            d,
            z,
            odd_knots,
            even_knots,
            odd,
            even,
        }
    }

    /// The pair `f_o ≡ 0`, `f_e ≡ z_{1-α/2}` whose interval is the usual
    /// fixed effects interval, on the default support `d = 6`.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::standard_with_support(alpha, DEFAULT_D)
    }

    pub fn standard_with_support(alpha: f64, d: f64) -> Result<Self> {
        check_alpha_d(alpha, d)?;
        let z = normal::two_sided_critical(alpha);
        Ok(Self::build([0.0; ODD_KNOTS], [z; EVEN_KNOTS], alpha, d))
    }

    /// Rebuilds a pair from the 11-vector `(f_o(1..5), f_e(0..5))`.
    pub fn from_free(free: &[f64], alpha: f64, d: f64) -> Result<Self> {
        if free.len() != FREE_KNOTS {
            return Err(Error::InvalidArgument("expected 11 free knot values"));
        }
        let mut odd = [0.0; ODD_KNOTS];
        let mut even = [0.0; EVEN_KNOTS];
        odd.copy_from_slice(&free[..ODD_KNOTS]);
        even.copy_from_slice(&free[ODD_KNOTS..]);
        Self::new(odd, even, alpha, d)
    }

    pub fn free(&self) -> [f64; FREE_KNOTS] {
        let mut out = [0.0; FREE_KNOTS];
        out[..ODD_KNOTS].copy_from_slice(&self.odd_knots);
        out[ODD_KNOTS..].copy_from_slice(&self.even_knots);
        out
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `z_{1-α/2}`.
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn odd_knots(&self) -> &[f64; ODD_KNOTS] {
        &self.odd_knots
    }

    pub fn even_knots(&self) -> &[f64; EVEN_KNOTS] {
        &self.even_knots
    }

    /// All 13 knot values of `f_o`, from `-d` to `d`.
    pub fn full_odd_knots(&self) -> [f64; FULL] {
        full_odd(&self.odd_knots)
    }

    /// All 13 knot values of `f_e`, from `-d` to `d`.
    pub fn full_even_knots(&self) -> [f64; FULL] {
        full_even(&self.even_knots, self.z)
    }

    pub fn eval_odd(&self, x: f64) -> f64 {
        if x.abs() >= self.d {
            0.0
        } else {
            self.odd.eval(x)
        }
    }

    pub fn eval_even(&self, x: f64) -> f64 {
        if x.abs() >= self.d {
            self.z
        } else {
            self.even.eval(x)
        }
    }

    /// Minimum of `f_e` over a grid of step `step` on `[0, d]`.
    pub fn min_even_on_grid(&self, step: f64) -> f64 {
        let n = libm::ceil(self.d / step) as usize;
        (0..=n)
            .map(|i| self.eval_even((i as f64 * step).min(self.d)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_standard(&self) -> bool {
        self.odd_knots.iter().all(|&v| v == 0.0) && self.even_knots.iter().all(|&v| v == self.z)
    }
}

fn full_odd(odd: &[f64; ODD_KNOTS]) -> [f64; FULL] {
    let mut v = [0.0; FULL];
    for j in 1..=ODD_KNOTS {
        v[HALF + j] = odd[j - 1];
        v[HALF - j] = -odd[j - 1];
    }
    v
}

fn full_even(even: &[f64; EVEN_KNOTS], z: f64) -> [f64; FULL] {
    let mut v = [z; FULL];
    for j in 0..EVEN_KNOTS {
        v[HALF + j] = even[j];
        v[HALF - j] = even[j];
    }
    v
}

/// Linear representation of pairs at a fixed abscissa.
///
/// Natural spline interpolation is linear in the knot values, so for a fixed
/// `x` there are coefficients with
/// `f_o(x) = Σ odd[j]·f_o(j+1)` and `f_e(x) = Σ even[j]·f_e(j) + boundary·z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisRow {
    pub odd: [f64; ODD_KNOTS],
    pub even: [f64; EVEN_KNOTS],
    pub boundary: f64,
}

impl BasisRow {
    #[inline]
    pub fn odd_value(&self, odd: &[f64]) -> f64 {
        self.odd.iter().zip(odd).map(|(b, v)| b * v).sum()
    }

    #[inline]
    pub fn even_value(&self, even: &[f64], z: f64) -> f64 {
        self.even.iter().zip(even).map(|(b, v)| b * v).sum::<f64>() + self.boundary * z
    }
}

/// Cardinal natural splines on the 13-knot grid over `[-d, d]`.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    d: f64,
    cardinal: Vec<NaturalSpline>,
}

impl SplineBasis {
    pub fn new(d: f64) -> Self {
        let xs = knot_positions(d);
        let cardinal = (0..FULL)
            .map(|k| {
                let mut ys = alloc::vec![0.0; FULL];
                ys[k] = 1.0;
                NaturalSpline::new(xs.clone(), ys)
            })
            .collect();
        Self { d, cardinal }
    }

    pub fn row(&self, x: f64) -> BasisRow {
        let mut row = BasisRow {
            odd: [0.0; ODD_KNOTS],
            even: [0.0; EVEN_KNOTS],
            boundary: 0.0,
        };
        if x.abs() >= self.d {
            row.boundary = 1.0;
            return row;
        }
        let c: Vec<f64> = self.cardinal.iter().map(|s| s.eval(x)).collect();
        for j in 1..=ODD_KNOTS {
            row.odd[j - 1] = c[HALF + j] - c[HALF - j];
        }
        row.even[0] = c[HALF];
        for j in 1..EVEN_KNOTS {
            row.even[j] = c[HALF + j] + c[HALF - j];
        }
        row.boundary = c[0] + c[FULL - 1];
        row
    }
}
