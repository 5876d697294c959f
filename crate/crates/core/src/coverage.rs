//! Known-variance coverage probability, scaled expected length and the
//! weighted objective for intervals `J(f_o, f_e)`, all as quadratures of
//! spline-times-Gaussian integrands over `[-d, d]`.
//!
//! With `ψ̂ ~ N(ψ, 1)` and `corr(θ̂-pivot, ψ̂) = ρ`,
//!
//! ```text
//! CP(ψ)  = 1 − α + ∫ (k(w) − k†(w)) φ(w − ψ) dw
//! SEL(ψ) = 1 + (1/z) ∫ (f_e(w) − z) φ(w − ψ) dw
//! ```
//!
//! where `k(w) = Φ((f_o+f_e−ρ(w−ψ))/s) − Φ((f_o−f_e−ρ(w−ψ))/s)`,
//! `s = √(1−ρ²)` and `k†` is `k` at the standard pair.

use alloc::vec::Vec;

use crate::normal;
use crate::pair::{BasisRow, KnotFunctionPair, SplineBasis, DEFAULT_D, FREE_KNOTS, ODD_KNOTS};
use crate::quadrature::CompositeRule;
use crate::{Error, Result};

/// Default quadrature: one 20-point Gauss–Legendre rule per knot interval.
pub const DEFAULT_POINTS: usize = 20;
/// Spacing of the default ψ constraint grid.
pub const CONSTRAINT_STEP: f64 = 0.05;

/// Everything the known-variance formulas need besides the pair itself.
#[derive(Debug, Clone)]
pub struct KgContext {
    rho: f64,
    alpha: f64,
    d: f64,
    z: f64,
    rule: CompositeRule,
    psi_constraint_grid: Vec<f64>,
}

impl KgContext {
    /// Context with `d = 6`, the default quadrature (12 × 20 points) and the
    /// constraint grid `0, 0.05, …, d + 4`.
    pub fn new(rho: f64, alpha: f64) -> Result<Self> {
        Self::with_options(rho, alpha, DEFAULT_D, DEFAULT_POINTS)
    }

    pub fn with_options(rho: f64, alpha: f64, d: f64, points: usize) -> Result<Self> {
        if !(rho > -1.0 && rho <= 0.0) {
            return Err(Error::InvalidArgument("rho must lie in (-1, 0]"));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidArgument("alpha must lie in (0, 1)"));
        }
        if !(d > 0.0 && d.is_finite()) || points == 0 {
            return Err(Error::InvalidArgument("need d > 0 and at least one point"));
        }
        let steps = libm::round((d + 4.0) / CONSTRAINT_STEP) as usize;
        let psi_constraint_grid = (0..=steps).map(|i| i as f64 * CONSTRAINT_STEP).collect();
        Ok(Self {
            rho,
            alpha,
            d,
            z: normal::two_sided_critical(alpha),
            rule: CompositeRule::new(-d, d, 12, points),
            psi_constraint_grid,
        })
    }

    /// Replaces the ψ constraint grid; it must start at 0, be increasing
    /// and reach `d + 4`.
    pub fn with_constraint_grid(mut self, grid: Vec<f64>) -> Result<Self> {
        let ok = grid.first() == Some(&0.0)
            && grid.windows(2).all(|w| w[0] < w[1])
            && grid.last().is_some_and(|&l| l >= self.d + 4.0 - 1e-12);
        if !ok {
            return Err(Error::InvalidArgument("constraint grid must start at 0 and reach d + 4"));
        }
        self.psi_constraint_grid = grid;
        Ok(self)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn rule(&self) -> &CompositeRule {
        &self.rule
    }

    pub fn psi_constraint_grid(&self) -> &[f64] {
        &self.psi_constraint_grid
    }

    fn check_pair(&self, pair: &KnotFunctionPair) -> Result<()> {
        if pair.alpha() != self.alpha || pair.d() != self.d {
            return Err(Error::InvalidArgument("pair alpha/d differ from context"));
        }
        Ok(())
    }
}

#[inline]
fn k_value(fo: f64, fe: f64, shift: f64, s: f64) -> f64 {
    normal::cdf((fo + fe - shift) / s) - normal::cdf((fo - fe - shift) / s)
}

/// `k(w) − k†(w)` at one node, with `shift = ρ(w − ψ)`.
#[inline]
fn k_excess(fo: f64, fe: f64, z: f64, shift: f64, s: f64) -> f64 {
    k_value(fo, fe, shift, s) - k_value(0.0, z, shift, s)
}

fn finite(v: f64, psi: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureFailure { psi })
    }
}

/// Coverage probability `CP(ψ; f_o, f_e)`. Even in `ψ`; evaluated at `|ψ|`.
pub fn coverage_probability(ctx: &KgContext, pair: &KnotFunctionPair, psi: f64) -> Result<f64> {
    ctx.check_pair(pair)?;
    coverage_probability_with(ctx, |w| pair.eval_odd(w), |w| pair.eval_even(w), psi)
}

/// [`coverage_probability`] for arbitrary `f_o`, `f_e` given as closures
/// on `[-d, d]`.
pub fn coverage_probability_with<O, E>(ctx: &KgContext, fo: O, fe: E, psi: f64) -> Result<f64>
where
    O: Fn(f64) -> f64,
    E: Fn(f64) -> f64,
{
    let psi = psi.abs();
    let s = libm::sqrt(1.0 - ctx.rho * ctx.rho);
    let integral = ctx.rule.integrate(|w| {
        let shift = ctx.rho * (w - psi);
        k_excess(fo(w), fe(w), ctx.z, shift, s) * normal::pdf(w - psi)
    });
    finite(1.0 - ctx.alpha + integral, psi)
}

/// Scaled expected length `SEL(ψ; f_o, f_e)`, relative to the fixed effects
/// interval.
pub fn scaled_expected_length(ctx: &KgContext, pair: &KnotFunctionPair, psi: f64) -> Result<f64> {
    ctx.check_pair(pair)?;
    scaled_expected_length_with(ctx, |w| pair.eval_even(w), psi)
}

pub fn scaled_expected_length_with<E: Fn(f64) -> f64>(ctx: &KgContext, fe: E, psi: f64) -> Result<f64> {
    let psi = psi.abs();
    let integral = ctx.rule.integrate(|w| (fe(w) - ctx.z) * normal::pdf(w - psi));
    finite(1.0 + integral / ctx.z, psi)
}

/// `(2/z) ∫_0^d (f_e(w) − z) ((1 − φ) φ_pdf(w) + φ) dw`, the weighted
/// criterion `(1−φ)(SEL(0) − 1) + φ ∫ (SEL(ψ) − 1) dψ`.
pub fn objective(ctx: &KgContext, pair: &KnotFunctionPair, phi: f64) -> Result<f64> {
    ctx.check_pair(pair)?;
    objective_with(ctx, |w| pair.eval_even(w), phi)
}

pub fn objective_with<E: Fn(f64) -> f64>(ctx: &KgContext, fe: E, phi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::InvalidArgument("phi must lie in [0, 1]"));
    }
    let half = half_rule(ctx);
    let integral = half.integrate(|w| (fe(w) - ctx.z) * ((1.0 - phi) * normal::pdf(w) + phi));
    finite(2.0 * integral / ctx.z, 0.0)
}

fn half_rule(ctx: &KgContext) -> CompositeRule {
    CompositeRule::new(0.0, ctx.d, 6, ctx.rule.points)
}

/// Precomputed node data for fast repeated evaluation of CP, SEL and the
/// objective as functions of the 11 free knot values, with gradients.
#[derive(Debug, Clone)]
pub struct Kernel {
    rho: f64,
    s: f64,
    z: f64,
    alpha: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rows: Vec<BasisRow>,
    objective_rows: Vec<BasisRow>,
    objective_weights_pdf: Vec<f64>,
    objective_weights_flat: Vec<f64>,
}

/// Node values of `(f_o, f_e)` for one knot vector.
#[derive(Debug, Clone)]
pub struct NodeValues {
    pub fo: Vec<f64>,
    pub fe: Vec<f64>,
}

/// Per-ψ cached weights: `W_q φ(w_q − ψ)`, `ρ(w_q − ψ)` and `k†(w_q)`.
#[derive(Debug, Clone)]
pub struct PsiPoint {
    pub psi: f64,
    gw: Vec<f64>,
    shift: Vec<f64>,
    kdag: Vec<f64>,
}

impl Kernel {
    pub fn new(ctx: &KgContext) -> Self {
        let basis = SplineBasis::new(ctx.d);
        let rows = ctx.rule.nodes().iter().map(|&w| basis.row(w)).collect();
        let half = half_rule(ctx);
        let objective_rows = half.nodes().iter().map(|&w| basis.row(w)).collect();
        let objective_weights_pdf = half
            .nodes()
            .iter()
            .zip(half.weights())
            .map(|(&w, &wt)| wt * normal::pdf(w))
            .collect();
        Self {
            rho: ctx.rho,
            s: libm::sqrt(1.0 - ctx.rho * ctx.rho),
            z: ctx.z,
            alpha: ctx.alpha,
            nodes: ctx.rule.nodes().to_vec(),
            weights: ctx.rule.weights().to_vec(),
            rows,
            objective_rows,
            objective_weights_pdf,
            objective_weights_flat: half.weights().to_vec(),
        }
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn values(&self, free: &[f64]) -> NodeValues {
        let (odd, even) = free.split_at(ODD_KNOTS);
        NodeValues {
            fo: self.rows.iter().map(|r| r.odd_value(odd)).collect(),
            fe: self.rows.iter().map(|r| r.even_value(even, self.z)).collect(),
        }
    }

    pub fn point(&self, psi: f64) -> PsiPoint {
        let psi = psi.abs();
        let mut gw = Vec::with_capacity(self.nodes.len());
        let mut shift = Vec::with_capacity(self.nodes.len());
        let mut kdag = Vec::with_capacity(self.nodes.len());
        for (&w, &wt) in self.nodes.iter().zip(&self.weights) {
            let sh = self.rho * (w - psi);
            gw.push(wt * normal::pdf(w - psi));
            shift.push(sh);
            kdag.push(k_value(0.0, self.z, sh, self.s));
        }
        PsiPoint {
            psi,
            gw,
            shift,
            kdag,
        }
    }

    /// `CP(ψ) − (1 − α)`.
    pub fn coverage_excess(&self, v: &NodeValues, p: &PsiPoint) -> f64 {
        let mut acc = 0.0;
        for q in 0..self.nodes.len() {
            if p.gw[q] == 0.0 {
                continue;
            }
            let k = k_value(v.fo[q], v.fe[q], p.shift[q], self.s);
            acc += p.gw[q] * (k - p.kdag[q]);
        }
        acc
    }

    pub fn coverage(&self, v: &NodeValues, p: &PsiPoint) -> f64 {
        1.0 - self.alpha + self.coverage_excess(v, p)
    }

    /// `CP(ψ) − (1 − α)` and its gradient with respect to the free knots.
    pub fn coverage_excess_grad(&self, v: &NodeValues, p: &PsiPoint, grad: &mut [f64]) -> f64 {
        grad[..FREE_KNOTS].fill(0.0);
        let mut acc = 0.0;
        let inv_s = 1.0 / self.s;
        for q in 0..self.nodes.len() {
            let g = p.gw[q];
            if g == 0.0 {
                continue;
            }
            let hi = (v.fo[q] + v.fe[q] - p.shift[q]) * inv_s;
            let lo = (v.fo[q] - v.fe[q] - p.shift[q]) * inv_s;
            acc += g * (normal::cdf(hi) - normal::cdf(lo) - p.kdag[q]);
            let (dhi, dlo) = (normal::pdf(hi), normal::pdf(lo));
            let d_fo = g * (dhi - dlo) * inv_s;
            let d_fe = g * (dhi + dlo) * inv_s;
            let row = &self.rows[q];
            for j in 0..ODD_KNOTS {
                grad[j] += d_fo * row.odd[j];
            }
            for j in 0..row.even.len() {
                grad[ODD_KNOTS + j] += d_fe * row.even[j];
            }
        }
        acc
    }

    /// `SEL(ψ)` from node values.
    pub fn sel(&self, v: &NodeValues, psi: f64) -> f64 {
        let psi = psi.abs();
        let mut acc = 0.0;
        for q in 0..self.nodes.len() {
            acc += self.weights[q] * (v.fe[q] - self.z) * normal::pdf(self.nodes[q] - psi);
        }
        1.0 + acc / self.z
    }

    /// Linear objective: returns the value and fills the gradient.
    pub fn objective_grad(&self, free: &[f64], phi: f64, grad: &mut [f64]) -> f64 {
        grad[..FREE_KNOTS].fill(0.0);
        let even = &free[ODD_KNOTS..];
        let scale = 2.0 / self.z;
        let mut acc = 0.0;
        for (q, row) in self.objective_rows.iter().enumerate() {
            let weight = scale
                * ((1.0 - phi) * self.objective_weights_pdf[q] + phi * self.objective_weights_flat[q]);
            acc += weight * (row.even_value(even, self.z) - self.z);
            for j in 0..row.even.len() {
                grad[ODD_KNOTS + j] += weight * row.even[j];
            }
        }
        acc
    }
}

/// Coverage on a ψ grid: returns `(min CP, argmin ψ)`.
pub fn min_coverage_on_grid(kernel: &Kernel, v: &NodeValues, psis: &[f64]) -> (f64, f64) {
    psis.iter()
        .map(|&psi| (kernel.coverage(v, &kernel.point(psi)), psi))
        .fold((f64::INFINITY, 0.0), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// `0, step, 2·step, …, hi`.
pub fn uniform_grid(hi: f64, step: f64) -> Vec<f64> {
    let n = libm::round(hi / step) as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// `max_ψ SEL(ψ)` over a ψ grid.
pub fn max_sel_on_grid(kernel: &Kernel, v: &NodeValues, psis: &[f64]) -> f64 {
    psis.iter().map(|&psi| kernel.sel(v, psi)).fold(f64::NEG_INFINITY, f64::max)
}
