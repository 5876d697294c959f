//! The δ-grid of optimised pairs, interpolation between them, and the
//! known-parameter and plug-in intervals built from it.

use alloc::vec::Vec;

use crate::coverage::KgContext;
use crate::optimize::{select_phi, OptimizedPair};
use crate::pair::{KnotFunctionPair, FREE_KNOTS};
use crate::panel::{self, fixed_effects_from, Design, DesignSummary, FitResult, PanelData};
use crate::{Error, Result};

/// `ρ` values of the grid entries, from no information to the most.
pub const GRID_RHOS: [f64; 11] = [0.0, -0.1, -0.2, -0.3, -0.4, -0.5, -0.6, -0.7, -0.8, -0.9, -0.97];

/// Relative tolerance on `SSW`, `SSB` when matching a grid to a design.
pub const FINGERPRINT_RTOL: f64 = 1e-9;

/// The design constants a grid was built for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridDesign {
    pub n: usize,
    pub t: usize,
    pub ssw: f64,
    pub ssb: f64,
}

impl GridDesign {
    pub fn of(ds: &DesignSummary) -> Self {
        Self {
            n: ds.n,
            t: ds.t,
            ssw: ds.ssw,
            ssb: ds.ssb,
        }
    }

    pub fn r(&self) -> f64 {
        self.ssb / self.ssw
    }

    /// Errors unless `ds` is the same design up to [`FINGERPRINT_RTOL`].
    pub fn check(&self, ds: &DesignSummary) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= FINGERPRINT_RTOL * a.abs().max(b.abs());
        if self.n != ds.n || self.t != ds.t {
            return Err(Error::GridMismatch("grid was built for a panel of another size"));
        }
        if !close(self.ssw, ds.ssw) || !close(self.ssb, ds.ssb) {
            return Err(Error::GridMismatch("grid was built for another design (SSW/SSB differ)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    /// `ρ` the pair was optimised at.
    pub rho: f64,
    /// `δ` with `ρ(δ) = rho`; `∞` for the `ρ = 0` entry.
    pub delta: f64,
    pub phi_star: f64,
    pub optimized: OptimizedPair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionGrid {
    pub design: GridDesign,
    pub alpha: f64,
    pub d: f64,
    pub entries: Vec<GridEntry>,
}

/// `(ρ_j, δ_j)` for each entry. Where `δ` would be negative it is clamped to
/// 0 and `ρ` replaced by `ρ(0)`.
pub fn grid_points(design: &GridDesign) -> Result<Vec<(f64, f64)>> {
    let r = design.r();
    GRID_RHOS
        .iter()
        .map(|&rho| {
            if rho == 0.0 {
                return Ok((0.0, f64::INFINITY));
            }
            let delta = panel::delta_of_rho(r, rho, design.t)?;
            let rho = if delta == 0.0 { panel::rho_of_delta(r, 0.0, design.t)? } else { rho };
            Ok((rho, delta))
        })
        .collect()
}

/// Runs [`select_phi`] at every grid `ρ` for this design. Entries whose
/// clamped `ρ` coincides with an earlier one reuse its solution.
pub fn build_grid(ds: &DesignSummary, alpha: f64) -> Result<FunctionGrid> {
    build_grid_with(ds, alpha, |rho| {
        let ctx = KgContext::new(rho, alpha)?;
        select_phi(&ctx)
    })
}

/// [`build_grid`] with a caller-supplied per-`ρ` solver.
pub fn build_grid_with<F>(ds: &DesignSummary, alpha: f64, solve: F) -> Result<FunctionGrid>
where
    F: Fn(f64) -> Result<OptimizedPair> + Sync + Send,
{
    let design = GridDesign::of(ds);
    let points = grid_points(&design)?;
    let mut distinct: Vec<f64> = Vec::new();
    for &(rho, _) in &points {
        if !distinct.contains(&rho) {
            distinct.push(rho);
        }
    }
    let solved = crate::par::map(&distinct, |&rho| {
        solve(rho).map_err(|e| match e {
            Error::OptimizerFailure { violation, .. } => Error::OptimizerFailure { rho, violation },
            other => other,
        })
    });
    let solved = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let entries = points
        .iter()
        .map(|&(rho, delta)| {
            let k = distinct.iter().position(|&v| v == rho).expect("listed above");
            let optimized = solved[k].clone();
            GridEntry {
                rho,
                delta,
                phi_star: optimized.phi,
                optimized,
            }
        })
        .collect();
    Ok(FunctionGrid {
        design,
        alpha,
        d: crate::pair::DEFAULT_D,
        entries,
    })
}

impl FunctionGrid {
    /// Grid whose every entry is the standard pair; its intervals are the
    /// fixed effects interval for all data.
    pub fn standard(ds: &DesignSummary, alpha: f64) -> Result<Self> {
        build_grid_with(ds, alpha, |rho| {
            let ctx = KgContext::new(rho, alpha)?;
            OptimizedPair::standard(&ctx, 1.0)
        })
    }

    pub fn z(&self) -> f64 {
        crate::normal::two_sided_critical(self.alpha)
    }

    /// The pair used at variance ratio `delta`: knot vectors are
    /// interpolated linearly in `ρ(δ)` between the bracketing entries, and
    /// held at the last entry beyond the grid.
    pub fn interpolate_pair(&self, delta: f64) -> Result<KnotFunctionPair> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidArgument("delta must be nonnegative"));
        }
        if let Some(e) = self.entries.iter().find(|e| e.delta == delta) {
            return Ok(e.optimized.pair.clone());
        }
        let rho = panel::rho_of_delta(self.design.r(), delta, self.design.t)?;
        let (lo, hi, w) = self.bracket(rho);
        if w == 0.0 {
            return Ok(self.entries[lo].optimized.pair.clone());
        }
        let a = self.entries[lo].optimized.pair.free();
        let b = self.entries[hi].optimized.pair.free();
        let mut knots = [0.0; FREE_KNOTS];
        for k in 0..FREE_KNOTS {
            knots[k] = (1.0 - w) * a[k] + w * b[k];
        }
        KnotFunctionPair::from_free(&knots, self.alpha, self.d)
    }

    /// Entries `lo`, `hi` and weight `w` on `hi`, for target `ρ`.
    fn bracket(&self, rho: f64) -> (usize, usize, f64) {
        let last = self.entries.len() - 1;
        if rho >= self.entries[0].rho {
            return (0, 0, 0.0);
        }
        for j in 0..last {
            let (r0, r1) = (self.entries[j].rho, self.entries[j + 1].rho);
            if rho <= r0 && rho >= r1 && r1 < r0 {
                return (j, j + 1, (r0 - rho) / (r0 - r1));
            }
        }
        (last, last, 0.0)
    }

    /// Same-design check against a panel.
    pub fn check_design(&self, ds: &DesignSummary) -> Result<()> {
        self.design.check(ds)
    }
}

/// An interval `J(f_o, f_e)` for given `(σ_ε, δ)` with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiResult {
    pub lower: f64,
    pub upper: f64,
    /// `f_o(h)`, in units of `(σ²/SSW)^{1/2}`.
    pub center_shift: f64,
    /// `f_e(h)`, in the same units.
    pub half_width: f64,
    pub h_used: f64,
    pub sigma_used: f64,
    pub delta_used: f64,
    /// `|h| ≥ d`: the interval is the fixed effects one.
    pub reverted: bool,
}

/// Interval from already-computed slope estimates.
pub fn ci_from_estimates(
    design: &Design,
    grid: &FunctionGrid,
    bw_hat: f64,
    bb_hat: f64,
    sigma_eps: f64,
    delta: f64,
) -> Result<CiResult> {
    if !(sigma_eps > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArgument("need sigma_eps > 0 and delta >= 0"));
    }
    let ds = design.summary();
    let h = design.hausman(bw_hat, bb_hat, sigma_eps, delta);
    let scale = ds.scale(sigma_eps);
    let reverted = h.abs() >= grid.d;
    let (lower, upper, center_shift, half_width) = if reverted {
        let l = fixed_effects_from(bw_hat, scale, 1.0 - grid.alpha);
        (l.lower, l.upper, 0.0, grid.z())
    } else {
        let pair = grid.interpolate_pair(delta)?;
        let (fo, fe) = (pair.eval_odd(h), pair.eval_even(h));
        let center = bw_hat + scale * fo;
        (center - scale * fe, center + scale * fe, fo, fe)
    };
    Ok(CiResult {
        lower,
        upper,
        center_shift,
        half_width,
        h_used: h,
        sigma_used: sigma_eps,
        delta_used: delta,
        reverted,
    })
}

/// `CI(σ_ε, δ)` for known `σ_ε` and `δ`.
pub fn known_ci(p: &PanelData, sigma_eps: f64, delta: f64, grid: &FunctionGrid) -> Result<CiResult> {
    let design = Design::new(p)?;
    grid.check_design(design.summary())?;
    let y = p.y().ok_or(Error::MissingResponse)?;
    let fit = design.fit_gls(y)?;
    ci_from_estimates(&design, grid, fit.bw_hat, fit.bb_hat, sigma_eps, delta)
}

/// Plug-in interval `CI(σ̂_ε, δ̂)`.
pub fn plugin_ci(p: &PanelData, grid: &FunctionGrid) -> Result<(CiResult, FitResult)> {
    let design = Design::new(p)?;
    grid.check_design(design.summary())?;
    let y = p.y().ok_or(Error::MissingResponse)?;
    let fit = design.estimate(y)?;
    let ci = ci_from_estimates(&design, grid, fit.bw_hat, fit.bb_hat, fit.sigma_eps_hat(), fit.delta_hat)?;
    Ok((ci, fit))
}
