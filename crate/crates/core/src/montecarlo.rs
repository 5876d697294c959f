//! Simulation estimators of the coverage probability, the confidence
//! coefficient and the scaled expected length of the plug-in interval.
//!
//! Data are generated with `a = 0`, `b = 0`, `σ_ε = 1`, `σ_η = √δ` and
//! `ξ = γ/√N`; the estimators depend on the parameters only through
//! `(γ, δ)`, which [`simulate_run_with`] lets callers confirm.
//!
//! Replications are processed in fixed blocks of [`BLOCK`] and block results
//! are combined in index order, so estimates do not depend on the number of
//! threads.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::interval::FunctionGrid;
use crate::panel::{Design, ModelParams};
use crate::stream::{derive_seed, stream, Purpose};
use crate::sum::Neumaier;
use crate::{Error, Result};

/// Replications per reduction block.
pub const BLOCK: u64 = 4096;

/// Draws standardized (mean 0, variance 1) i.i.d. noise.
pub trait Sampler: Send + Sync {
    fn sample(&self, rng: &mut dyn RngCore) -> f64;
}

impl<F: Fn(&mut dyn RngCore) -> f64 + Send + Sync> Sampler for F {
    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        self(rng)
    }
}

/// Distribution of the standardized errors `η†`, `ε†`.
#[derive(Clone, Default)]
pub enum Noise {
    #[default]
    Normal,
    External(Arc<dyn Sampler>),
}

impl fmt::Debug for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::Normal => f.write_str("Normal"),
            Noise::External(_) => f.write_str("External"),
        }
    }
}

impl Noise {
    #[inline]
    fn draw<R: RngCore>(&self, rng: &mut R) -> f64 {
        match self {
            Noise::Normal => StandardNormal.sample(rng),
            Noise::External(s) => s.sample(rng),
        }
    }
}

/// Which `(σ_ε, δ)` the interval is built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Plug {
    /// Estimates `(σ̂_ε, δ̂)`, the interval used in practice.
    #[default]
    Estimated,
    /// The true values, giving `CI(σ_ε, δ)`.
    Known,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimKind {
    Coverage,
    Sel,
    ConfCoeff,
}

impl SimKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SimKind::Coverage => "coverage",
            SimKind::Sel => "sel",
            SimKind::ConfCoeff => "conf_coeff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub value: f64,
    pub std_error: f64,
    pub m: u64,
    pub seed: u64,
    pub kind: SimKind,
}

/// Statistics of one simulated data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRun {
    pub h_hat: f64,
    /// `(b̂_W − b) / (σ̂_ε²/SSW)^{1/2}`.
    pub gl_hat: f64,
    /// `σ̂_ε / σ_ε`.
    pub sigma_ratio: f64,
    pub delta_hat: f64,
    /// Draws discarded because the residual variance was zero.
    pub redraws: u32,
}

const MAX_REDRAWS: u32 = 100;

/// One data set at `(γ, δ)` in the canonical parameterization.
pub fn simulate_run<R: RngCore>(design: &Design, gamma: f64, delta: f64, noise: &Noise, rng: &mut R) -> Result<SimRun> {
    let params = ModelParams::from_gamma(0.0, 0.0, gamma, 1.0, delta, design.summary().n);
    simulate_run_with(design, &params, noise, rng)
}

/// One data set under arbitrary model parameters. With the same random
/// stream the result depends on `params` only through `(γ, δ)`.
pub fn simulate_run_with<R: RngCore>(design: &Design, params: &ModelParams, noise: &Noise, rng: &mut R) -> Result<SimRun> {
    if !(params.sigma_eps > 0.0) || !(params.delta >= 0.0) {
        return Err(Error::InvalidArgument("need sigma_eps > 0 and delta >= 0"));
    }
    let s = design.summary();
    let sigma_eta = libm::sqrt(params.delta);
    let x_within = design.within();
    let mut y = Vec::with_capacity(s.n * s.t);
    let mut redraws = 0;
    loop {
        y.clear();
        for i in 0..s.n {
            let eta = noise.draw(rng);
            let xbar_i = s.xbar_i[i];
            for j in 0..s.t {
                let x = x_within[i * s.t + j] + xbar_i;
                let eps = noise.draw(rng);
                y.push(params.a + params.b * x + params.xi * xbar_i + params.sigma_eps * (sigma_eta * eta + eps));
            }
        }
        match design.estimate(&y) {
            Ok(fit) => {
                let sigma_hat = fit.sigma_eps_hat();
                return Ok(SimRun {
                    h_hat: fit.h_hat,
                    gl_hat: (fit.bw_hat - params.b) / s.scale(sigma_hat),
                    sigma_ratio: sigma_hat / params.sigma_eps,
                    delta_hat: fit.delta_hat,
                    redraws,
                });
            }
            Err(Error::ZeroResidualVariance) if redraws < MAX_REDRAWS => redraws += 1,
            Err(e) => return Err(e),
        }
    }
}

/// One simulation experiment at a parameter point.
#[derive(Debug, Clone)]
pub struct SimConfig<'a> {
    pub design: &'a Design,
    pub grid: &'a FunctionGrid,
    pub gamma: f64,
    pub delta: f64,
    pub m: u64,
    pub seed: u64,
    pub noise: Noise,
    pub plug: Plug,
}

impl<'a> SimConfig<'a> {
    pub fn new(design: &'a Design, grid: &'a FunctionGrid, gamma: f64, delta: f64, m: u64, seed: u64) -> Self {
        Self {
            design,
            grid,
            gamma,
            delta,
            m,
            seed,
            noise: Noise::Normal,
            plug: Plug::Estimated,
        }
    }

    fn at(&self, gamma: f64, delta: f64, m: u64, seed: u64) -> Self {
        Self {
            gamma,
            delta,
            m,
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("number of replications must be at least 1"));
        }
        if !self.gamma.is_finite() || !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidArgument("gamma must be finite and delta finite and nonnegative"));
        }
        self.grid.check_design(self.design.summary())
    }

    /// Simulates replication `k` of `purpose` and returns `(ĥ, ĝ_L, σ̂/σ)` and
    /// the pair evaluated at `ĥ` as `(f_o, f_e)`.
    fn replicate(&self, purpose: Purpose, k: u64) -> Result<(SimRun, f64, f64)> {
        let mut rng = stream(self.seed, purpose, k);
        let run = simulate_run(self.design, self.gamma, self.delta, &self.noise, &mut rng)?;
        let (h, delta_used) = match self.plug {
            Plug::Estimated => (run.h_hat, run.delta_hat),
            Plug::Known => {
                // rebuild ĥ and ĝ_L with σ_ε = 1 and the true δ
                let s = self.design.summary();
                let bw_minus_b = run.gl_hat * s.scale(run.sigma_ratio);
                let h = run.h_hat * run.sigma_ratio * hausman_factor(s, run.delta_hat) / hausman_factor(s, self.delta);
                let run = SimRun {
                    h_hat: h,
                    gl_hat: bw_minus_b / s.scale(1.0),
                    sigma_ratio: 1.0,
                    ..run
                };
                let pair = self.grid.interpolate_pair(self.delta)?;
                return Ok((run, pair.eval_odd(h), pair.eval_even(h)));
            }
        };
        let pair = self.grid.interpolate_pair(delta_used)?;
        Ok((run, pair.eval_odd(h), pair.eval_even(h)))
    }
}

/// `(1/SSW + (δ + 1/T)/SSB)^{1/2}`.
fn hausman_factor(s: &crate::panel::DesignSummary, delta: f64) -> f64 {
    libm::sqrt(1.0 / s.ssw + (delta + 1.0 / s.t as f64) / s.ssb)
}

/// Runs `f` on every replication of `0..m` in fixed blocks and returns the
/// per-block results in order.
fn blocks<R, F>(m: u64, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64, u64) -> Result<R> + Sync + Send,
{
    let starts: Vec<u64> = (0..m.div_ceil(BLOCK)).map(|b| b * BLOCK).collect();
    crate::par::map(&starts, |&lo| f(lo, (lo + BLOCK).min(m))).into_iter().collect()
}

fn check_interval(run: &SimRun, fo: f64, fe: f64) -> bool {
    -fo - fe <= run.gl_hat && run.gl_hat <= -fo + fe
}

/// Proportion of replications whose interval covers `b`.
pub fn estimate_cp(cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    let counts = blocks(cfg.m, |lo, hi| {
        let mut hits = 0u64;
        for k in lo..hi {
            let (run, fo, fe) = cfg.replicate(Purpose::Coverage, k)?;
            hits += check_interval(&run, fo, fe) as u64;
        }
        Ok(hits)
    })?;
    let hits: u64 = counts.iter().sum();
    let p = hits as f64 / cfg.m as f64;
    Ok(SimEstimate {
        value: p,
        std_error: libm::sqrt(p * (1.0 - p) / cfg.m as f64),
        m: cfg.m,
        seed: cfg.seed,
        kind: SimKind::Coverage,
    })
}

/// Coverage indicators of the first `m` replications, in order.
pub fn coverage_indicators(cfg: &SimConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    let parts = blocks(cfg.m, |lo, hi| {
        (lo..hi)
            .map(|k| cfg.replicate(Purpose::Coverage, k).map(|(run, fo, fe)| check_interval(&run, fo, fe)))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(parts.concat())
}

/// Result of the three-stage search for the minimum coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfCoeff {
    pub c_min: SimEstimate,
    pub gamma_star: f64,
    pub delta_star: f64,
    /// Per `δ`: the stage-two minimiser over `γ` and its estimate.
    pub per_delta: Vec<(f64, f64, SimEstimate)>,
}

/// Sample sizes of the three search stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub m1: u64,
    pub m2: u64,
    pub m3: u64,
}

/// Seed used by stage `stage` (1, 2 or 3) of the search.
pub fn stage_seed(master: u64, stage: u64) -> u64 {
    derive_seed(master, stage)
}

/// Orders `(γ, δ, p̂)` by `p̂`, then smaller `|γ|`, then smaller `δ`.
fn lower(a: &(f64, f64, SimEstimate), b: &(f64, f64, SimEstimate)) -> core::cmp::Ordering {
    a.2.value
        .total_cmp(&b.2.value)
        .then(a.0.abs().total_cmp(&b.0.abs()))
        .then(a.1.total_cmp(&b.1))
}

/// Estimates the confidence coefficient: coverage at every `(γ, δ)` with
/// `m1` runs, the three lowest per `δ` again with `m2`, and the overall
/// minimiser once more with `m3`. Each stage uses common random numbers
/// across parameter points, from its own seed.
pub fn estimate_confidence_coefficient(
    base: &SimConfig,
    gammas: &[f64],
    deltas: &[f64],
    stages: Stages,
) -> Result<ConfCoeff> {
    if gammas.is_empty() || deltas.is_empty() {
        return Err(Error::InvalidArgument("gamma and delta grids must be non-empty"));
    }
    if !(stages.m1 >= 1 && stages.m1 < stages.m2 && stages.m2 < stages.m3) {
        return Err(Error::InvalidArgument("need 1 <= M1 < M2 < M3"));
    }
    let (s1, s2, s3) = (stage_seed(base.seed, 1), stage_seed(base.seed, 2), stage_seed(base.seed, 3));
    let points: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| gammas.iter().map(move |&g| (g, d))).collect();
    let stage1 = crate::par::map(&points, |&(g, d)| estimate_cp(&base.at(g, d, stages.m1, s1)).map(|e| (g, d, e)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut candidates = Vec::new();
    for (j, _) in deltas.iter().enumerate() {
        let mut row = stage1[j * gammas.len()..(j + 1) * gammas.len()].to_vec();
        row.sort_by(lower);
        candidates.extend(row.into_iter().take(3).map(|(g, d, _)| (g, d)));
    }
    let stage2 = crate::par::map(&candidates, |&(g, d)| estimate_cp(&base.at(g, d, stages.m2, s2)).map(|e| (g, d, e)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let per_delta: Vec<(f64, f64, SimEstimate)> = stage2
        .chunk_by(|a, b| a.1 == b.1)
        .map(|c| *c.iter().min_by(|a, b| lower(a, b)).expect("non-empty chunk"))
        .collect();
    let best = per_delta.iter().min_by(|a, b| lower(a, b)).expect("non-empty");
    let (gamma_star, delta_star) = (best.0, best.1);
    let mut c_min = estimate_cp(&base.at(gamma_star, delta_star, stages.m3, s3))?;
    c_min.kind = SimKind::ConfCoeff;
    Ok(ConfCoeff {
        c_min,
        gamma_star,
        delta_star,
        per_delta,
    })
}

/// Sum and sum of squares over a block.
#[derive(Default, Clone, Copy)]
struct Moments {
    sum: Neumaier,
    sq: Neumaier,
}

impl Moments {
    fn add(&mut self, v: f64) {
        self.sum.add(v);
        self.sq.add(v * v);
    }

    fn merge(parts: &[Moments]) -> (f64, f64) {
        let mut sum = Neumaier::default();
        let mut sq = Neumaier::default();
        for p in parts {
            sum.add(p.sum.value());
            sq.add(p.sq.value());
        }
        (sum.value(), sq.value())
    }
}

/// Mean and variance of the mean.
fn mean_var(parts: &[Moments], m: u64) -> (f64, f64) {
    let (sum, sq) = Moments::merge(parts);
    let mf = m as f64;
    let mean = sum / mf;
    let var = if m > 1 { ((sq - sum * mean) / (mf - 1.0)).max(0.0) } else { 0.0 };
    (mean, var / mf)
}

/// Scaled expected length `NUM / (z TERM)` with `z` the two-sided critical
/// value at `c_min`. `NUM` and `TERM` come from independent sets of `m` runs.
/// The standard error is by the delta method.
pub fn estimate_sel(cfg: &SimConfig, c_min: f64) -> Result<SimEstimate> {
    cfg.validate()?;
    if !(c_min > 0.0 && c_min < 1.0) {
        return Err(Error::InvalidArgument("c_min must lie in (0, 1)"));
    }
    let num = blocks(cfg.m, |lo, hi| {
        let mut acc = Moments::default();
        for k in lo..hi {
            let (run, _, fe) = cfg.replicate(Purpose::SelNumerator, k)?;
            acc.add(run.sigma_ratio * fe);
        }
        Ok(acc)
    })?;
    let term = blocks(cfg.m, |lo, hi| {
        let mut acc = Moments::default();
        for k in lo..hi {
            let mut rng = stream(cfg.seed, Purpose::SelTerm, k);
            let run = simulate_run(cfg.design, cfg.gamma, cfg.delta, &cfg.noise, &mut rng)?;
            acc.add(match cfg.plug {
                Plug::Estimated => run.sigma_ratio,
                Plug::Known => 1.0,
            });
        }
        Ok(acc)
    })?;
    let (n, vn) = mean_var(&num, cfg.m);
    let (t, vt) = mean_var(&term, cfg.m);
    let z = crate::normal::quantile(0.5 + 0.5 * c_min);
    let value = n / (z * t);
    let std_error = libm::sqrt(vn / (t * t) + n * n * vt / (t * t * t * t)) / z;
    Ok(SimEstimate {
        value,
        std_error,
        m: cfg.m,
        seed: cfg.seed,
        kind: SimKind::Sel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::FunctionGrid;
    use rand::SeedableRng;

    fn design(n: usize, t: usize) -> Design {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..n * t)
            .map(|k| {
                let e: f64 = StandardNormal.sample(&mut rng);
                0.3 * (k / t) as f64 / n as f64 + e
            })
            .collect();
        Design::from_x(n, t, &x).unwrap()
    }

    #[test]
    fn single_replication_has_zero_error() {
        let d = design(20, 3);
        let g = FunctionGrid::standard(d.summary(), 0.05).unwrap();
        let e = estimate_cp(&SimConfig::new(&d, &g, 1.0, 2.0, 1, 9)).unwrap();
        assert!(e.value == 0.0 || e.value == 1.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn invariance_to_a_b_sigma() {
        let d = design(30, 4);
        let (gamma, delta) = (3.0, 2.0);
        let other = ModelParams::from_gamma(5.0, 2.0, gamma, 3.0, delta, 30);
        for k in 0..50 {
            let a = simulate_run(&d, gamma, delta, &Noise::Normal, &mut stream(1, Purpose::Generic, k)).unwrap();
            let b = simulate_run_with(&d, &other, &Noise::Normal, &mut stream(1, Purpose::Generic, k)).unwrap();
            for (u, v) in [(a.h_hat, b.h_hat), (a.gl_hat, b.gl_hat), (a.sigma_ratio, b.sigma_ratio), (a.delta_hat, b.delta_hat)] {
                assert!((u - v).abs() <= 1e-10 * (1.0 + u.abs()), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn known_plug_reproduces_true_parameter_statistics() {
        // Known mode must equal h and g_L computed directly from b̂_W, b̂_B
        let d = design(25, 3);
        let g = FunctionGrid::standard(d.summary(), 0.05).unwrap();
        let mut cfg = SimConfig::new(&d, &g, 2.0, 1.5, 1, 4);
        cfg.plug = Plug::Known;
        let (run, _, _) = cfg.replicate(Purpose::Coverage, 0).unwrap();
        let p = ModelParams::from_gamma(0.0, 0.0, 2.0, 1.0, 1.5, 25);
        let s = d.summary();
        let mut rng = stream(4, Purpose::Coverage, 0);
        let mut y = Vec::new();
        for i in 0..s.n {
            let eta: f64 = StandardNormal.sample(&mut rng);
            for j in 0..s.t {
                let eps: f64 = StandardNormal.sample(&mut rng);
                let _ = d.within()[i * s.t + j];
                y.push(p.xi * s.xbar_i[i] + libm::sqrt(1.5) * eta + eps);
            }
        }
        let fit = d.fit_gls(&y).unwrap();
        assert!((run.h_hat - d.hausman(fit.bw_hat, fit.bb_hat, 1.0, 1.5)).abs() < 1e-10);
        assert!((run.gl_hat - fit.bw_hat * libm::sqrt(s.ssw)).abs() < 1e-10);
    }
}
