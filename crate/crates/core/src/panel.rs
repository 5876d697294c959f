//! Balanced panel data, the within/between GLS estimators, the
//! variance-component estimators and the Hausman statistic.
//!
//! Under the correlated random effects model
//! `y_it = a + b x_it + ξ x̄_i + η_i + ε_it`, the GLS estimators of
//! `(a, b_W, b_B)` decouple on a balanced panel: `b̂_W` is the within
//! (fixed effects) slope and `(â, b̂_B)` is the OLS fit of `ȳ_i` on `x̄_i`,
//! whatever the value of `δ = σ_η²/σ_ε²`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::normal;
use crate::sum::{stable_sum, Neumaier};
use crate::{Error, Result};

/// One long-format observation `(unit, time, x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRecord {
    pub unit: String,
    pub time: String,
    pub x: f64,
    pub y: Option<f64>,
}

/// Balanced `N × T` panel, stored row-major by unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelData {
    unit_ids: Vec<String>,
    times: Vec<String>,
    x: Vec<f64>,
    y: Option<Vec<f64>>,
}

fn label_cmp(a: &str, b: &str, numeric: bool) -> Ordering {
    if numeric {
        let pa: f64 = a.trim().parse().unwrap_or(f64::NAN);
        let pb: f64 = b.trim().parse().unwrap_or(f64::NAN);
        pa.total_cmp(&pb).then_with(|| a.cmp(b))
    } else {
        a.cmp(b)
    }
}

fn all_numeric<'a, I: Iterator<Item = &'a String>>(mut it: I) -> bool {
    it.all(|s| s.trim().parse::<f64>().is_ok_and(|v| v.is_finite()))
}

impl PanelData {
    /// Builds a panel from row-major `N × T` matrices.
    pub fn new(
        unit_ids: Vec<String>,
        times: Vec<String>,
        x: Vec<f64>,
        y: Option<Vec<f64>>,
    ) -> Result<Self> {
        let (n, t) = (unit_ids.len(), times.len());
        if n < 2 || t < 2 {
            return Err(Error::PanelTooSmall { n, t });
        }
        if x.len() != n * t || y.as_ref().is_some_and(|y| y.len() != n * t) {
            return Err(Error::InvalidArgument("matrix size does not match N x T"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { column: "x" });
        }
        if y.as_ref().is_some_and(|y| y.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteValue { column: "y" });
        }
        Ok(Self {
            unit_ids,
            times,
            x,
            y,
        })
    }

    /// Design-only panel with integer labels.
    pub fn from_matrix(n: usize, t: usize, x: Vec<f64>, y: Option<Vec<f64>>) -> Result<Self> {
        let units = (1..=n).map(|i| alloc::format!("{i}")).collect();
        let times = (1..=t).map(|i| alloc::format!("{i}")).collect();
        Self::new(units, times, x, y)
    }

    /// Assembles a balanced panel from long-format records, sorted by
    /// `(unit, time)`. Labels sort numerically when every label parses as a
    /// number.
    pub fn from_long<I: IntoIterator<Item = LongRecord>>(records: I) -> Result<Self> {
        let records: Vec<LongRecord> = records.into_iter().collect();
        let mut cells: BTreeMap<(&str, &str), (f64, Option<f64>)> = BTreeMap::new();
        for r in &records {
            if cells.insert((&r.unit, &r.time), (r.x, r.y)).is_some() {
                return Err(Error::DuplicateCell {
                    unit: r.unit.clone(),
                    time: r.time.clone(),
                });
            }
        }
        let mut units: Vec<String> = records.iter().map(|r| r.unit.clone()).collect();
        let mut times: Vec<String> = records.iter().map(|r| r.time.clone()).collect();
        let unit_numeric = all_numeric(units.iter());
        let time_numeric = all_numeric(times.iter());
        units.sort_by(|a, b| label_cmp(a, b, unit_numeric));
        units.dedup();
        times.sort_by(|a, b| label_cmp(a, b, time_numeric));
        times.dedup();

        let has_y = records.iter().any(|r| r.y.is_some());
        let (n, t) = (units.len(), times.len());
        let mut x = Vec::with_capacity(n * t);
        let mut y = Vec::with_capacity(if has_y { n * t } else { 0 });
        for u in &units {
            let found = times
                .iter()
                .filter(|tm| cells.contains_key(&(u.as_str(), tm.as_str())))
                .count();
            if found != t {
                return Err(Error::UnbalancedPanel {
                    unit: u.clone(),
                    found,
                    expected: t,
                });
            }
            for tm in &times {
                let (xv, yv) = cells[&(u.as_str(), tm.as_str())];
                x.push(xv);
                if has_y {
                    match yv {
                        Some(v) => y.push(v),
                        None => {
                            return Err(Error::MissingValue {
                                column: "y",
                                unit: u.clone(),
                            })
                        }
                    }
                }
            }
        }
        Self::new(units, times, x, has_y.then_some(y))
    }

    pub fn n(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn t(&self) -> usize {
        self.times.len()
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    pub fn times(&self) -> &[String] {
        &self.times
    }

    /// Row-major covariate values.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> Option<&[f64]> {
        self.y.as_deref()
    }

    pub fn with_response(&self, y: Vec<f64>) -> Result<Self> {
        Self::new(self.unit_ids.clone(), self.times.clone(), self.x.clone(), Some(y))
    }

    fn require_y(&self) -> Result<&[f64]> {
        self.y.as_deref().ok_or(Error::MissingResponse)
    }
}

/// Per-design constants used by every conditional-on-x computation.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSummary {
    pub n: usize,
    pub t: usize,
    pub ssw: f64,
    pub ssb: f64,
    /// `r(x) = SSB / SSW`.
    pub r: f64,
    pub xbar_i: Vec<f64>,
    pub xbar: f64,
}

impl DesignSummary {
    /// `ρ(δ)` for this design.
    pub fn rho(&self, delta: f64) -> f64 {
        rho_of_delta_unchecked(self.r, delta, self.t)
    }

    /// `ψ` corresponding to the scaled non-exogeneity parameter `γ`.
    pub fn psi_of_gamma(&self, gamma: f64, delta: f64) -> f64 {
        let n = self.n as f64;
        let t_inv = 1.0 / self.t as f64;
        gamma / libm::sqrt((n / self.ssw) * ((self.r + delta + t_inv) / self.r))
    }

    /// Half-width scale `(σ²/SSW)^{1/2}`.
    pub fn scale(&self, sigma_eps: f64) -> f64 {
        sigma_eps / libm::sqrt(self.ssw)
    }
}

/// A design together with the deviations needed by the estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    summary: DesignSummary,
    /// `x_it − x̄_i`, row-major.
    within: Vec<f64>,
    /// `x̄_i − x̄`.
    between: Vec<f64>,
}

impl Design {
    pub fn new(p: &PanelData) -> Result<Self> {
        Self::from_x(p.n(), p.t(), p.x())
    }

    pub fn from_x(n: usize, t: usize, x: &[f64]) -> Result<Self> {
        if n < 2 || t < 2 {
            return Err(Error::PanelTooSmall { n, t });
        }
        if x.len() != n * t {
            return Err(Error::InvalidArgument("matrix size does not match N x T"));
        }
        let tf = t as f64;
        let xbar_i: Vec<f64> = x.chunks_exact(t).map(|row| stable_sum(row.iter().copied()) / tf).collect();
        let xbar = stable_sum(xbar_i.iter().copied()) / n as f64;
        let mut within = Vec::with_capacity(n * t);
        for (row, m) in x.chunks_exact(t).zip(&xbar_i) {
            within.extend(row.iter().map(|v| v - m));
        }
        let between: Vec<f64> = xbar_i.iter().map(|m| m - xbar).collect();
        let ssw = stable_sum(within.iter().map(|v| v * v));
        let ssb = stable_sum(between.iter().map(|v| v * v));
        let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let tiny = (64.0 * f64::EPSILON * scale) * (64.0 * f64::EPSILON * scale) * x.len() as f64;
        if ssw <= tiny {
            return Err(Error::DegenerateDesign("no within-unit variation in x (SSW = 0)"));
        }
        if ssb <= tiny {
            return Err(Error::DegenerateDesign("no between-unit variation in x (SSB = 0)"));
        }
        Ok(Self {
            summary: DesignSummary {
                n,
                t,
                ssw,
                ssb,
                r: ssb / ssw,
                xbar_i,
                xbar,
            },
            within,
            between,
        })
    }

    pub fn summary(&self) -> &DesignSummary {
        &self.summary
    }

    pub fn within(&self) -> &[f64] {
        &self.within
    }

    pub fn between(&self) -> &[f64] {
        &self.between
    }

    fn check_y(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.within.len() {
            return Err(Error::InvalidArgument("response length does not match design"));
        }
        Ok(())
    }

    /// Unit means `ȳ_i` and the closed-form GLS estimates.
    fn gls_parts(&self, y: &[f64]) -> (Vec<f64>, f64, GlsFit) {
        let s = &self.summary;
        let tf = s.t as f64;
        let ybar_i: Vec<f64> = y.chunks_exact(s.t).map(|row| stable_sum(row.iter().copied()) / tf).collect();
        let ybar = stable_sum(ybar_i.iter().copied()) / s.n as f64;
        let mut sxy_w = Neumaier::default();
        for ((row, xrow), m) in y.chunks_exact(s.t).zip(self.within.chunks_exact(s.t)).zip(&ybar_i) {
            for (yv, xd) in row.iter().zip(xrow) {
                sxy_w.add(xd * (yv - m));
            }
        }
        let sxy_b = stable_sum(self.between.iter().zip(&ybar_i).map(|(xd, m)| xd * (m - ybar)));
        let bw_hat = sxy_w.value() / s.ssw;
        let bb_hat = sxy_b / s.ssb;
        let a_hat = ybar - bb_hat * s.xbar;
        (ybar_i, ybar, GlsFit { a_hat, bw_hat, bb_hat })
    }

    pub fn fit_gls(&self, y: &[f64]) -> Result<GlsFit> {
        self.check_y(y)?;
        Ok(self.gls_parts(y).2)
    }

    /// Hausman statistic `h(σ_ε, δ)` from the two slope estimates.
    pub fn hausman(&self, bw_hat: f64, bb_hat: f64, sigma_eps: f64, delta: f64) -> f64 {
        let s = &self.summary;
        let var = sigma_eps * sigma_eps * (1.0 / s.ssw + (delta + 1.0 / s.t as f64) / s.ssb);
        (bw_hat - bb_hat) / libm::sqrt(var)
    }

    /// Variance-component estimates `σ̂_ε², σ̂_η², δ̂` and `ĥ`.
    pub fn estimate(&self, y: &[f64]) -> Result<FitResult> {
        self.check_y(y)?;
        let s = &self.summary;
        let (n, t) = (s.n as f64, s.t as f64);
        let (ybar_i, ybar, fit) = self.gls_parts(y);
        let mut rss = Neumaier::default();
        let mut scale = Neumaier::default();
        for ((row, xrow), m) in y.chunks_exact(s.t).zip(self.within.chunks_exact(s.t)).zip(&ybar_i) {
            for (yv, xd) in row.iter().zip(xrow) {
                let r = (yv - m) - fit.bw_hat * xd;
                rss.add(r * r);
                scale.add(yv * yv);
            }
        }
        let rss = rss.value();
        if rss <= 1e-24 * scale.value() {
            return Err(Error::ZeroResidualVariance);
        }
        let sigma_eps2_hat = rss / (n * (t - 1.0));
        let between_rss = stable_sum(self.between.iter().zip(&ybar_i).map(|(xd, m)| {
            let r = (m - ybar) - fit.bb_hat * xd;
            r * r
        }));
        let sigma_eta2_hat = between_rss / n - sigma_eps2_hat / t;
        let delta_hat = (sigma_eta2_hat / sigma_eps2_hat).max(0.0);
        let h_hat = self.hausman(fit.bw_hat, fit.bb_hat, libm::sqrt(sigma_eps2_hat), delta_hat);
        Ok(FitResult {
            a_hat: fit.a_hat,
            bw_hat: fit.bw_hat,
            bb_hat: fit.bb_hat,
            sigma_eps2_hat,
            sigma_eta2_hat,
            delta_hat,
            h_hat,
        })
    }
}

/// GLS estimates of `(a, b_W, b_B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlsFit {
    pub a_hat: f64,
    pub bw_hat: f64,
    pub bb_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub a_hat: f64,
    pub bw_hat: f64,
    pub bb_hat: f64,
    pub sigma_eps2_hat: f64,
    /// Untruncated; may be negative.
    pub sigma_eta2_hat: f64,
    /// `max(0, σ̂_η² / σ̂_ε²)`.
    pub delta_hat: f64,
    /// Hausman statistic at `(σ̂_ε, δ̂)`.
    pub h_hat: f64,
}

impl FitResult {
    pub fn sigma_eps_hat(&self) -> f64 {
        libm::sqrt(self.sigma_eps2_hat)
    }
}

/// Parameters of the correlated random effects model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub xi: f64,
    pub sigma_eps: f64,
    pub delta: f64,
}

impl ModelParams {
    /// Parameters with `ξ` chosen so that `γ = ξ √N / σ_ε` has the given value.
    pub fn from_gamma(a: f64, b: f64, gamma: f64, sigma_eps: f64, delta: f64, n: usize) -> Self {
        Self {
            a,
            b,
            xi: gamma * sigma_eps / libm::sqrt(n as f64),
            sigma_eps,
            delta,
        }
    }

    /// `γ = ξ √N / σ_ε`.
    pub fn gamma(&self, n: usize) -> f64 {
        self.xi * libm::sqrt(n as f64) / self.sigma_eps
    }

    /// `(b_W, b_B) = (b, b + ξ)`.
    pub fn within_between(&self) -> (f64, f64) {
        (self.b, self.b + self.xi)
    }
}

/// A closed real interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn design_summary(p: &PanelData) -> Result<DesignSummary> {
    Ok(Design::new(p)?.summary)
}

/// GLS estimates under the reparameterised model. `b̂_W` does not depend on
/// `δ ≥ 0`; nor, on a balanced panel, do `â` and `b̂_B`.
pub fn fit_gls(p: &PanelData, delta: f64) -> Result<GlsFit> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument("delta must be nonnegative"));
    }
    Design::new(p)?.fit_gls(p.require_y()?)
}

pub fn estimate_variance_components(p: &PanelData) -> Result<FitResult> {
    Design::new(p)?.estimate(p.require_y()?)
}

pub fn hausman_stat(p: &PanelData, sigma_eps: f64, delta: f64) -> Result<f64> {
    if !(sigma_eps > 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArgument("need sigma_eps > 0 and delta >= 0"));
    }
    let design = Design::new(p)?;
    let fit = design.fit_gls(p.require_y()?)?;
    Ok(design.hausman(fit.bw_hat, fit.bb_hat, sigma_eps, delta))
}

fn rho_of_delta_unchecked(r: f64, delta: f64, t: usize) -> f64 {
    if delta == f64::INFINITY {
        return 0.0;
    }
    -libm::sqrt(r / (r + delta + 1.0 / t as f64))
}

/// Correlation `ρ(δ)` between `b̂_W` and `b̂_B − b̂_W`.
pub fn rho_of_delta(r: f64, delta: f64, t: usize) -> Result<f64> {
    if !(r > 0.0) || !(delta >= 0.0) || t < 2 {
        return Err(Error::InvalidArgument("need r > 0, delta >= 0, T >= 2"));
    }
    Ok(rho_of_delta_unchecked(r, delta, t))
}

/// Inverse of [`rho_of_delta`], clamped below at `δ = 0`.
pub fn delta_of_rho(r: f64, rho: f64, t: usize) -> Result<f64> {
    if rho == 0.0 {
        return Err(Error::NoFiniteSolution);
    }
    if !(r > 0.0) || !(rho > -1.0 && rho < 0.0) || t < 2 {
        return Err(Error::InvalidArgument("need r > 0, rho in (-1, 0), T >= 2"));
    }
    Ok((r * (1.0 / (rho * rho) - 1.0) - 1.0 / t as f64).max(0.0))
}

/// Fixed effects interval `L(σ_ε, c) = [b̂_W ± z_{(c+1)/2} (σ_ε²/SSW)^{1/2}]`.
pub fn fixed_effects_interval(p: &PanelData, sigma_eps: f64, c: f64) -> Result<Interval> {
    if !(sigma_eps > 0.0) || !(c >= 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument("need sigma_eps > 0 and c in [0, 1)"));
    }
    let design = Design::new(p)?;
    let fit = design.fit_gls(p.require_y()?)?;
    Ok(fixed_effects_from(fit.bw_hat, design.summary().scale(sigma_eps), c))
}

pub(crate) fn fixed_effects_from(bw_hat: f64, scale: f64, c: f64) -> Interval {
    let half = normal::quantile((c + 1.0) / 2.0) * scale;
    Interval {
        lower: bw_hat - half,
        upper: bw_hat + half,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(u: &str, t: &str, x: f64, y: Option<f64>) -> LongRecord {
        LongRecord {
            unit: u.into(),
            time: t.into(),
            x,
            y,
        }
    }

    #[test]
    fn design_summary_hand_example() {
        let p = PanelData::from_matrix(2, 2, vec![0.0, 2.0, 1.0, 3.0], None).unwrap();
        let s = design_summary(&p).unwrap();
        assert_eq!(s.xbar_i, vec![1.0, 2.0]);
        assert!((s.ssw - 4.0).abs() < 1e-15);
        assert!((s.ssb - 0.5).abs() < 1e-15);
        assert!((s.r - 0.125).abs() < 1e-15);
        assert_eq!(s.r, s.ssb / s.ssw);
    }

    #[test]
    fn degenerate_designs_are_rejected() {
        let zeros = PanelData::from_matrix(2, 2, vec![0.0; 4], None).unwrap();
        assert!(matches!(design_summary(&zeros), Err(Error::DegenerateDesign(_))));
        let const_within = PanelData::from_matrix(2, 3, vec![0.1, 0.1, 0.1, 0.7, 0.7, 0.7], None).unwrap();
        assert!(matches!(design_summary(&const_within), Err(Error::DegenerateDesign(_))));
        let equal_means = PanelData::from_matrix(2, 2, vec![0.0, 2.0, 2.0, 0.0], None).unwrap();
        assert!(matches!(design_summary(&equal_means), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn long_format_sorting_and_errors() {
        let recs = vec![
            rec("10", "2", 1.0, None),
            rec("2", "1", 2.0, None),
            rec("10", "1", 3.0, None),
            rec("2", "2", 4.0, None),
        ];
        let p = PanelData::from_long(recs).unwrap();
        assert_eq!(p.unit_ids(), &[String::from("2"), String::from("10")]);
        assert_eq!(p.x(), &[2.0, 4.0, 3.0, 1.0]);

        let dup = vec![rec("a", "1", 1.0, None), rec("a", "1", 2.0, None)];
        assert!(matches!(PanelData::from_long(dup), Err(Error::DuplicateCell { .. })));

        let unbalanced = vec![
            rec("a", "1", 1.0, None),
            rec("a", "2", 1.0, None),
            rec("b", "1", 1.0, None),
        ];
        assert_eq!(
            PanelData::from_long(unbalanced),
            Err(Error::UnbalancedPanel {
                unit: "b".into(),
                found: 1,
                expected: 2
            })
        );

        let missing_y = vec![
            rec("a", "1", 1.0, Some(1.0)),
            rec("a", "2", 1.0, Some(1.0)),
            rec("b", "1", 1.0, None),
            rec("b", "2", 1.0, Some(1.0)),
        ];
        assert!(matches!(PanelData::from_long(missing_y), Err(Error::MissingValue { .. })));
    }

    #[test]
    fn noiseless_fit_recovers_coefficients() {
        let x = vec![0.0, 2.0, 5.0, 1.0, 3.0, 4.0, 7.0, 2.0, -1.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 + 2.0 * v).collect();
        let p = PanelData::from_matrix(3, 3, x, Some(y)).unwrap();
        for delta in [0.0, 1.0, 40.0] {
            let fit = fit_gls(&p, delta).unwrap();
            assert!((fit.bw_hat - 2.0).abs() < 1e-12);
            assert!((fit.bb_hat - 2.0).abs() < 1e-12);
            assert!((fit.a_hat - 3.0).abs() < 1e-12);
        }
        assert_eq!(estimate_variance_components(&p), Err(Error::ZeroResidualVariance));
    }

    #[test]
    fn pure_between_signal() {
        let x = vec![0.0, 2.0, 5.0, 1.0, 3.0, 4.0, 7.0, 2.0, -2.0];
        let p0 = PanelData::from_matrix(3, 3, x.clone(), None).unwrap();
        let s = design_summary(&p0).unwrap();
        let y: Vec<f64> = (0..9).map(|k| s.xbar_i[k / 3]).collect();
        let p = p0.with_response(y).unwrap();
        let fit = fit_gls(&p, 0.5).unwrap();
        assert!(fit.bw_hat.abs() < 1e-12);
        assert!((fit.bb_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hausman_zero_and_scaling() {
        let x = vec![0.0, 2.0, 5.0, 1.0, 3.0, 4.0, 7.0, 2.0, -1.0];
        let y = vec![0.3, 1.1, 2.0, -0.4, 1.9, 0.2, 3.3, 0.9, 0.1];
        let p = PanelData::from_matrix(3, 3, x.clone(), Some(y)).unwrap();
        let h1 = hausman_stat(&p, 1.0, 2.0).unwrap();
        let h2 = hausman_stat(&p, 2.0, 2.0).unwrap();
        assert!((h1 - 2.0 * h2).abs() < 1e-12);
        let yz: Vec<f64> = x.iter().map(|v| 1.0 + 0.5 * v).collect();
        let pz = p.with_response(yz).unwrap();
        assert!(hausman_stat(&pz, 1.0, 2.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn variance_components_and_identity() {
        let x = vec![0.0, 2.0, 5.0, 1.0, 3.0, 4.0, 7.0, 2.0, -1.0, 0.5, 0.5, 2.5];
        let y = vec![0.3, 1.1, 2.0, -0.4, 1.9, 0.2, 3.3, 0.9, 0.1, 0.7, -0.2, 1.4];
        let p = PanelData::from_matrix(4, 3, x, Some(y)).unwrap();
        let fit = estimate_variance_components(&p).unwrap();
        assert!(fit.sigma_eps2_hat > 0.0);
        assert_eq!(fit.delta_hat, (fit.sigma_eta2_hat / fit.sigma_eps2_hat).max(0.0));
        let h = hausman_stat(&p, fit.sigma_eps_hat(), fit.delta_hat).unwrap();
        assert_eq!(fit.h_hat, h);
    }

    #[test]
    fn rho_examples() {
        assert!((rho_of_delta(1.0, 0.0, 4).unwrap() + 0.894_427_190_999_915_9).abs() < 1e-15);
        assert!((rho_of_delta(1.0, 12.774, 4).unwrap() + libm::sqrt(1.0 / 14.024)).abs() < 1e-15);
        assert!((rho_of_delta(1.0, 12.774, 4).unwrap() + 0.267_032_454_960_594_3).abs() < 1e-15);
        assert!(rho_of_delta(1.0, 1e12, 4).unwrap() > -1e-5);
        let back = delta_of_rho(0.7, rho_of_delta(0.7, 3.0, 4).unwrap(), 4).unwrap();
        assert!((back - 3.0).abs() < 1e-12);
        assert!(delta_of_rho(1.0, -0.894_427_190_999_915_9, 4).unwrap().abs() < 1e-12);
        assert_eq!(delta_of_rho(1.0, -0.97, 4).unwrap(), 0.0);
        assert_eq!(delta_of_rho(1.0, 0.0, 4), Err(Error::NoFiniteSolution));
    }

    #[test]
    fn fixed_effects_interval_width() {
        let x = vec![0.0, 2.0, 5.0, 1.0, 3.0, 4.0, 7.0, 2.0, -1.0];
        let y = vec![0.3, 1.1, 2.0, -0.4, 1.9, 0.2, 3.3, 0.9, 0.1];
        let p = PanelData::from_matrix(3, 3, x, Some(y)).unwrap();
        let s = design_summary(&p).unwrap();
        let l = fixed_effects_interval(&p, 1.5, 0.95).unwrap();
        let bw = fit_gls(&p, 0.0).unwrap().bw_hat;
        let half = 1.959_963_984_540_054 * 1.5 / libm::sqrt(s.ssw);
        assert!((l.upper - bw - half).abs() < 1e-14);
        assert!((bw - l.lower - half).abs() < 1e-14);
        let point = fixed_effects_interval(&p, 1.5, 0.0).unwrap();
        assert_eq!(point.lower, point.upper);
    }
}
