//! Coverage-constrained minimisation of the weighted expected-length
//! criterion over the 11 free knots, and the choice of the weight `φ` that
//! balances gain against maximum loss.

use alloc::vec::Vec;

use crate::coverage::{uniform_grid, Kernel, KgContext, NodeValues, PsiPoint};
use crate::pair::{BasisRow, KnotFunctionPair, SplineBasis, FREE_KNOTS, ODD_KNOTS};
use crate::sqp::{self, Problem};
use crate::{Error, Result};

/// Step of the ψ grid used to verify coverage and to take `max SEL`.
pub const VERIFY_STEP: f64 = 0.01;
/// Coverage shortfall tolerated on the verification grid.
pub const COVERAGE_SLACK: f64 = 5e-4;
/// Shortfall on the verification grid that triggers another cutting plane.
const CUT_TOL: f64 = 1e-8;
const MAX_ROUNDS: usize = 5;
/// `ρ` at or above this is treated as carrying no usable information.
pub const RHO_NEGLIGIBLE: f64 = -0.05;
const GAIN_FLOOR: f64 = 1e-3;
const BALANCE_TOL: f64 = 1e-3;

/// A solved knot vector with its summary numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedPair {
    pub pair: KnotFunctionPair,
    pub phi: f64,
    /// `1 − SEL(0)²`.
    pub gain: f64,
    /// `max_ψ SEL(ψ)² − 1`.
    pub loss: f64,
    pub min_cp: f64,
    pub max_sel: f64,
    pub sel_at_zero: f64,
    pub converged: bool,
    /// `max(0, 1 − α − min_cp)` on the verification grid.
    pub constraint_violation: f64,
}

impl OptimizedPair {
    /// Evaluates the summary numbers of an arbitrary pair.
    pub fn summarize(ctx: &KgContext, pair: KnotFunctionPair, phi: f64, converged: bool) -> Self {
        let kernel = Kernel::new(ctx);
        let v = kernel.values(&pair.free());
        let verify = uniform_grid(ctx.d() + 4.0, VERIFY_STEP);
        let min_cp = verify
            .iter()
            .map(|&psi| kernel.coverage(&v, &kernel.point(psi)))
            .fold(f64::INFINITY, f64::min);
        let sel_at_zero = kernel.sel(&v, 0.0);
        let max_sel = verify.iter().map(|&psi| kernel.sel(&v, psi)).fold(f64::NEG_INFINITY, f64::max);
        Self {
            pair,
            phi,
            gain: 1.0 - sel_at_zero * sel_at_zero,
            loss: max_sel * max_sel - 1.0,
            min_cp,
            max_sel,
            sel_at_zero,
            converged,
            constraint_violation: (1.0 - ctx.alpha() - min_cp).max(0.0),
        }
    }

    pub fn standard(ctx: &KgContext, phi: f64) -> Result<Self> {
        let pair = KnotFunctionPair::standard_with_support(ctx.alpha(), ctx.d())?;
        Ok(Self::summarize(ctx, pair, phi, true))
    }
}

struct KnotProblem<'a> {
    kernel: &'a Kernel,
    phi: f64,
    points: Vec<PsiPoint>,
    fe_rows: Vec<BasisRow>,
}

impl Problem for KnotProblem<'_> {
    fn dim(&self) -> usize {
        FREE_KNOTS
    }

    fn constraints(&self) -> usize {
        self.points.len() + self.fe_rows.len()
    }

    fn objective(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.kernel.objective_grad(x, self.phi, grad)
    }

    fn eval_constraints(&self, x: &[f64], c: &mut [f64], jac: Option<&mut [f64]>) {
        let v: NodeValues = self.kernel.values(x);
        let np = self.points.len();
        let even = &x[ODD_KNOTS..];
        match jac {
            Some(jac) => {
                for (k, p) in self.points.iter().enumerate() {
                    let row = &mut jac[k * FREE_KNOTS..(k + 1) * FREE_KNOTS];
                    c[k] = self.kernel.coverage_excess_grad(&v, p, row);
                }
                for (k, r) in self.fe_rows.iter().enumerate() {
                    c[np + k] = r.even_value(even, self.kernel.z());
                    let row = &mut jac[(np + k) * FREE_KNOTS..(np + k + 1) * FREE_KNOTS];
                    row.fill(0.0);
                    row[ODD_KNOTS..ODD_KNOTS + r.even.len()].copy_from_slice(&r.even);
                }
            }
            None => {
                for (k, p) in self.points.iter().enumerate() {
                    c[k] = self.kernel.coverage_excess(&v, p);
                }
                for (k, r) in self.fe_rows.iter().enumerate() {
                    c[np + k] = r.even_value(even, self.kernel.z());
                }
            }
        }
    }
}

/// ψ values on `grid` that are local minima of `cp` with `cp < −tol`.
fn violated_minima(grid: &[f64], cp: &[f64], tol: f64) -> Vec<f64> {
    (0..grid.len())
        .filter(|&i| {
            cp[i] < -tol
                && (i == 0 || cp[i] <= cp[i - 1])
                && (i + 1 == grid.len() || cp[i] <= cp[i + 1])
        })
        .map(|i| grid[i])
        .collect()
}

/// Minimises the criterion with weight `phi` subject to coverage at least
/// `1 − α` on the context's ψ grid and `f_e ≥ 0`, starting from the
/// standard pair. Coverage is then checked on a 0.01-step grid and any
/// violated ψ is added as a constraint, for at most five rounds.
pub fn optimize_pair(ctx: &KgContext, phi: f64) -> Result<OptimizedPair> {
    if !(0.0..=1.0).contains(&phi) {
        return Err(Error::InvalidArgument("phi must lie in [0, 1]"));
    }
    let kernel = Kernel::new(ctx);
    let basis = SplineBasis::new(ctx.d());
    let fe_rows = uniform_grid(ctx.d(), ctx.d() / 24.0)
        .into_iter()
        .map(|w| basis.row(w))
        .collect();
    let mut problem = KnotProblem {
        kernel: &kernel,
        phi,
        points: ctx.psi_constraint_grid().iter().map(|&psi| kernel.point(psi)).collect(),
        fe_rows,
    };
    let verify = uniform_grid(ctx.d() + 4.0, VERIFY_STEP);
    let verify_points: Vec<PsiPoint> = verify.iter().map(|&psi| kernel.point(psi)).collect();

    let opts = sqp::Options::default();
    let start = KnotFunctionPair::standard_with_support(ctx.alpha(), ctx.d())?.free();
    let mut x = start.to_vec();
    let mut converged = false;
    let mut cut_clean = false;
    for _ in 0..MAX_ROUNDS {
        let sol = sqp::solve(&problem, &x, &opts);
        x = sol.x;
        converged = sol.converged;
        let v = kernel.values(&x);
        let excess: Vec<f64> = verify_points.iter().map(|p| kernel.coverage_excess(&v, p)).collect();
        let cuts = violated_minima(&verify, &excess, CUT_TOL);
        if cuts.is_empty() {
            cut_clean = true;
            break;
        }
        problem.points.extend(cuts.iter().map(|&psi| kernel.point(psi)));
    }

    for v in x[ODD_KNOTS..].iter_mut() {
        // the f_e ≥ 0 constraint holds to solver tolerance; knots must be
        // exactly nonnegative
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let pair = KnotFunctionPair::from_free(&x, ctx.alpha(), ctx.d())?;
    let out = OptimizedPair::summarize(ctx, pair, phi, converged && cut_clean);
    if out.constraint_violation > COVERAGE_SLACK {
        return Err(Error::OptimizerFailure {
            rho: ctx.rho(),
            violation: out.constraint_violation,
        });
    }
    Ok(out)
}

/// The φ grid scanned by [`select_phi`]: `0.02, 0.06, …, 0.98`.
pub fn phi_scan_grid() -> Vec<f64> {
    (0..25).map(|i| 0.02 + 0.04 * i as f64).collect()
}

/// Chooses `φ*` so that the gain `1 − SEL(0)²` equals the maximum loss
/// `max SEL² − 1`, by scanning [`phi_scan_grid`] and bisecting the first
/// sign change of `gain − loss` to within `1e-3`.
///
/// For `ρ ≥ −0.05`, or when no scanned φ gains at least `1e-3`, the standard
/// pair with `φ = 1` is returned. Without a sign change the scanned φ with
/// the smallest `|gain − loss|` is used.
pub fn select_phi(ctx: &KgContext) -> Result<OptimizedPair> {
    if ctx.rho() >= RHO_NEGLIGIBLE {
        return OptimizedPair::standard(ctx, 1.0);
    }
    let scan = crate::par::map(&phi_scan_grid(), |&phi| optimize_pair(ctx, phi))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    select_from_scan(ctx, scan)
}

pub(crate) fn select_from_scan(ctx: &KgContext, scan: Vec<OptimizedPair>) -> Result<OptimizedPair> {
    if scan.iter().all(|o| o.gain < GAIN_FLOOR) {
        return OptimizedPair::standard(ctx, 1.0);
    }
    let balance = |o: &OptimizedPair| o.gain - o.loss;
    // the first sign change from the small-φ end; near φ = 1 gain and loss
    // both vanish, so a small |gain − loss| there is not a solution
    let bracket = scan
        .windows(2)
        .position(|w| balance(&w[0]).signum() != balance(&w[1]).signum());
    let Some(i) = bracket else {
        let best = scan
            .iter()
            .min_by(|a, b| balance(a).abs().total_cmp(&balance(b).abs()))
            .cloned()
            .expect("scan is non-empty");
        return Ok(best);
    };
    let (mut lo, mut hi) = (scan[i].clone(), scan[i + 1].clone());
    let mut best = if balance(&lo).abs() <= balance(&hi).abs() { lo.clone() } else { hi.clone() };
    while balance(&best).abs() > BALANCE_TOL && hi.phi - lo.phi > 1e-6 {
        let mid = optimize_pair(ctx, 0.5 * (lo.phi + hi.phi))?;
        let b = balance(&mid);
        if b.abs() < balance(&best).abs() {
            best = mid.clone();
        }
        if b.signum() == balance(&lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}
