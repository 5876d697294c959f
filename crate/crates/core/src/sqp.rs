//! Sequential quadratic programming for small dense problems
//! `min f(x)` subject to `c(x) ≥ 0`.
//!
//! Each iteration solves a QP with a damped-BFGS approximation of the
//! Lagrangian Hessian and an `‖d‖∞ ≤ Δ` trust box, then backtracks under a
//! line-search filter on `(violation, f)`. A second-order correction is
//! tried when the full step is rejected.

use alloc::vec;
use alloc::vec::Vec;

use crate::qp;

const MIN_RADIUS: f64 = 1e-7;
const GAMMA: f64 = 1e-5;

/// A smooth inequality-constrained problem with analytic first derivatives.
pub trait Problem {
    fn dim(&self) -> usize;
    fn constraints(&self) -> usize;
    /// Returns `f(x)` and writes `∇f(x)`.
    fn objective(&self, x: &[f64], grad: &mut [f64]) -> f64;
    /// Writes `c(x)` and, if `jac` is given, the row-major Jacobian.
    fn eval_constraints(&self, x: &[f64], c: &mut [f64], jac: Option<&mut [f64]>);
}

#[derive(Debug, Clone)]
pub struct Options {
    pub max_iter: usize,
    /// Stop when `‖d‖∞` falls below this.
    pub step_tol: f64,
    /// Stop when the objective stalls to this relative change for three
    /// iterations while feasible.
    pub f_tol: f64,
    /// Constraint violation accepted as feasible.
    pub feas_tol: f64,
    /// Below this violation a descent step is judged on `f` alone, and may
    /// raise the violation up to this.
    pub violation_cap: f64,
    /// Box half-width on each QP step.
    pub max_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iter: 300,
            step_tol: 1e-9,
            f_tol: 1e-11,
            feas_tol: 1e-9,
            violation_cap: 1e-6,
            max_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub f: f64,
    pub lambda: Vec<f64>,
    /// `max_k max(0, −c_k(x))`.
    pub violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Point {
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    c: Vec<f64>,
    jac: Vec<f64>,
}

impl Point {
    fn eval<P: Problem>(p: &P, x: Vec<f64>) -> Self {
        let (n, m) = (p.dim(), p.constraints());
        let mut g = vec![0.0; n];
        let f = p.objective(&x, &mut g);
        let mut c = vec![0.0; m];
        let mut jac = vec![0.0; m * n];
        p.eval_constraints(&x, &mut c, Some(&mut jac));
        Self { x, f, g, c, jac }
    }
}

fn max_violation(c: &[f64]) -> f64 {
    c.iter().fold(0.0_f64, |acc, &v| acc.max(-v))
}

/// `(f(x), max violation)` at a trial point.
fn eval_trial<P: Problem>(p: &P, x: &[f64], scratch_g: &mut [f64], scratch_c: &mut [f64]) -> (f64, f64) {
    let f = p.objective(x, scratch_g);
    p.eval_constraints(x, scratch_c, None);
    (f, max_violation(scratch_c))
}

/// Solves the step QP. `rhs_k` is the required lower bound on `J_k d`.
fn step_qp(b: &[f64], g: &[f64], jac: &[f64], rhs: &[f64], max_step: f64) -> Option<qp::QpSolution> {
    let n = g.len();
    let m = rhs.len();
    let mut c = Vec::with_capacity((m + 2 * n) * n);
    let mut lo = Vec::with_capacity(m + 2 * n);
    c.extend_from_slice(jac);
    lo.extend_from_slice(rhs);
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; n];
            row[i] = sign;
            c.extend_from_slice(&row);
            lo.push(-max_step);
        }
    }
    qp::solve(b, g, &c, &lo).ok()
}

/// Runs SQP from `x0`.
pub fn solve<P: Problem>(problem: &P, x0: &[f64], opts: &Options) -> Solution {
    let n = problem.dim();
    let m = problem.constraints();
    let mut pt = Point::eval(problem, x0.to_vec());
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        b[i * n + i] = 1.0;
    }
    let mut first_update = true;
    let mut lambda = vec![0.0; m];
    let mut stall = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut sg = vec![0.0; n];
    let mut sc = vec![0.0; m];
    let mut radius = opts.max_step;
    let mut filter: Vec<(f64, f64)> = Vec::new();
    let h_max = 1e4 * max_violation(&pt.c).max(1.0);

    for it in 0..opts.max_iter {
        iterations = it + 1;
        // Linearised constraints J d ≥ −c, asking only for a fraction θ of
        // the violation to be removed if that is inconsistent within the box.
        let mut sol = None;
        for theta in [1.0, 0.5, 0.25, 0.1, 0.03, 0.01, 0.0] {
            let rhs: Vec<f64> = pt.c.iter().map(|&ck| -ck + (1.0 - theta) * ck.min(0.0)).collect();
            if let Some(s) = step_qp(&b, &pt.g, &pt.jac, &rhs, radius) {
                sol = Some(s);
                break;
            }
        }
        let Some(sol) = sol else { break };
        let d = &sol.x;
        lambda.copy_from_slice(&sol.lambda[..m]);
        let dnorm = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let viol = max_violation(&pt.c);
        // a tiny step only signals convergence when the radius did not cut it
        if dnorm < opts.step_tol && dnorm < 0.5 * radius {
            converged = viol <= opts.feas_tol;
            break;
        }

        // Line-search filter. With a small violation and a descent
        // direction the step must satisfy Armijo on f ("f-step"); otherwise
        // it must cut either the violation or f relative to the current point
        // and every filter entry. No penalty weight is involved, which
        // matters because nearly dependent ψ constraints give huge, unstable
        // multipliers.
        let f0 = pt.f;
        let gd: f64 = pt.g.iter().zip(d).map(|(a, b)| a * b).sum::<f64>();
        let cap = opts.violation_cap.max(opts.feas_tol);
        let f_step = viol <= cap && gd < 0.0;
        let acceptable = |f1: f64, h1: f64, a: f64| -> bool {
            if !(f1.is_finite() && h1 <= h_max) || filter.iter().any(|&(hj, fj)| h1 >= hj && f1 >= fj) {
                return false;
            }
            if f_step {
                h1 <= cap && f1 <= f0 + 1e-4 * a * gd
            } else {
                h1 <= (1.0 - GAMMA) * viol || f1 <= f0 - GAMMA * viol
            }
        };
        let trial = |x: &[f64], step: &[f64], a: f64| -> Vec<f64> { x.iter().zip(step).map(|(xi, di)| xi + a * di).collect() };

        let mut x_new = trial(&pt.x, d, 1.0);
        let (f1, h1) = eval_trial(problem, &x_new, &mut sg, &mut sc);
        let mut accepted = acceptable(f1, h1, 1.0);
        if !accepted {
            // second-order correction
            let rhs: Vec<f64> = (0..m)
                .map(|k| {
                    let jd: f64 = (0..n).map(|j| pt.jac[k * n + j] * d[j]).sum();
                    -(sc[k] - jd)
                })
                .collect();
            if let Some(soc) = step_qp(&b, &pt.g, &pt.jac, &rhs, radius) {
                let xs = trial(&pt.x, &soc.x, 1.0);
                let (f1, h1) = eval_trial(problem, &xs, &mut sg, &mut sc);
                if acceptable(f1, h1, 1.0) {
                    x_new = xs;
                    accepted = true;
                }
            }
        }
        let mut a = 1.0;
        while !accepted {
            a *= 0.5;
            if a < 1e-10 {
                break;
            }
            x_new = trial(&pt.x, d, a);
            let (f1, h1) = eval_trial(problem, &x_new, &mut sg, &mut sc);
            accepted = acceptable(f1, h1, a);
        }
        if !accepted {
            converged = viol <= opts.feas_tol;
            break;
        }
        if !f_step {
            filter.push(((1.0 - GAMMA) * viol, f0 - GAMMA * viol));
        }

        let new = Point::eval(problem, x_new);
        // the box acts as a trust radius: shrink it to what the line search
        // accepted, grow it after full steps
        radius = if a == 1.0 { (2.0 * radius).min(opts.max_step) } else { (2.0 * a * dnorm).max(MIN_RADIUS) };
        // damped BFGS on the Lagrangian
        let s: Vec<f64> = new.x.iter().zip(&pt.x).map(|(a, b)| a - b).collect();
        let mut y = vec![0.0; n];
        for j in 0..n {
            let mut acc = new.g[j] - pt.g[j];
            for k in 0..m {
                if lambda[k] != 0.0 {
                    acc -= lambda[k] * (new.jac[k * n + j] - pt.jac[k * n + j]);
                }
            }
            y[j] = acc;
        }
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        if ss > 0.0 {
            if first_update && sy > 0.0 {
                let yy: f64 = y.iter().map(|v| v * v).sum();
                let scale = yy / sy;
                for v in b.iter_mut() {
                    *v *= scale;
                }
                first_update = false;
            }
            let bs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| b[i * n + j] * s[j]).sum()).collect();
            let sbs: f64 = s.iter().zip(&bs).map(|(a, b)| a * b).sum();
            if sbs > 0.0 {
                let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
                let r: Vec<f64> = (0..n).map(|i| theta * y[i] + (1.0 - theta) * bs[i]).collect();
                let sr: f64 = s.iter().zip(&r).map(|(a, b)| a * b).sum();
                if sr > 0.0 {
                    for i in 0..n {
                        for j in 0..n {
                            b[i * n + j] += r[i] * r[j] / sr - bs[i] * bs[j] / sbs;
                        }
                    }
                }
            }
        }

        let df = (new.f - pt.f).abs();
        let feasible = max_violation(&new.c) <= opts.feas_tol;
        pt = new;
        if feasible && df <= opts.f_tol * (1.0 + pt.f.abs()) {
            stall += 1;
            if stall >= 3 {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }

    let violation = max_violation(&pt.c);
    Solution {
        x: pt.x,
        f: pt.f,
        lambda,
        violation,
        iterations,
        converged,
    }
}
