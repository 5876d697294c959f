//! Dense strictly convex quadratic programming by the Goldfarb–Idnani dual
//! active-set method.
//!
//! Solves `min ½ xᵀGx + aᵀx` subject to `C x ≥ b`, with `G` symmetric
//! positive definite. The method starts from the unconstrained minimiser and
//! adds violated constraints one at a time, dropping active ones whose dual
//! variable would turn negative, so no feasible starting point is needed.
//! `J = L⁻ᵀQ` and the upper-triangular `R` are maintained with Givens
//! rotations.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpError {
    /// `G` is not numerically positive definite.
    NotPositiveDefinite,
    /// The constraints admit no solution.
    Infeasible,
    /// Iteration limit reached.
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    /// One multiplier per constraint, zero when inactive.
    pub lambda: Vec<f64>,
    pub active: Vec<usize>,
    pub objective: f64,
}

/// Column-major dense square matrix helper.
struct Sq {
    n: usize,
    v: Vec<f64>,
}

impl Sq {
    fn zeros(n: usize) -> Self {
        Self { n, v: vec![0.0; n * n] }
    }
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.v[j * self.n + i]
    }
    #[inline]
    fn set(&mut self, i: usize, j: usize, x: f64) {
        self.v[j * self.n + i] = x;
    }
}

/// Lower Cholesky factor of a row-major SPD matrix.
fn cholesky(g: &[f64], n: usize) -> Option<Sq> {
    let mut l = Sq::zeros(n);
    for j in 0..n {
        let mut d = g[j * n + j];
        for k in 0..j {
            d -= l.at(j, k) * l.at(j, k);
        }
        if !(d > 0.0) {
            return None;
        }
        let d = libm::sqrt(d);
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= l.at(i, k) * l.at(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Some(l)
}

#[inline]
fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = libm::hypot(a, b);
    if h == 0.0 {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

/// Solves the QP. `g` is `n × n` row-major, `c` is `m × n` row-major.
pub fn solve(g: &[f64], a: &[f64], c: &[f64], b: &[f64]) -> Result<QpSolution, QpError> {
    let n = a.len();
    let m = b.len();
    assert_eq!(g.len(), n * n);
    assert_eq!(c.len(), m * n);

    let l = cholesky(g, n).ok_or(QpError::NotPositiveDefinite)?;
    // J = L⁻ᵀ, upper triangular: solve Lᵀ J = I column by column.
    let mut jm = Sq::zeros(n);
    for col in 0..n {
        for i in (0..n).rev() {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in i + 1..n {
                s -= l.at(k, i) * jm.at(k, col);
            }
            jm.set(i, col, s / l.at(i, i));
        }
    }
    // x = −G⁻¹a = −J Jᵀ a
    let mut x = vec![0.0; n];
    {
        let jta: Vec<f64> = (0..n).map(|k| (0..n).map(|i| jm.at(i, k) * a[i]).sum()).collect();
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = -(0..n).map(|k| jm.at(i, k) * jta[k]).sum::<f64>();
        }
    }

    let mut r = Sq::zeros(n);
    let mut active: Vec<usize> = Vec::with_capacity(n);
    let mut u: Vec<f64> = Vec::with_capacity(n);
    let mut d = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut rvec = vec![0.0; n];

    let row = |i: usize| &c[i * n..(i + 1) * n];
    let slack = |x: &[f64], i: usize| -> f64 { row(i).iter().zip(x).map(|(ci, xi)| ci * xi).sum::<f64>() - b[i] };
    let norms: Vec<f64> = (0..m)
        .map(|i| libm::sqrt(row(i).iter().map(|v| v * v).sum::<f64>()))
        .collect();

    let max_iter = 50 * (m + n) + 100;
    let mut iter = 0;
    loop {
        // Step 1: most violated constraint (scaled by its norm).
        let xnorm = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let mut p = None;
        let mut worst = 0.0;
        for i in 0..m {
            if active.contains(&i) || norms[i] == 0.0 {
                continue;
            }
            let s = slack(&x, i);
            let tol = 1e-13 * (b[i].abs() + norms[i] * xnorm + 1.0);
            if s < -tol && s / norms[i] < worst {
                worst = s / norms[i];
                p = Some(i);
            }
        }
        let Some(p) = p else { break };
        let np = row(p);
        let mut u_new = 0.0;

        // Step 2: step towards satisfying constraint p.
        loop {
            iter += 1;
            if iter > max_iter {
                return Err(QpError::MaxIterations);
            }
            let q = active.len();
            for k in 0..n {
                d[k] = (0..n).map(|i| jm.at(i, k) * np[i]).sum();
            }
            for i in 0..n {
                z[i] = (q..n).map(|k| jm.at(i, k) * d[k]).sum();
            }
            for i in (0..q).rev() {
                let mut s = d[i];
                for k in i + 1..q {
                    s -= r.at(i, k) * rvec[k];
                }
                rvec[i] = s / r.at(i, i);
            }
            // partial step length (dual)
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for k in 0..q {
                if rvec[k] > 0.0 {
                    let t = u[k] / rvec[k];
                    if t < t1 {
                        t1 = t;
                        drop = Some(k);
                    }
                }
            }
            // full step length (primal)
            let znp: f64 = z.iter().zip(np).map(|(a, b)| a * b).sum();
            let znorm = libm::sqrt(z.iter().map(|v| v * v).sum::<f64>());
            let t2 = if znorm > 1e-12 * norms[p] && znp > 0.0 {
                -slack(&x, p) / znp
            } else {
                f64::INFINITY
            };
            if t1.is_infinite() && t2.is_infinite() {
                return Err(QpError::Infeasible);
            }
            if t2.is_infinite() {
                for k in 0..q {
                    u[k] -= t1 * rvec[k];
                }
                u_new += t1;
                drop_constraint(drop.unwrap(), &mut active, &mut u, &mut r, &mut jm);
                continue;
            }
            let t = t1.min(t2);
            for i in 0..n {
                x[i] += t * z[i];
            }
            for k in 0..q {
                u[k] -= t * rvec[k];
            }
            u_new += t;
            if t2 <= t1 {
                // add p: rotate d[q..] onto d[q]
                for j in (q + 1..n).rev() {
                    let (cs, sn, h) = givens(d[j - 1], d[j]);
                    if h == 0.0 {
                        continue;
                    }
                    d[j - 1] = h;
                    d[j] = 0.0;
                    for i in 0..n {
                        let a0 = jm.at(i, j - 1);
                        let a1 = jm.at(i, j);
                        jm.set(i, j - 1, cs * a0 + sn * a1);
                        jm.set(i, j, -sn * a0 + cs * a1);
                    }
                }
                for i in 0..=q {
                    r.set(i, q, d[i]);
                }
                active.push(p);
                u.push(u_new);
                break;
            }
            drop_constraint(drop.unwrap(), &mut active, &mut u, &mut r, &mut jm);
        }
    }

    let mut lambda = vec![0.0; m];
    for (&i, &ui) in active.iter().zip(&u) {
        lambda[i] = ui;
    }
    let objective = 0.5
        * (0..n)
            .map(|i| x[i] * (0..n).map(|j| g[i * n + j] * x[j]).sum::<f64>())
            .sum::<f64>()
        + a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum::<f64>();
    Ok(QpSolution {
        x,
        lambda,
        active,
        objective,
    })
}

fn drop_constraint(k: usize, active: &mut Vec<usize>, u: &mut Vec<f64>, r: &mut Sq, jm: &mut Sq) {
    let q = active.len();
    let n = jm.n;
    active.remove(k);
    u.remove(k);
    // shift columns of R left
    for col in k..q - 1 {
        for i in 0..n {
            let v = r.at(i, col + 1);
            r.set(i, col, v);
        }
    }
    for i in 0..n {
        r.set(i, q - 1, 0.0);
    }
    // restore triangularity
    for j in k..q - 1 {
        let (cs, sn, h) = givens(r.at(j, j), r.at(j + 1, j));
        if h == 0.0 {
            continue;
        }
        for col in j..q - 1 {
            let a0 = r.at(j, col);
            let a1 = r.at(j + 1, col);
            r.set(j, col, cs * a0 + sn * a1);
            r.set(j + 1, col, -sn * a0 + cs * a1);
        }
        r.set(j + 1, j, 0.0);
        for i in 0..n {
            let a0 = jm.at(i, j);
            let a1 = jm.at(i, j + 1);
            jm.set(i, j, cs * a0 + sn * a1);
            jm.set(i, j + 1, -sn * a0 + cs * a1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kkt_residual(g: &[f64], a: &[f64], c: &[f64], b: &[f64], s: &QpSolution) -> f64 {
        let n = a.len();
        let m = b.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let mut gi = a[i] + (0..n).map(|j| g[i * n + j] * s.x[j]).sum::<f64>();
            for k in 0..m {
                gi -= s.lambda[k] * c[k * n + i];
            }
            worst = worst.max(gi.abs());
        }
        for k in 0..m {
            let sl = (0..n).map(|j| c[k * n + j] * s.x[j]).sum::<f64>() - b[k];
            worst = worst.max((-sl).max(0.0));
            worst = worst.max((-s.lambda[k]).max(0.0));
            worst = worst.max((s.lambda[k] * sl).abs());
        }
        worst
    }

    #[test]
    fn unconstrained_minimum() {
        let g = [2.0, 0.0, 0.0, 4.0];
        let s = solve(&g, &[-2.0, -4.0], &[], &[]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-15 && (s.x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn textbook_example() {
        // min ½(x² + y²) − x − y  s.t. x + y ≤ 1  →  x = y = ½
        let g = [1.0, 0.0, 0.0, 1.0];
        let s = solve(&g, &[-1.0, -1.0], &[-1.0, -1.0], &[-1.0]).unwrap();
        assert!((s.x[0] - 0.5).abs() < 1e-14 && (s.x[1] - 0.5).abs() < 1e-14);
        assert!((s.lambda[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn infeasible_is_reported() {
        let g = [1.0];
        assert_eq!(solve(&g, &[0.0], &[1.0, -1.0], &[1.0, 0.0]), Err(QpError::Infeasible));
    }

    #[test]
    fn degenerate_redundant_constraints() {
        // Many copies of the same halfplane through the optimum.
        let g = [1.0, 0.0, 0.0, 1.0];
        let mut c = Vec::new();
        let mut b = Vec::new();
        for k in 0..20 {
            let s = 1.0 + k as f64 * 0.1;
            c.extend_from_slice(&[-s, -s]);
            b.push(-s);
        }
        let sol = solve(&g, &[-1.0, -1.0], &c, &b).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-12);
        assert!(kkt_residual(&g, &[-1.0, -1.0], &c, &b, &sol) < 1e-12);
    }

    #[test]
    fn random_problems_satisfy_kkt() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(1..8);
            let m = rng.random_range(0..30);
            let mut mtx = vec![0.0; n * n];
            for v in mtx.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            let mut g = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    g[i * n + j] = (0..n).map(|k| mtx[k * n + i] * mtx[k * n + j]).sum::<f64>()
                        + if i == j { 0.1 } else { 0.0 };
                }
            }
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let c: Vec<f64> = (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            // b chosen so that a random point is feasible
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..m)
                .map(|k| (0..n).map(|j| c[k * n + j] * x0[j]).sum::<f64>() - rng.random_range(0.0..0.5))
                .collect();
            let sol = solve(&g, &a, &c, &b).unwrap();
            assert!(kkt_residual(&g, &a, &c, &b, &sol) < 1e-9, "kkt {}", kkt_residual(&g, &a, &c, &b, &sol));
        }
    }
}
