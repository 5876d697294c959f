//! Closed-form estimators against dense matrix computations, and the
//! spline against a dense solve of its defining conditions.

use exoci_core::panel::{Design, ModelParams};
use exoci_core::spline::NaturalSpline;
use exoci_core::montecarlo::{simulate_run, Noise};
use exoci_core::stream::{stream, Purpose};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// GLS of `y` on `[1, x_it, x̄_i]` with `Ω = I + δ J` per unit; returns
/// `(a, b_W, b_B)` where `b_B` is the sum of the two slopes.
fn dense_gls(n: usize, t: usize, x: &[f64], y: &[f64], delta: f64) -> (f64, f64, f64) {
    let w = delta / (1.0 + t as f64 * delta);
    let mut xtx = vec![vec![0.0; 3]; 3];
    let mut xty = vec![0.0; 3];
    for i in 0..n {
        let xs = &x[i * t..(i + 1) * t];
        let ys = &y[i * t..(i + 1) * t];
        let xbar = xs.iter().sum::<f64>() / t as f64;
        let rows: Vec<[f64; 3]> = xs.iter().map(|&v| [1.0, v, xbar]).collect();
        // Ω⁻¹ = I − w J
        for a in 0..t {
            for b in 0..t {
                let o = if a == b { 1.0 } else { 0.0 } - w;
                for p in 0..3 {
                    xty[p] += rows[a][p] * o * ys[b];
                    for q in 0..3 {
                        xtx[p][q] += rows[a][p] * o * rows[b][q];
                    }
                }
            }
        }
    }
    let c = solve_dense(xtx, xty);
    (c[0], c[1], c[1] + c[2])
}

fn random_panel(n: usize, t: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let m: f64 = rng.sample(StandardNormal);
        let eta: f64 = rng.sample::<f64, _>(StandardNormal) * 1.5;
        for _ in 0..t {
            let e: f64 = rng.sample(StandardNormal);
            let v = 2.0 * m + rng.sample::<f64, _>(StandardNormal);
            x.push(v);
            y.push(0.5 + 1.2 * v + 0.7 * m + eta + e);
        }
    }
    (x, y)
}

#[test]
fn gls_matches_dense_solution_for_any_delta() {
    for (seed, (n, t)) in [(1, (15, 3)), (2, (40, 5)), (3, (8, 2))] {
        let (x, y) = random_panel(n, t, seed);
        let design = Design::from_x(n, t, &x).unwrap();
        let fit = design.fit_gls(&y).unwrap();
        for delta in [0.0, 0.3, 4.0, 50.0] {
            let (a, bw, bb) = dense_gls(n, t, &x, &y, delta);
            let tol = 1e-9 * (1.0 + a.abs() + bw.abs() + bb.abs());
            assert!((fit.a_hat - a).abs() < tol, "a: {} vs {a}", fit.a_hat);
            assert!((fit.bw_hat - bw).abs() < tol, "bW: {} vs {bw}", fit.bw_hat);
            assert!((fit.bb_hat - bb).abs() < tol, "bB: {} vs {bb}", fit.bb_hat);
        }
    }
}

#[test]
fn residual_variance_is_unbiased() {
    // N = 500, T = 4, δ = 5, σ_ε = 1: mean of σ̂_ε² over 10000 data sets
    let (n, t) = (500, 4);
    let (x, _) = random_panel(n, t, 9);
    let design = Design::from_x(n, t, &x).unwrap();
    let m = 10_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for k in 0..m {
        let run = simulate_run(&design, 0.0, 5.0, &Noise::Normal, &mut stream(5, Purpose::Generic, k)).unwrap();
        let v = run.sigma_ratio * run.sigma_ratio;
        s += v;
        s2 += v * v;
    }
    let mean = s / m as f64;
    let se = ((s2 / m as f64 - mean * mean) / m as f64).sqrt();
    assert!((mean - 1.0).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn hausman_and_pivot_are_standard_normal_under_exogeneity() {
    let (n, t) = (100, 4);
    let (x, _) = random_panel(n, t, 4);
    let design = Design::from_x(n, t, &x).unwrap();
    let m = 100_000;
    let mut acc = [[0.0; 2]; 2];
    for k in 0..m {
        let run = simulate_run(&design, 0.0, 0.0, &Noise::Normal, &mut stream(8, Purpose::Generic, k)).unwrap();
        for (j, v) in [run.h_hat, run.gl_hat].into_iter().enumerate() {
            acc[j][0] += v;
            acc[j][1] += v * v;
        }
    }
    let mf = m as f64;
    for (j, name) in ["h", "g_L"].iter().enumerate() {
        let mean = acc[j][0] / mf;
        let var = acc[j][1] / mf - mean * mean;
        // SE of the sample variance of a normal is about √(2/M)
        assert!(mean.abs() < 3.0 / mf.sqrt(), "{name} mean {mean}");
        // σ̂ in the denominator inflates the variance by about 1 + 1/(2 df)
        assert!((var - 1.0).abs() < 3.0 * (2.0 / mf).sqrt() + 0.01, "{name} variance {var}");
    }
}

#[test]
fn simulation_with_explicit_parameters_matches_direct_data() {
    // ξ enters as ξ x̄_i: check b_B − b_W against its expectation
    let (n, t) = (50, 3);
    let (x, _) = random_panel(n, t, 12);
    let design = Design::from_x(n, t, &x).unwrap();
    let p = ModelParams::from_gamma(0.0, 1.0, 40.0, 2.0, 1.0, n);
    let mut mean_diff = 0.0;
    let m = 4000;
    for k in 0..m {
        let mut rng = stream(3, Purpose::Generic, k);
        let run = exoci_core::montecarlo::simulate_run_with(&design, &p, &Noise::Normal, &mut rng).unwrap();
        let s = design.summary();
        let sd_h = run.sigma_ratio * p.sigma_eps
            * (1.0 / s.ssw + (run.delta_hat + 1.0 / t as f64) / s.ssb).sqrt();
        mean_diff += -run.h_hat * sd_h;
    }
    mean_diff /= m as f64;
    assert!((mean_diff - p.xi).abs() < 0.1 * p.xi.abs(), "{mean_diff} vs {}", p.xi);
}

/// Natural cubic spline by solving for all per-interval cubic coefficients.
fn dense_spline(xs: &[f64], ys: &[f64], at: f64) -> f64 {
    let k = xs.len() - 1;
    let dim = 4 * k;
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    let mut row = 0;
    // piece i: c0 + c1 u + c2 u² + c3 u³, u = x − x_i
    for i in 0..k {
        let h = xs[i + 1] - xs[i];
        a[row][4 * i] = 1.0;
        b[row] = ys[i];
        row += 1;
        a[row][4 * i..4 * i + 4].copy_from_slice(&[1.0, h, h * h, h * h * h]);
        b[row] = ys[i + 1];
        row += 1;
        if i + 1 < k {
            // C¹ and C² at x_{i+1}
            a[row][4 * i..4 * i + 4].copy_from_slice(&[0.0, 1.0, 2.0 * h, 3.0 * h * h]);
            a[row][4 * (i + 1) + 1] = -1.0;
            row += 1;
            a[row][4 * i..4 * i + 4].copy_from_slice(&[0.0, 0.0, 2.0, 6.0 * h]);
            a[row][4 * (i + 1) + 2] = -2.0;
            row += 1;
        }
    }
    a[row][2] = 2.0;
    row += 1;
    let h = xs[k] - xs[k - 1];
    a[row][4 * (k - 1)..4 * k].copy_from_slice(&[0.0, 0.0, 2.0, 6.0 * h]);
    let c = solve_dense(a, b);
    let i = (0..k).find(|&i| at <= xs[i + 1]).unwrap_or(k - 1);
    let u = at - xs[i];
    c[4 * i] + u * (c[4 * i + 1] + u * (c[4 * i + 2] + u * c[4 * i + 3]))
}

#[test]
fn spline_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [3, 5, 13] {
        let mut xs: Vec<f64> = (0..n).map(|i| i as f64 + rng.random_range(0.0..0.6)).collect();
        xs.sort_by(f64::total_cmp);
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = NaturalSpline::new(xs.clone(), ys.clone());
        for j in 0..200 {
            let at = xs[0] + (xs[n - 1] - xs[0]) * j as f64 / 199.0;
            let d = dense_spline(&xs, &ys, at);
            assert!((s.eval(at) - d).abs() < 1e-10, "n {n} x {at}: {} vs {d}", s.eval(at));
        }
    }
}
