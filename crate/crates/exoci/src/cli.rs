//! The `exoci` command line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use exoci_core::coverage::{coverage_probability, scaled_expected_length};
use exoci_core::interval::{self, plugin_ci};
use exoci_core::montecarlo::{self, Plug, Stages};
use exoci_core::panel::{self, Design};
use exoci_core::{FunctionGrid, KgContext, SimConfig};

use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::results::{sim_row, Table, SIM_HEADER};
use crate::{gridfile, panel_csv};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_GAMMA_GRID: &str = "-200:10:200";
pub const DEFAULT_DELTA_GRID: &str = "0:2.5:15,20,30,50,80";

#[derive(Debug, Parser)]
#[command(name = "exoci", version, about = "Panel slope confidence intervals using uncertain prior information about exogeneity")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the model: slopes, variance components and the Hausman statistic.
    Fit { panel: PathBuf },
    /// Build or inspect a grid of optimised interval functions.
    Grid {
        #[command(subcommand)]
        action: GridCommand,
    },
    /// Plug-in confidence interval for the slope.
    Ci {
        panel: PathBuf,
        #[arg(long)]
        grid: PathBuf,
    },
    /// Coverage or scaled expected length for known variances, by quadrature.
    Curves {
        kind: CurveKind,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        delta: f64,
        /// `start:step:stop`, or a comma-separated list.
        #[arg(long, default_value = "0:0.05:12", allow_hyphen_values = true)]
        psi_range: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo study of the plug-in interval.
    Sim(SimArgs),
    /// Repeat a run from its manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GridCommand {
    /// Optimise the interval functions at every grid point for a design.
    Build {
        panel: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        /// Store the standard pair everywhere instead of optimising.
        #[arg(long)]
        standard: bool,
    },
    /// Print the summary of each grid entry.
    Show { grid: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    Cp,
    Sel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKindArg {
    Cp,
    Sel,
    Confcoef,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    pub kind: SimKindArg,
    pub panel: PathBuf,
    #[arg(long)]
    pub grid: PathBuf,
    /// `start:step:stop`, values, or a mix separated by commas.
    #[arg(long, default_value = DEFAULT_GAMMA_GRID, allow_hyphen_values = true)]
    pub gamma_grid: String,
    #[arg(long, default_value = DEFAULT_DELTA_GRID)]
    pub delta_grid: String,
    /// Replications per point for `cp` and `sel`.
    #[arg(long = "M", default_value_t = 100_000)]
    pub m: u64,
    #[arg(long = "M1", default_value_t = 100_000)]
    pub m1: u64,
    #[arg(long = "M2", default_value_t = 1_000_000)]
    pub m2: u64,
    #[arg(long = "M3", default_value_t = 4_000_000)]
    pub m3: u64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Confidence coefficient used to scale `sel` (default `1 − α`).
    #[arg(long)]
    pub c_min: Option<f64>,
    /// Build the interval with the true `(σ_ε, δ)` instead of estimates.
    #[arg(long)]
    pub known: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `start:step:stop` ranges (inclusive) and single values separated
/// by commas.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("invalid value list `{spec}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let mut out = Vec::new();
    for item in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(num(v)?),
            [a, s, b] => {
                let (a, s, b) = (num(a)?, num(s)?, num(b)?);
                if !(s > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                    return Err(bad());
                }
                let n = ((b - a) / s + 1e-9).floor() as usize;
                if n > 10_000_000 {
                    return Err(bad());
                }
                out.extend((0..=n).map(|i| a + i as f64 * s));
            }
            _ => return Err(bad()),
        }
    }
    if out.is_empty() || out.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(out)
}

fn env_value<T: std::str::FromStr>(name: &str) -> Result<Option<T>> {
    match std::env::var(name) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("environment variable {name}=`{v}` is not valid"))),
        _ => Ok(None),
    }
}

/// Flag, then `EXOCI_SEED`, then the built-in default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    Ok(match flag {
        Some(s) => s,
        None => env_value("EXOCI_SEED")?.unwrap_or(DEFAULT_SEED),
    })
}

/// Flag, then `EXOCI_THREADS`; `None` leaves rayon's default.
pub fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    let t = match flag {
        Some(t) => Some(t),
        None => env_value("EXOCI_THREADS")?,
    };
    if t == Some(0) {
        return Err(CliError::Usage("thread count must be at least 1".into()));
    }
    Ok(t)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Writes `table` to `out` (plus a manifest beside it) or to `stdout`.
fn emit(table: &Table, out: Option<&Path>, manifest: Manifest, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
            table.write_to(std::io::BufWriter::new(file)).map_err(|e| CliError::Csv {
                path: path.to_path_buf(),
                msg: e.to_string(),
            })?;
            manifest.write(&manifest_path(path))
        }
        None => stdout
            .write_all(table.to_csv().as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// `<output>.manifest`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn base_manifest(command: &str, args: &[String]) -> Manifest {
    let mut m = Manifest::new();
    m.set("command", command);
    m.set("tool", "exoci");
    m.set("version", env!("CARGO_PKG_VERSION"));
    let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    m.set("created_unix", now);
    m.set_args(args);
    m
}

/// Parses `args` (without the program name) and runs the command.
pub fn run(args: &[String], stdout: &mut dyn Write) -> Result<()> {
    let cli = match Cli::try_parse_from(std::iter::once("exoci".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return stdout.write_all(e.to_string().as_bytes()).map_err(|e| CliError::io("<stdout>", e));
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    match cli.command {
        Command::Fit { panel } => fit(&panel, stdout),
        Command::Grid { action } => match action {
            GridCommand::Build {
                panel,
                alpha,
                out,
                threads,
                standard,
            } => grid_build(&panel, alpha, &out, threads, standard, args, stdout),
            GridCommand::Show { grid } => grid_show(&grid, stdout),
        },
        Command::Ci { panel, grid } => ci(&panel, &grid, stdout),
        Command::Curves {
            kind,
            grid,
            delta,
            psi_range,
            out,
        } => curves(kind, &grid, delta, &psi_range, out.as_deref(), args, stdout),
        Command::Sim(a) => sim(&a, args, stdout),
        Command::Rerun { manifest, threads, out } => rerun(&manifest, threads, out, stdout),
    }
}

fn fit(path: &Path, stdout: &mut dyn Write) -> Result<()> {
    let p = panel_csv::load_panel(path)?;
    let design = Design::new(&p)?;
    let y = p.y().ok_or(exoci_core::Error::MissingResponse)?;
    let f = design.estimate(y)?;
    let mut t = Table::new(&["bw_hat", "bb_hat", "a_hat", "sigma_eps2_hat", "sigma_eta2_hat", "delta_hat", "h_hat"]);
    t.push(
        [f.bw_hat, f.bb_hat, f.a_hat, f.sigma_eps2_hat, f.sigma_eta2_hat, f.delta_hat, f.h_hat]
            .iter()
            .map(f64::to_string)
            .collect(),
    );
    emit(&t, None, Manifest::new(), stdout)
}

fn grid_table(grid: &FunctionGrid) -> Table {
    let mut t = Table::new(&["rho", "delta", "phi_star", "min_cp", "sel_at_zero", "max_sel", "gain", "loss", "converged"]);
    for e in &grid.entries {
        let o = &e.optimized;
        let mut row: Vec<String> = [e.rho, e.delta, e.phi_star, o.min_cp, o.sel_at_zero, o.max_sel, o.gain, o.loss]
            .iter()
            .map(f64::to_string)
            .collect();
        row.push(o.converged.to_string());
        t.push(row);
    }
    t
}

fn grid_build(
    panel: &Path,
    alpha: f64,
    out: &Path,
    threads: Option<usize>,
    standard: bool,
    args: &[String],
    stdout: &mut dyn Write,
) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::Usage("--alpha must lie in (0, 1)".into()));
    }
    let threads = resolve_threads(threads)?;
    let p = panel_csv::load_panel(panel)?;
    let design = Design::new(&p)?;
    let ds = design.summary();
    let grid = with_threads(threads, || {
        if standard {
            FunctionGrid::standard(ds, alpha)
        } else {
            interval::build_grid(ds, alpha)
        }
    })??;
    gridfile::write(&grid, out)?;
    let mut m = base_manifest("grid build", args);
    m.set("input.panel", panel.display());
    m.set("output.grid", out.display());
    m.set("alpha", alpha);
    m.set("standard", standard);
    m.set("threads", threads.map_or("default".to_string(), |t| t.to_string()));
    m.write(&manifest_path(out))?;
    emit(&grid_table(&grid), None, Manifest::new(), stdout)
}

fn grid_show(path: &Path, stdout: &mut dyn Write) -> Result<()> {
    let grid = gridfile::read(path)?;
    emit(&grid_table(&grid), None, Manifest::new(), stdout)
}

fn ci(panel: &Path, grid: &Path, stdout: &mut dyn Write) -> Result<()> {
    let p = panel_csv::load_panel(panel)?;
    let grid = gridfile::read(grid)?;
    let (c, _) = plugin_ci(&p, &grid)?;
    let mut t = Table::new(&[
        "lower",
        "upper",
        "center_shift",
        "half_width",
        "h_hat",
        "sigma_eps_hat",
        "delta_hat",
        "reverted",
    ]);
    let mut row: Vec<String> = [c.lower, c.upper, c.center_shift, c.half_width, c.h_used, c.sigma_used, c.delta_used]
        .iter()
        .map(f64::to_string)
        .collect();
    row.push(c.reverted.to_string());
    t.push(row);
    emit(&t, None, Manifest::new(), stdout)
}

#[allow(clippy::too_many_arguments)]
fn curves(
    kind: CurveKind,
    grid_path: &Path,
    delta: f64,
    psi_range: &str,
    out: Option<&Path>,
    args: &[String],
    stdout: &mut dyn Write,
) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(CliError::Usage("--delta must be finite and nonnegative".into()));
    }
    let grid = gridfile::read(grid_path)?;
    let psis = parse_values(psi_range)?;
    let r = grid.design.r();
    let rho = panel::rho_of_delta(r, delta, grid.design.t)?;
    let ctx = KgContext::with_options(rho, grid.alpha, grid.d, exoci_core::coverage::DEFAULT_POINTS)?;
    let pair = grid.interpolate_pair(delta)?;
    // γ = ψ ((N/SSW)(r + δ + 1/T)/r)^{1/2}
    let g = &grid.design;
    let gamma_per_psi = ((g.n as f64 / g.ssw) * ((r + delta + 1.0 / g.t as f64) / r)).sqrt();
    let mut t = match kind {
        CurveKind::Cp => Table::new(&["psi", "gamma", "cp"]),
        CurveKind::Sel => Table::new(&["psi", "gamma", "sel", "sel_squared"]),
    };
    for &psi in &psis {
        let mut row = vec![psi.to_string(), (psi * gamma_per_psi).to_string()];
        match kind {
            CurveKind::Cp => row.push(coverage_probability(&ctx, &pair, psi)?.to_string()),
            CurveKind::Sel => {
                let s = scaled_expected_length(&ctx, &pair, psi)?;
                row.push(s.to_string());
                row.push((s * s).to_string());
            }
        }
        t.push(row);
    }
    let mut m = base_manifest(&format!("curves {}", if kind == CurveKind::Cp { "cp" } else { "sel" }), args);
    m.set("input.grid", grid_path.display());
    m.set("delta", delta);
    m.set("rho", rho);
    m.set("psi_range", psi_range);
    if let Some(o) = out {
        m.set("output.table", o.display());
    }
    emit(&t, out, m, stdout)
}

fn sim(a: &SimArgs, args: &[String], stdout: &mut dyn Write) -> Result<()> {
    let seed = resolve_seed(a.seed)?;
    let threads = resolve_threads(a.threads)?;
    let gammas = parse_values(&a.gamma_grid)?;
    let deltas = parse_values(&a.delta_grid)?;
    if deltas.iter().any(|&d| d < 0.0) {
        return Err(CliError::Usage("--delta-grid values must be nonnegative".into()));
    }
    let p = panel_csv::load_panel(&a.panel)?;
    let design = Design::new(&p)?;
    let grid = gridfile::read(&a.grid)?;
    grid.check_design(design.summary())?;
    let mut base = SimConfig::new(&design, &grid, 0.0, 0.0, a.m, seed);
    if a.known {
        base.plug = Plug::Known;
    }
    let points: Vec<(f64, f64)> = deltas.iter().flat_map(|&d| gammas.iter().map(move |&g| (g, d))).collect();
    let at = |g: f64, d: f64| SimConfig {
        gamma: g,
        delta: d,
        ..base.clone()
    };

    let mut m = base_manifest(
        match a.kind {
            SimKindArg::Cp => "sim cp",
            SimKindArg::Sel => "sim sel",
            SimKindArg::Confcoef => "sim confcoef",
        },
        args,
    );
    m.set("input.panel", a.panel.display());
    m.set("input.grid", a.grid.display());
    m.set("alpha", grid.alpha);
    m.set("seed", seed);
    m.set("gamma_grid", &a.gamma_grid);
    m.set("delta_grid", &a.delta_grid);
    m.set("plug", if a.known { "known" } else { "estimated" });
    m.set("threads", threads.map_or("default".to_string(), |t| t.to_string()));

    let mut t = Table::new(&SIM_HEADER);
    match a.kind {
        SimKindArg::Cp => {
            m.set("M", a.m);
            let est = with_threads(threads, || {
                points
                    .par_iter()
                    .map(|&(g, d)| montecarlo::estimate_cp(&at(g, d)))
                    .collect::<exoci_core::Result<Vec<_>>>()
            })??;
            for (&(g, d), e) in points.iter().zip(&est) {
                t.push(sim_row(g, d, e));
            }
        }
        SimKindArg::Sel => {
            let c_min = a.c_min.unwrap_or(1.0 - grid.alpha);
            m.set("M", a.m);
            m.set("c_min", c_min);
            let est = with_threads(threads, || {
                points
                    .par_iter()
                    .map(|&(g, d)| montecarlo::estimate_sel(&at(g, d), c_min))
                    .collect::<exoci_core::Result<Vec<_>>>()
            })??;
            for (&(g, d), e) in points.iter().zip(&est) {
                t.push(sim_row(g, d, e));
            }
        }
        SimKindArg::Confcoef => {
            let stages = Stages {
                m1: a.m1,
                m2: a.m2,
                m3: a.m3,
            };
            m.set("M1", a.m1);
            m.set("M2", a.m2);
            m.set("M3", a.m3);
            let cc = with_threads(threads, || {
                montecarlo::estimate_confidence_coefficient(&base, &gammas, &deltas, stages)
            })??;
            for (g, d, e) in &cc.per_delta {
                t.push(sim_row(*g, *d, e));
            }
            t.push(sim_row(cc.gamma_star, cc.delta_star, &cc.c_min));
            m.set("c_min", cc.c_min.value);
            m.set("gamma_star", cc.gamma_star);
            m.set("delta_star", cc.delta_star);
        }
    }
    if let Some(o) = &a.out {
        m.set("output.table", o.display());
    }
    emit(&t, a.out.as_deref(), m, stdout)
}

/// Removes `--name v` and `--name=v` from `args`.
fn strip_flag(args: &mut Vec<String>, name: &str) {
    let eq = format!("{name}=");
    let mut i = 0;
    while i < args.len() {
        if args[i] == name {
            let end = (i + 2).min(args.len());
            args.drain(i..end);
        } else if args[i].starts_with(&eq) {
            args.remove(i);
        } else {
            i += 1;
        }
    }
}

fn rerun(path: &Path, threads: Option<usize>, out: Option<PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    let m = Manifest::read(path)?;
    let mut args = m.args().ok_or_else(|| CliError::Format {
        path: path.to_path_buf(),
        line: 0,
        msg: "manifest has no argument list".into(),
    })?;
    if args.first().map(String::as_str) == Some("rerun") {
        return Err(CliError::Usage("a manifest cannot rerun another rerun".into()));
    }
    if let Some(t) = threads {
        strip_flag(&mut args, "--threads");
        args.push("--threads".into());
        args.push(t.to_string());
    }
    if let Some(o) = out {
        strip_flag(&mut args, "--out");
        args.push("--out".into());
        args.push(o.display().to_string());
    }
    run(&args, stdout)
}
