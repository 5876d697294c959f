//! The `exoci-grid v1` text format.
//!
//! ```text
//! exoci-grid v1
//! alpha 5.0000000000000003e-2
//! d 6.0000000000000000e0
//! N 200
//! T 4
//! ssw …
//! ssb …
//! <rho> <delta> <phi_star>
//! odd: <5 reals>
//! even: <6 reals>
//! …                      (11 blocks)
//! ```
//!
//! Reals carry 17 significant digits so a grid survives a write/read cycle
//! bit for bit. Lines starting with `#` and blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use exoci_core::interval::{GridDesign, GRID_RHOS};
use exoci_core::optimize::COVERAGE_SLACK;
use exoci_core::pair::{EVEN_KNOTS, ODD_KNOTS};
use exoci_core::{FunctionGrid, GridEntry, KgContext, KnotFunctionPair, OptimizedPair};

use crate::error::{CliError, Result};

pub const MAGIC: &str = "exoci-grid v1";

fn real(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn to_string(grid: &FunctionGrid) -> String {
    let mut s = String::new();
    let g = &grid.design;
    writeln!(s, "{MAGIC}").unwrap();
    writeln!(s, "# written by exoci {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(s, "alpha {}", real(grid.alpha)).unwrap();
    writeln!(s, "d {}", real(grid.d)).unwrap();
    writeln!(s, "N {}", g.n).unwrap();
    writeln!(s, "T {}", g.t).unwrap();
    writeln!(s, "ssw {}", real(g.ssw)).unwrap();
    writeln!(s, "ssb {}", real(g.ssb)).unwrap();
    for e in &grid.entries {
        let o = &e.optimized;
        writeln!(
            s,
            "# min_cp {:.6} sel0 {:.6} max_sel {:.6} gain {:.6} loss {:.6} converged {}",
            o.min_cp, o.sel_at_zero, o.max_sel, o.gain, o.loss, o.converged
        )
        .unwrap();
        writeln!(s, "{} {} {}", real(e.rho), real(e.delta), real(e.phi_star)).unwrap();
        let join = |v: &[f64]| v.iter().map(|&x| real(x)).collect::<Vec<_>>().join(" ");
        writeln!(s, "odd: {}", join(o.pair.odd_knots())).unwrap();
        writeln!(s, "even: {}", join(o.pair.even_knots())).unwrap();
    }
    s
}

pub fn write(grid: &FunctionGrid, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(grid)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<FunctionGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> CliError {
        CliError::Format {
            path: self.path.to_path_buf(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next(&mut self) -> Result<&'a str> {
        for (k, l) in self.inner.by_ref() {
            self.line = k + 1;
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                return Ok(l);
            }
        }
        Err(self.err("unexpected end of file"))
    }

    fn reals(&self, s: &str, count: usize) -> Result<Vec<f64>> {
        let v = s
            .split_whitespace()
            .map(|w| w.parse::<f64>().map_err(|_| self.err(format!("`{w}` is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() != count {
            return Err(self.err(format!("expected {count} numbers, found {}", v.len())));
        }
        Ok(v)
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        match l.split_once(char::is_whitespace) {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ => Err(self.err(format!("expected `{key} <value>`"))),
        }
    }

    fn keyed_real(&mut self, key: &str) -> Result<f64> {
        let v = self.keyed(key)?;
        Ok(self.reals(v, 1)?[0])
    }

    fn keyed_count(&mut self, key: &str) -> Result<usize> {
        let v = self.keyed(key)?;
        v.parse().map_err(|_| self.err(format!("`{v}` is not a count")))
    }
}

pub fn parse(text: &str, path: &Path) -> Result<FunctionGrid> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
        line: 0,
    };
    if lines.next()? != MAGIC {
        return Err(lines.err(format!("not a grid file (expected `{MAGIC}`)")));
    }
    let alpha = lines.keyed_real("alpha")?;
    let d = lines.keyed_real("d")?;
    let n = lines.keyed_count("N")?;
    let t = lines.keyed_count("T")?;
    let ssw = lines.keyed_real("ssw")?;
    let ssb = lines.keyed_real("ssb")?;
    let design = GridDesign { n, t, ssw, ssb };

    let mut entries = Vec::with_capacity(GRID_RHOS.len());
    for _ in 0..GRID_RHOS.len() {
        let head = lines.next()?;
        let head = lines.reals(head, 3)?;
        let (rho, delta, phi_star) = (head[0], head[1], head[2]);
        let odd = lines.keyed("odd:")?;
        let odd = lines.reals(odd, ODD_KNOTS)?;
        let even = lines.keyed("even:")?;
        let even = lines.reals(even, EVEN_KNOTS)?;
        let pair = KnotFunctionPair::new(
            odd.try_into().expect("length checked"),
            even.try_into().expect("length checked"),
            alpha,
            d,
        )?;
        let ctx = KgContext::with_options(rho, alpha, d, exoci_core::coverage::DEFAULT_POINTS)?;
        let mut optimized = OptimizedPair::summarize(&ctx, pair, phi_star, true);
        optimized.converged = optimized.constraint_violation <= COVERAGE_SLACK;
        entries.push(GridEntry {
            rho,
            delta,
            phi_star,
            optimized,
        });
    }
    if let Some((k, l)) = lines.inner.find(|(_, l)| !l.trim().is_empty() && !l.trim().starts_with('#')) {
        lines.line = k + 1;
        return Err(lines.err(format!("trailing content `{}`", l.trim())));
    }
    Ok(FunctionGrid {
        design,
        alpha,
        d,
        entries,
    })
}
