use std::path::{Path, PathBuf};
use std::process::Command;

use exoci::cli::{manifest_path, run};
use exoci::manifest::Manifest;
use exoci::results::Table;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run_ok(args: &[&str]) -> String {
    let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    let mut out = Vec::new();
    run(&args, &mut out).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    String::from_utf8(out).unwrap()
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_exoci"));
    c.env_remove("EXOCI_SEED").env_remove("EXOCI_THREADS");
    c
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn outputs_match_golden_files() {
    let (panel, grid) = (data("small.csv"), data("small.grid"));
    let cases: [(&str, Vec<&str>); 6] = [
        ("fit.csv", vec!["fit", s(&panel)]),
        ("ci.csv", vec!["ci", s(&panel), "--grid", s(&grid)]),
        ("curves_cp.csv", vec!["curves", "cp", "--grid", s(&grid), "--delta", "2", "--psi-range", "0:0.5:8"]),
        ("curves_sel.csv", vec!["curves", "sel", "--grid", s(&grid), "--delta", "2", "--psi-range", "0:0.5:8"]),
        (
            "sim_cp.csv",
            vec!["sim", "cp", s(&panel), "--grid", s(&grid), "--gamma-grid=-20,0,20", "--delta-grid", "1,6", "--M", "4000", "--seed", "7"],
        ),
        (
            "sim_sel.csv",
            vec!["sim", "sel", s(&panel), "--grid", s(&grid), "--gamma-grid=0,20", "--delta-grid", "6", "--M", "4000", "--seed", "7"],
        ),
    ];
    for (golden, args) in cases {
        let want = std::fs::read_to_string(data("golden").join(golden)).unwrap();
        assert_eq!(run_ok(&args), want, "{golden}");
    }
}

#[test]
fn sim_output_is_identical_across_thread_counts_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let (panel, grid) = (data("small.csv"), data("small.grid"));
    let mut first = None;
    for threads in ["1", "4", "8"] {
        let out = dir.path().join(format!("cc{threads}.csv"));
        run_ok(&[
            "sim", "confcoef", s(&panel), "--grid", s(&grid), "--gamma-grid=-20:10:20", "--delta-grid", "0,6",
            "--M1", "600", "--M2", "1200", "--M3", "2400", "--seed", "3", "--threads", threads, "--out", s(&out),
        ]);
        let bytes = std::fs::read(&out).unwrap();
        match &first {
            None => first = Some(bytes),
            Some(f) => assert_eq!(&bytes, f, "threads = {threads}"),
        }
    }
    // rerun from the manifest with another thread count
    let m = manifest_path(&dir.path().join("cc1.csv"));
    let again = dir.path().join("again.csv");
    run_ok(&["rerun", s(&m), "--threads", "3", "--out", s(&again)]);
    assert_eq!(std::fs::read(&again).unwrap(), first.unwrap());
    let man = Manifest::read(&manifest_path(&again)).unwrap();
    assert_eq!(man.get("command"), Some("sim confcoef"));
    assert_eq!(man.get("seed"), Some("3"));
    assert_eq!(man.get("threads"), Some("3"));
}

#[test]
fn confcoef_table_has_one_row_per_delta_and_a_final_row() {
    let t = Table::parse(&run_ok(&[
        "sim", "confcoef", s(&data("small.csv")), "--grid", s(&data("small.grid")), "--gamma-grid=0,30",
        "--delta-grid", "1,2,3", "--M1", "100", "--M2", "200", "--M3", "400",
    ]))
    .unwrap();
    assert_eq!(t.rows.len(), 4);
    assert!(t.rows[..3].iter().all(|r| r[6] == "coverage" && r[4] == "200"));
    assert_eq!(t.rows[3][6], "conf_coeff");
    assert_eq!(t.rows[3][4], "400");
}

#[test]
fn seed_precedence_flag_then_environment_then_default() {
    let args = |extra: &[&str]| {
        let mut v: Vec<String> = ["sim", "cp", s(&data("small.csv")), "--grid", s(&data("small.grid")), "--gamma-grid", "0", "--delta-grid", "1", "--M", "50"]
            .iter()
            .map(|x| x.to_string())
            .collect();
        v.extend(extra.iter().map(|x| x.to_string()));
        v
    };
    let seed_of = |out: &[u8]| -> String {
        let t = Table::parse(std::str::from_utf8(out).unwrap()).unwrap();
        t.rows[0][5].clone()
    };
    let o = bin().args(args(&[])).output().unwrap();
    assert!(o.status.success());
    assert_eq!(seed_of(&o.stdout), exoci::cli::DEFAULT_SEED.to_string());
    let o = bin().args(args(&[])).env("EXOCI_SEED", "42").output().unwrap();
    assert_eq!(seed_of(&o.stdout), "42");
    let o = bin().args(args(&["--seed", "9"])).env("EXOCI_SEED", "42").output().unwrap();
    assert_eq!(seed_of(&o.stdout), "9");
    let o = bin().args(args(&[])).env("EXOCI_SEED", "x").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(args(&[])).env("EXOCI_THREADS", "0").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(args(&[])).env("EXOCI_THREADS", "2").output().unwrap();
    assert!(o.status.success());
}

#[test]
fn errors_have_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unbalanced = dir.path().join("u.csv");
    std::fs::write(&unbalanced, "unit,time,x,y\n1,1,1,1\n1,2,2,2\n2,1,3,3\n").unwrap();
    let (small, endo, grid) = (data("small.csv"), data("endogenous.csv"), data("small.grid"));
    let cases: [(Vec<&str>, i32, &str); 5] = [
        (vec!["fit", "/nonexistent.csv"], 3, "IO"),
        (vec!["fit", s(&unbalanced)], 10, "UNBALANCED_PANEL"),
        (vec!["ci", s(&endo), "--grid", s(&grid)], 23, "GRID_MISMATCH"),
        (vec!["frobnicate"], 2, "USAGE"),
        (vec!["sim", "cp", s(&small), "--grid", s(&grid), "--M", "0"], 24, "INVALID_ARGUMENT"),
    ];
    for (args, code, name) in cases {
        let o = bin().args(&args).output().unwrap();
        assert_eq!(o.status.code(), Some(code), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.starts_with(&format!("exoci: error[{name}]")), "{err}");
    }
    let o = bin().arg("--help").output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("Usage"));
}

#[test]
fn strong_endogeneity_reverts_to_fixed_effects() {
    let dir = tempfile::tempdir().unwrap();
    let panel = data("endogenous.csv");
    let grid = dir.path().join("g.txt");
    run_ok(&["grid", "build", s(&panel), "--standard", "--out", s(&grid)]);
    assert!(manifest_path(&grid).exists());
    let ci = Table::parse(&run_ok(&["ci", s(&panel), "--grid", s(&grid)])).unwrap();
    let fit = Table::parse(&run_ok(&["fit", s(&panel)])).unwrap();
    let num = |t: &Table, name: &str| -> f64 {
        let i = t.header.iter().position(|h| h == name).unwrap();
        t.rows[0][i].parse().unwrap()
    };
    assert!(num(&ci, "h_hat").abs() >= 6.0);
    assert_eq!(ci.rows[0][7], "true");
    let p = exoci::panel_csv::load_panel(&panel).unwrap();
    let ssw = exoci_core::panel::design_summary(&p).unwrap().ssw;
    let half = 1.959963984540054 * num(&fit, "sigma_eps2_hat").sqrt() / ssw.sqrt();
    let bw = num(&fit, "bw_hat");
    assert!((num(&ci, "lower") - (bw - half)).abs() < 1e-12);
    assert!((num(&ci, "upper") - (bw + half)).abs() < 1e-12);
}

#[test]
fn grid_file_round_trips_through_show() {
    let grid = exoci::gridfile::read(&data("small.grid")).unwrap();
    assert_eq!(grid.entries.len(), 11);
    assert!(grid.entries.iter().all(|e| e.optimized.converged));
    let text = exoci::gridfile::to_string(&grid);
    let again = exoci::gridfile::parse(&text, Path::new("x")).unwrap();
    assert_eq!(exoci::gridfile::to_string(&again), text);
    let show = Table::parse(&run_ok(&["grid", "show", s(&data("small.grid"))])).unwrap();
    assert_eq!(show.rows.len(), 11);
}
