use std::process::Command;

fn densecell(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_densecell")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn without_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn single_point_grid_gives_single_row() {
    let (code, out, _) = densecell(&["coverage", "--lambda-grid", "50", "--gamma-db", "0"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# tool=densecell"));
    assert!(out.contains("# scenario=case1"));
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0][4], "analytic-general");
}

#[test]
fn closed_and_general_rows_agree() {
    let (code, out, _) = densecell(&[
        "coverage",
        "--lambda-grid",
        "1:1000:1",
        "--gamma-db",
        "0,3",
        "--provider",
        "analytic-general,analytic-closed",
    ]);
    assert_eq!(code, 0);
    let r = rows(&out);
    assert_eq!(r.len(), 16);
    let (general, closed) = r.split_at(8);
    for (g, c) in general.iter().zip(closed) {
        assert_eq!(g[0..2], c[0..2]);
        let (a, b): (f64, f64) = (g[2].parse().unwrap(), c[2].parse().unwrap());
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn rows_follow_grid_order() {
    let (_, out, _) = densecell(&["coverage", "--lambda-grid", "0.1:10000:2"]);
    let lambdas: Vec<f64> = rows(&out).iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(lambdas.len(), 11);
    assert!(lambdas.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn monte_carlo_rerun_is_identical() {
    let args = ["coverage", "--lambda-grid", "10:100:1", "--provider", "monte-carlo", "--trials", "500", "--seed", "4", "--gamma-db", "0,3"];
    let (c1, a, _) = densecell(&args);
    let (c2, b, _) = densecell(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(without_timing(&a), without_timing(&b));
    assert!(a.contains("# seed=4"));
    assert_eq!(rows(&a).len(), 4);
}

#[test]
fn empty_gamma0_list_is_success_without_rows() {
    let (code, out, _) = densecell(&["ase", "--lambda-grid", "10", "--gamma0-db", ""]);
    assert_eq!(code, 0);
    assert!(rows(&out).is_empty());
}

#[test]
fn ase_over_los_exponents() {
    for alpha in ["1.09", "2.09", "3.09"] {
        let (code, out, err) = densecell(&["ase", "--lambda-grid", "100", "--gamma0-db", "0", "--alpha-los", alpha]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains(&format!("# alpha_los={alpha}")));
        let a: f64 = rows(&out)[0][2].parse().unwrap();
        assert!(a > 0.0);
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(densecell(&["coverage", "--preset", "case7"]).0, 2);
    assert_eq!(densecell(&["coverage", "--lambda-grid", "10:1:3"]).0, 2);
    assert_eq!(densecell(&["coverage", "--provider", "magic"]).0, 2);
    assert_eq!(densecell(&["coverage", "--bogus"]).0, 2);
    assert_eq!(densecell(&["coverage", "--preset", "case2", "--provider", "analytic-closed"]).0, 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = std::env::temp_dir().join(format!("densecell-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("sweep.cfg");
    let csv = dir.join("out.csv");
    std::fs::write(&cfg, "preset = case2\nlambda_grid = 1:100:1\ngamma_db = 0\n").unwrap();
    let (code, _, err) = densecell(&["coverage", "--config", cfg.to_str().unwrap(), "--lambda-grid", "5", "--out", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("# scenario=case2"));
    assert_eq!(rows(&text).len(), 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn validate_provider_against_itself_passes_exactly() {
    let (code, out, _) = densecell(&["validate", "--lambda-grid", "10:1000:1", "--against-provider", "analytic-general"]);
    assert_eq!(code, 0);
    for r in rows(&out) {
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[7], "pass");
    }
}

#[test]
fn validate_reports_failures_with_exit_one() {
    // single-slope coverage differs from case1 by far more than 1e-3
    let (code, out, _) = densecell(&[
        "validate",
        "--lambda-grid",
        "100",
        "--against-preset",
        "single-slope",
        "--tolerance",
        "0.001",
    ]);
    assert_eq!(code, 1);
    assert!(rows(&out).iter().any(|r| r[7] == "fail"));
}

#[test]
fn validate_flags_insufficient_trials() {
    let (code, out, err) = densecell(&["validate", "--lambda-grid", "100", "--trials", "100", "--tolerance", "0.01"]);
    assert_eq!(code, 1);
    assert!(rows(&out).iter().all(|r| r[7] == "insufficient-trials"));
    assert!(err.contains("--trials"));
}

#[test]
fn approximate_case2_validates_against_case2() {
    let (code, out, _) = densecell(&[
        "validate",
        "--preset",
        "case2",
        "--against-preset",
        "approx-case2",
        "--lambda-grid",
        "1:10000:1",
        "--tolerance",
        "0.05",
    ]);
    assert_eq!(code, 0, "{out}");
}

#[test]
fn peak_reports_bracket() {
    let (code, out, _) = densecell(&["peak", "--gamma-db", "0", "--lambda-range", "2:200", "--provider", "analytic-closed"]);
    assert_eq!(code, 0);
    let r = &rows(&out)[0];
    let star: f64 = r[1].parse().unwrap();
    let (lo, hi): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
    assert!(lo <= star && star <= hi);
    assert!((star - 19.01).abs() < 0.5);
}
