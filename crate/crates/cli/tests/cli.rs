use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn wg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wg")).args(args).output().expect("run wg")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wg-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .unwrap()
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("error JSON on stderr")
}

#[test]
fn solve_writes_solution_and_summary() {
    let out = scratch("solve");
    let o = wg(&["solve", "--problem", "linear", "--unit-square", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(out.join("summary.json"));
    assert_eq!(summary["triangles"], 32);
    assert!(summary["errors"]["e_l2proj"].as_f64().unwrap() < 1e-9);
    let solution = read_json(out.join("solution.json"));
    assert_eq!(solution["interior"].as_array().unwrap().len(), 32);
    assert_eq!(solution["edges"].as_array().unwrap().len(), 56);
    assert!(out.join("meta.json").exists());
}

#[test]
fn convergence_csv_has_the_documented_schema() {
    let out = scratch("conv");
    let o = wg(&["convergence", "--problem", "sinsin", "--levels", "4,8", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,dofs,eH1,eL2proj,eL2,rate_eH1,rate_eL2proj");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",,"));
    assert_eq!(lines[2].split(',').count(), 7);
    assert_eq!(String::from_utf8_lossy(&o.stdout), csv);
}

#[test]
fn exact_solutions_report_exact_rates() {
    let out = scratch("exact");
    let o = wg(&["convergence", "--problem", "linear", "--levels", "2,4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().ends_with(",exact,exact"), "{csv}");
}

#[test]
fn config_files_run() {
    for (cmd, file) in [("convergence", "custom.toml"), ("flux-report", "lshape.toml"), ("solve", "variable.toml")] {
        let out = scratch(file);
        let cfg = configs().join(file);
        let o = wg(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{file}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn verify_passes_and_injected_bug_fails() {
    let out = scratch("verify");
    let o = wg(&["verify", "--samples", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_json(out.join("verify.json"))["passed"], true);
    let o = wg(&["verify", "--samples", "5", "--inject-bug", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL  conservation"), "{stdout}");
}

#[test]
fn usage_errors_exit_with_two() {
    let out = scratch("usage");
    let out = out.to_str().unwrap();
    for args in [
        vec!["solve", "--out", out],
        vec!["solve", "--config", "/nonexistent/wg.toml", "--out", out],
        vec!["solve", "--problem", "nope", "--out", out],
        vec!["convergence", "--problem", "sinsin", "--levels", "x,y", "--out", out],
        vec!["solve", "--problem", "sinsin", "--j", "9", "--out", out],
    ] {
        let o = wg(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = error_json(&o);
        assert_eq!(err["error"]["exit_code"], 2, "{args:?}");
        assert!(err["error"]["message"].as_str().is_some());
    }
    // malformed command lines are rejected by the argument parser itself
    assert_eq!(wg(&["solve", "--family", "bogus"]).status.code(), Some(2));
}

#[test]
fn bad_expressions_name_their_key() {
    let dir = scratch("badexpr");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "f = \"sin(pi*x\"\n").unwrap();
    let o = wg(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = error_json(&o);
    let message = err["error"]["message"].as_str().unwrap();
    assert!(message.contains("`f`") && message.contains("position"), "{message}");
}

#[test]
fn solver_failures_exit_with_three() {
    let dir = scratch("solver");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("tight.toml");
    std::fs::write(&cfg, "problem = \"sinsin\"\n\n[solver]\nrel_residual = 1e-30\n").unwrap();
    let o = wg(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = error_json(&o);
    assert_eq!(err["error"]["kind"], "solver");
    assert!(err["error"]["condition_estimate"].as_f64().unwrap() > 1.0);
}

#[test]
fn iterative_solver_agrees_with_direct() {
    let a = scratch("direct");
    let b = scratch("iterative");
    for (dir, extra) in [(&a, None), (&b, Some("--iterative"))] {
        let mut args = vec!["solve", "--problem", "convection", "--unit-square", "8", "--out", dir.to_str().unwrap()];
        args.extend(extra);
        assert!(wg(&args).status.success());
    }
    let ea = read_json(a.join("summary.json"))["errors"]["e_l2proj"].as_f64().unwrap();
    let eb = read_json(b.join("summary.json"))["errors"]["e_l2proj"].as_f64().unwrap();
    assert!((ea - eb).abs() < 1e-8 * ea.max(1.0));
}
