use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ahp-rank"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json_ok(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{args:?}: invalid JSON: {e}"))
}

const FIXTURES: [&str; 4] = [
    "reversal_example.csv",
    "ambiguous_cycle.csv",
    "shared_edge_cycles.csv",
    "tie_cycle.csv",
];

#[test]
fn rank_reversal_example_json() {
    let path = fixture("reversal_example.csv");
    let v = json_ok(&["rank", path.to_str().unwrap(), "--epsilon", "0.1", "--json"]);
    assert!((v["sigma"].as_f64().unwrap() - 11.0 * 2f64.ln()).abs() < 1e-9);
    assert!((v["objective"].as_f64().unwrap() - 1.7232).abs() < 1e-3);
    let w: Vec<f64> = v["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(w.len(), 7);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    assert!(w[0] > w[1]);
    assert_eq!(v["mvs"].as_f64(), Some(0.0));
    assert!(v["kkt"]["stationarity"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["ordinal"]["provenance"], "FastPath");
}

#[test]
fn rank_unconstrained_method_reports_the_violation() {
    let path = fixture("reversal_example.csv");
    let v = json_ok(&["--json", "rank", path.to_str().unwrap(), "--method", "ills"]);
    assert_eq!(v["method"], "ILLS");
    assert!((v["objective"].as_f64().unwrap() - 1.6963).abs() < 1e-3);
    assert_eq!(v["mvs"].as_f64(), Some(1.0));
    let w = v["weights"].as_array().unwrap();
    assert!(w[0].as_f64() < w[1].as_f64());
}

#[test]
fn rank_text_output_uses_twelve_digits() {
    let path = fixture("reversal_example.csv");
    let o = run(&["rank", path.to_str().unwrap(), "--epsilon", "0.1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("objective: 1.72317594492"), "{text}");
    assert!(text.contains("sigma: 7.62461898616"), "{text}");
}

#[test]
fn rank_component_one_normalization() {
    let path = fixture("tie_cycle.csv");
    let v = json_ok(&[
        "--json",
        "rank",
        path.to_str().unwrap(),
        "--normalization",
        "component-one-fixed",
    ]);
    assert_eq!(v["weights"][0].as_f64(), Some(1.0));
}

#[test]
fn ordinal_only_prints_matrix_and_objective() {
    let path = fixture("reversal_example.csv");
    let o = run(&["rank", path.to_str().unwrap(), "--ordinal-only"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().take(7).collect();
    assert_eq!(rows[0], "0,1,1,1,1,1,1");
    assert_eq!(rows[5], "0,0,0,0,0,0,0");
    assert!(text.contains("unique: true"));
    assert!(text.contains("sigma: 7.62461898616"));

    let path = fixture("ambiguous_cycle.csv");
    let v = json_ok(&["rank", path.to_str().unwrap(), "--ordinal-only", "--json"]);
    assert_eq!(v["unique"], false);
    assert_eq!(v["provenance"], "ExactIlp");
    let expected = 7f64.ln() + 5f64.ln() + 3f64.ln();
    assert!((v["sigma"].as_f64().unwrap() - expected).abs() < 1e-9);
}

#[test]
fn emit_dot_writes_both_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("graphs.dot");
    let path = fixture("tie_cycle.csv");
    let o = run(&["rank", path.to_str().unwrap(), "--emit-dot", dot.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dot).unwrap();
    assert!(text.contains("graph"));
    assert!(text.contains("digraph"));
}

#[test]
fn missing_file_is_a_domain_error() {
    let o = run(&["rank", "does-not-exist.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("FileNotFound"), "{}", stderr(&o));
}

#[test]
fn malformed_and_disconnected_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n0.4,1\n").unwrap();
    let o = run(&["rank", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("ReciprocityViolation"), "{}", stderr(&o));

    let split = dir.path().join("split.csv");
    std::fs::write(&split, "1,2,,\n1/2,1,,\n,,1,3\n,,1/3,1\n").unwrap();
    for cmd in ["rank", "compare"] {
        let o = run(&[cmd, split.to_str().unwrap(), "--json"]);
        assert_eq!(o.status.code(), Some(1));
        assert!(o.stdout.is_empty());
        assert!(stderr(&o).contains("Disconnected"));
    }

    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "1,x\n1,1\n").unwrap();
    let o = run(&["rank", garbage.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ParseError"));
}

#[test]
fn usage_errors_exit_two_and_list_choices() {
    let path = fixture("tie_cycle.csv");
    let o = run(&["rank", path.to_str().unwrap(), "--method", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("ills-mwov"));

    let o = run(&["rank", path.to_str().unwrap(), "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());

    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rank"));
}

#[test]
fn invalid_parameter_values_are_domain_errors() {
    let path = fixture("tie_cycle.csv");
    let o = run(&["rank", path.to_str().unwrap(), "--epsilon", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    let o = run(&["gen", "--n", "7", "--rho", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("InfeasibleDensity"));
}

#[test]
fn compare_table_has_every_method() {
    let path = fixture("tie_cycle.csv");
    let o = run(&["compare", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("method,sigma,tau,mvs,tds,w_1"));
    assert_eq!(lines.len(), 6);
    for (line, name) in lines[1..].iter().zip(["ILLS-MWOV", "ILLS", "EV", "IDLS", "IWLS"]) {
        assert!(line.starts_with(&format!("{name},")));
    }

    let v = json_ok(&["compare", path.to_str().unwrap(), "--format", "json"]);
    let mvs: Vec<f64> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["mvs"].as_f64().unwrap())
        .collect();
    assert!(mvs[1..].iter().all(|&m| mvs[0] < m));
}

#[test]
fn metrics_report_and_change_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.csv");
    std::fs::write(&w, "1\n1\n1\n1\n1\n1\n1\n").unwrap();
    let path = fixture("reversal_example.csv");
    let v = json_ok(&["metrics", path.to_str().unwrap(), w.to_str().unwrap()]);
    // uniform weights tie every compared pair: each of the 11 pairs counts
    // one half in both orientations
    assert_eq!(v["mvs"].as_f64(), Some(11.0));
    assert_eq!(v["sigma"].as_f64(), Some(0.0));
    assert!(v.get("delta").is_none_or(Value::is_null));
    let tds = v["tds"].as_f64().unwrap();
    // each pair contributes (2 - 1)^2 + (1/2 - 1)^2
    assert!((tds - 11.0 * 1.25).abs() < 1e-9);

    let v = json_ok(&[
        "metrics",
        path.to_str().unwrap(),
        w.to_str().unwrap(),
        "--against",
        w.to_str().unwrap(),
    ]);
    let delta = v["delta"].as_array().unwrap();
    assert_eq!(delta.len(), 7);
    assert!(delta
        .iter()
        .flat_map(|r| r.as_array().unwrap())
        .all(|x| x.as_f64() == Some(0.0)));

    let short = dir.path().join("short.csv");
    std::fs::write(&short, "1\n2\n").unwrap();
    let o = run(&["metrics", path.to_str().unwrap(), short.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}

#[test]
fn gen_matches_golden_file() {
    let o = run(&["gen", "--n", "7", "--rho", "0.5", "--gamma", "0.2", "--seed", "42"]);
    assert!(o.status.success());
    let golden = include_str!("../../core/tests/golden/gen_n7_rho0.5_gamma0.2_seed42.csv");
    assert_eq!(stdout(&o), golden);
}

#[test]
fn gen_output_is_a_valid_instance() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    let t = dir.path().join("t.csv");
    let o = run(&[
        "gen",
        "--n",
        "7",
        "--rho",
        "0.5",
        "--gamma",
        "0.2",
        "--seed",
        "42",
        "--truth",
        t.to_str().unwrap(),
    ]);
    std::fs::write(&m, &o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = stdout(&o)
        .lines()
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    let mut edges = 0;
    for i in 0..7 {
        assert_eq!(rows[i][i], 1.0);
        for j in i + 1..7 {
            if rows[i][j] != 0.0 {
                edges += 1;
                assert!((rows[i][j] * rows[j][i] - 1.0).abs() < 1e-9);
            } else {
                assert_eq!(rows[j][i], 0.0);
            }
        }
    }
    // ceil(0.5 * 21)
    assert_eq!(edges, 11);
    // the written matrix and truth round-trip through the other subcommands
    let v = json_ok(&["metrics", m.to_str().unwrap(), t.to_str().unwrap()]);
    assert!(v["tds"].as_f64().unwrap() > 0.0);
    let v = json_ok(&["gen", "--seed", "42", "--json"]);
    assert_eq!(v["n"], 7);
    let again = run(&[
        "gen", "--n", "7", "--rho", "0.5", "--gamma", "0.2", "--seed", "42", "--trial", "1",
    ]);
    assert_ne!(again.stdout, o.stdout);
}

#[test]
fn json_output_parses_for_every_subcommand() {
    for name in FIXTURES {
        let p = fixture(name);
        let p = p.to_str().unwrap();
        json_ok(&["--json", "rank", p]);
        json_ok(&["--json", "rank", p, "--ordinal-only"]);
        for m in ["ills", "ev", "idls", "iwls"] {
            json_ok(&["--json", "rank", p, "--method", m]);
        }
        json_ok(&["--json", "compare", p]);
    }
    let v = json_ok(&["--json", "fixtures"]);
    assert!(!v["checks"].as_array().unwrap().is_empty());
}

#[test]
fn fixtures_report_lists_checks() {
    let o = run(&["fixtures"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().all(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")));
    assert!(text.contains("PASS reversal example: constrained objective"));
}

fn read_dir_sorted(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn experiment_writes_outputs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let base = [
        "experiment",
        "--n",
        "5",
        "--rho",
        "0.6,0.8",
        "--gamma",
        "0.1",
        "--trials",
        "4",
        "--seed",
        "7",
    ];
    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--out", a.to_str().unwrap(), "--svg", "--workers", "1"]);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        read_dir_sorted(&a),
        ["pareto.csv", "pareto.svg", "summary.csv", "timings.csv", "trials.csv"]
    );

    let mut args: Vec<&str> = base.to_vec();
    args.extend(["--out", b.to_str().unwrap(), "--json"]);
    let o = bin().args(&args).env("AHP_RANK_THREADS", "3").output().unwrap();
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["trials"], 8);
    for f in ["trials.csv", "summary.csv", "pareto.csv"] {
        assert_eq!(
            std::fs::read_to_string(a.join(f)).unwrap(),
            std::fs::read_to_string(b.join(f)).unwrap(),
            "{f} differs across worker counts"
        );
    }
    let trials = std::fs::read_to_string(a.join("trials.csv")).unwrap();
    // header plus 2 cells x 4 trials x 5 methods
    assert_eq!(trials.lines().count(), 1 + 40);
}

#[test]
fn experiment_config_file_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"n": 4, "densities": [1.0], "gammas": [0.0], "trials": 2, "methods": ["ills", "ev"]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let v = json_ok(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(v["trials"], 2);
    let summary = v["summary"].as_array().unwrap();
    assert_eq!(summary.len(), 2);
    assert!(summary.iter().all(|r| r["mvs_mean"].as_f64() == Some(0.0)));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 4, "colour": "red"}"#).unwrap();
    let o = run(&[
        "experiment",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());

    let o = run(&[
        "experiment",
        "--n",
        "6",
        "--rho",
        "0.1",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("InfeasibleDensity"));
}
