use costlam_core::alpha::alpha_eq;
use costlam_core::parse::parse_cps;
use serde_json::Value;
use std::io::Write;
use std::process::{Command, Output, Stdio};

fn costlam(args: &[&str], stdin: &str) -> Output {
    costlam_env(args, stdin, None)
}

fn costlam_env(args: &[&str], stdin: &str, seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_costlam"));
    cmd.args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    match seed {
        Some(s) => cmd.env("COSTLAM_SEED", s),
        None => cmd.env_remove("COSTLAM_SEED"),
    };
    let mut child = cmd.spawn().unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

fn temp_file(name: &str, contents: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("costlam-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn compile_cps_prints_the_translated_term() {
    let o = costlam(&["compile", "--stage", "cps"], "(\\x. x @ (x @ (x))) @ (\\z. z)");
    assert_eq!(o.status.code(), Some(0));
    let printed = parse_cps(stdout(&o).trim()).unwrap();
    let expected = parse_cps("(\\x k. x @ (x, \\y. x @ (y, k))) @ (\\x k. k @ (x), \\x. halt @ (x))").unwrap();
    assert!(alpha_eq(&printed, &expected), "{}", stdout(&o));
    assert_eq!(report(&o)["stages"][0]["stage"], "cps");
}

#[test]
fn running_a_value_has_an_empty_trace() {
    let o = costlam(&["run", "--calculus", "source", "--trace"], "\\y. y");
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("trace: \nstatus: VALUE\n"), "{}", stdout(&o));
    let r = report(&o);
    assert_eq!(r["traces"][0]["labels"].as_array().unwrap().len(), 0);
    assert_eq!(r["traces"][0]["status"], "VALUE");
    assert_eq!(r["outcome"], "PASS");
}

#[test]
fn cost_check_passes_on_the_seeded_corpus() {
    let o = costlam(&["check", "--property", "cost", "--seed", "7", "--count", "500"], "");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("500 pass, 0 fail, 0 inconclusive"));
    assert_eq!(report(&o)["outcome"], "PASS");
}

#[test]
fn exit_codes() {
    assert_eq!(costlam(&["check", "--property", "nonsense"], "").status.code(), Some(2));
    assert_eq!(costlam(&["frobnicate"], "").status.code(), Some(2));
    let omega = "(\\x. x @ (x)) @ (\\x. x @ (x))";
    let o = costlam(&["run", "--fuel", "10"], omega);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("status: FUEL"));
    assert_eq!(report(&o)["outcome"], "INCONCLUSIVE");
    assert_eq!(costlam(&["run"], "x @ (y)").status.code(), Some(1));
}

#[test]
fn parse_errors_carry_line_and_column() {
    let o = costlam(&["compile"], "let a = x in\n  a @ (");
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("<stdin>:2:"), "{}", stdout(&o));
    assert!(report(&o)["error"].as_str().unwrap().contains("<stdin>:2:"));
}

#[test]
fn generation_is_deterministic_and_seeded_from_the_environment() {
    let a = costlam(&["gen", "--seed", "5", "--count", "8", "--size", "20"], "");
    let b = costlam(&["gen", "--seed", "5", "--count", "8", "--size", "20"], "");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    assert_eq!(stdout(&a).lines().count(), 8);
    let env = costlam_env(&["gen", "--count", "8", "--size", "20"], "", Some("5"));
    assert_eq!(env.stdout, a.stdout);
    let other = costlam(&["gen", "--seed", "6", "--count", "8", "--size", "20"], "");
    assert_ne!(other.stdout, a.stdout);
}

#[test]
fn check_output_is_independent_of_the_worker_count() {
    let one = costlam(&["check", "--property", "structure", "--seed", "3", "--count", "40", "--jobs", "1"], "");
    let four = costlam(&["check", "--property", "structure", "--seed", "3", "--count", "40", "--jobs", "4"], "");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stderr, four.stderr);
}

#[test]
fn every_failure_has_a_shrunk_counterexample_that_still_fails() {
    let o = costlam(&["check", "--property", "simulation", "--seed", "7", "--count", "20"], "");
    assert_eq!(o.status.code(), Some(1));
    let r = report(&o);
    let checks = r["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for (i, c) in checks.iter().enumerate() {
        assert_eq!(c["outcome"], "FAIL");
        let shrunk = c["shrunk"].as_str().unwrap();
        let f = temp_file(&format!("shrunk{i}.src"), shrunk);
        let again = costlam(&["check", "--property", "simulation", "--ctx", "x: t, y: u, z: t", f.to_str().unwrap()], "");
        assert_eq!(again.status.code(), Some(1), "{shrunk}");
        assert_eq!(report(&again)["checks"][0]["name"], c["name"]);
    }
}

#[test]
fn certify_reports_agreement() {
    let o = costlam(&["certify"], "(\\x. x @ (x)) @ (\\z. z)");
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("AGREE"));
    let costs: Vec<&str> = out.lines().filter(|l| l.contains("cost:")).map(|l| l.rsplit(' ').next().unwrap()).collect();
    assert_eq!(costs.len(), 3);
    assert!(costs.iter().all(|c| *c == costs[0]));
    let big = costlam(&["certify", "--big"], "(\\x. x @ (x)) @ (\\z. z)");
    assert_eq!(big.stdout, o.stdout);
}

#[test]
fn cost_prints_two_columns_and_flags() {
    let o = costlam(&["cost"], "(\\x. x @ (x)) @ (\\z. z)");
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().filter(|l| l.contains('\t')).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split('\t').nth(1).unwrap().parse::<u64>().is_ok()));
    assert!(out.contains("SOUND PASS") && out.contains("PRECISE PASS"));
}

#[test]
fn region_checks_on_files() {
    let ctx = "v1: t1, v2: t2, halt: (t1) -{}-> R";
    let good = temp_file("p2.rp", costlam_core::regions::fixtures::P2);
    let bad = temp_file("p1.rp", costlam_core::regions::fixtures::P1);
    let o = costlam(&["check", "--regions", "--ctx", ctx, good.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains(": {}"));
    let o = costlam(&["check", "--regions", "--ctx", ctx, bad.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("not region closed"));
    let o = costlam(&["run", "--calculus", "region", bad.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("AccessDisposed"));
}

#[test]
fn type_judgements_for_every_stage() {
    let f = temp_file("const.src", "\\(x: t2). y");
    let o = costlam(&["check", "--types", "--ctx", "y: t1", f.to_str().unwrap()], "");
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for stage in ["source:", "cps:", "vn:", "cc:", "hoist:"] {
        assert_eq!(out.lines().filter(|l| l.starts_with(stage)).count(), 2, "{stage}");
    }
    assert!(out.contains("pack[exists _t."));
}

#[test]
fn compile_all_stages_with_regions() {
    let o = costlam(&["compile", "--label", "--regions", "--ctx", "y: t"], "(\\(z: t). z) @ (y)");
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let stages: Vec<String> =
        report(&o)["stages"].as_array().unwrap().iter().map(|s| s["stage"].as_str().unwrap().to_string()).collect();
    assert_eq!(stages, ["label", "erase", "cps", "vn", "cc", "hoist", "rtl", "regions"]);
    assert!(stdout(&o).contains("newreg"));
}
