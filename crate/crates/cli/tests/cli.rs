use std::path::Path;
use std::process::{Command, Output};

fn maxlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_maxlab"));
    c.env_remove("MAXLAB_THREADS").env_remove("MAXLAB_TIMESTAMP");
    c
}

fn run(args: &[&str]) -> Output {
    maxlab().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_function(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn discrete(values: &str, left: &str, right: &str) -> String {
    format!(
        r#"{{"kind":"discrete","mode":"rational","core_lo":0,"core_hi":0,"core_values":[{values}],"left_tail":"{left}","right_tail":"{right}"}}"#
    )
}

#[test]
fn compute_fractional_delta() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_function(dir.path(), "delta.json", &discrete(r#""1""#, "0", "0"));
    let o = run(&["compute", "--beta", "0.5", "--uncentered", &f, "--points", "0,1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "point,value,approx,witness");
    assert!(lines[1].starts_with("0,1,"));
    let v: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 2f64.powf(-0.5)).abs() < 1e-15);
}

#[test]
fn compute_constant_and_divergent() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_function(dir.path(), "const1.json", &discrete(r#""1""#, "1", "1"));
    let o = run(&["compute", "--beta", "0", "--uncentered", &c, "--points", "7"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("7,1,"));

    let t = write_function(dir.path(), "tail.json", &discrete(r#""1""#, "0", "1"));
    let o = run(&["compute", "--beta", "1/2", &t, "--points", "0,-3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.contains("infinite")));
}

#[test]
fn compute_step_and_pwl_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_function(
        dir.path(),
        "step.json",
        r#"{"kind":"step","mode":"rational","breakpoints":["0","1"],"values":["0","1","0"]}"#,
    );
    let o = run(&["compute", &s, "--points", "1/2,3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("1/2,1,"));
    assert!(text.contains("3,1/3,"));

    let p = write_function(
        dir.path(),
        "tent.json",
        r#"{"kind":"pwl","mode":"f64","nodes":[[-1,0],[0,1],[1,0]]}"#,
    );
    let o = run(&["compute", &p, "--points", "0", "--side", "right"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\n0,1,"));
    let o = run(&["compute", &p, "--points", "0", "--mode", "rational"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_function(dir.path(), "bad.json", r#"{"kind":"discrete","mode":"rational"}"#);
    assert_eq!(run(&["compute", &bad, "--points", "0"]).status.code(), Some(1));
    assert_eq!(run(&["compute", "/nonexistent.json", "--points", "0"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["reproduce", "thm5", "--beta", "0"]).status.code(), Some(1));
    assert_eq!(run(&["reproduce", "thm9", "--beta", "0.5"]).status.code(), Some(1));
    assert_eq!(run(&["fuzz", "var-bound", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(run(&["fuzz", "var-bound", "--side", "left", "--beta", "1/2"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let o = maxlab().env("MAXLAB_THREADS", "many").args(["fuzz", "var-bound", "--trials", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reproduce_thm5_passes_with_heights() {
    let o = run(&["reproduce", "thm5", "--beta", "0.5", "--jmax", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("j,h_j,"));
    assert!(lines[1].starts_with("1,4,"));
    assert_eq!(lines.last().unwrap(), &"PASS thm5 beta=1/2 jmax=20");
}

#[test]
fn reproduce_thm6_quarter_and_thm3_gap() {
    let o = run(&["reproduce", "thm6", "--beta", "0.25", "--jmax", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).trim_end().ends_with("PASS thm6 beta=1/4 jmax=20"));

    let o = run(&["reproduce", "thm3", "--beta", "0.5", "--jmax", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for line in text.lines().skip(1).take(10) {
        let gap: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((gap - (1.0 - 2f64.powf(-0.5))).abs() < 1e-9, "{line}");
    }
}

#[test]
fn fuzz_reports_zero_violations() {
    let o = run(&["fuzz", "var-bound", "--trials", "300", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("0 violations in 300 trials; max ratio 1"));
    assert_eq!(text.lines().last().unwrap(), "verdict: pass");
}

#[test]
fn converge_prints_verdict_last() {
    let o = run(&["converge", "thm2", "--jmax", "12", "--family", "zero"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().last().unwrap(), "verdict: converges");

    let o = run(&["converge", "thm1", "--jmax", "4", "--grid-step", "1e-2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().last().unwrap().starts_with("verdict: "));
    assert!(text.contains("\"derivative_distance\""));

    let o = run(&["converge", "questionD", "--trials", "3", "--jmax", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().last().unwrap(), "verdict: inconclusive-supporting");
}

#[test]
fn reports_are_byte_identical_and_named_by_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let out_s = out.to_str().unwrap();
    let args = ["converge", "thm2", "--jmax", "8", "--seed", "5", "--format", "json", "--out", out_s];
    let a = maxlab().args(args).arg("--timestamp").arg("T1").output().unwrap();
    let first = std::fs::read(out.join("converge-thm2-5-T1.json")).unwrap();
    let b = maxlab().env("MAXLAB_TIMESTAMP", "T2").env("MAXLAB_THREADS", "1").args(args).output().unwrap();
    let second = std::fs::read(out.join("converge-thm2-5-T2.json")).unwrap();
    assert_eq!(first, second);
    let strip = |o: &Output| stdout(o).lines().filter(|l| !l.starts_with("wrote ")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["config"]["command"], "converge");
    assert_eq!(report["config"]["jmax"], 8);

    let c = maxlab()
        .args(["fuzz", "var-bound", "--trials", "50", "--seed", "9", "--out", out_s, "--timestamp", "T3"])
        .output()
        .unwrap();
    assert!(c.status.success());
    let csv = std::fs::read_to_string(out.join("fuzz-var-bound-9-T3.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
    assert!(csv.starts_with("trial,width,var_f,var_maximal,ratio,violation"));
}
