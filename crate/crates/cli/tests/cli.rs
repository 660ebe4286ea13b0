use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn relpca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relpca")).args(args).output().expect("binary runs")
}

fn run(cmd: &str, fixture_name: &str, extra: &[&str]) -> Output {
    let path = fixture(fixture_name);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    relpca(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("relpca-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn trivial_check_is_all_proven() {
    let o = run("check", "trivial.json", &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().skip(1).collect();
    assert!(!lines.is_empty());
    assert!(lines.iter().all(|l| l.starts_with("PROVEN")), "{out}");
}

#[test]
fn refutation_exits_one_and_prints_counterexample() {
    let o = run("check", "refuted.json", &[]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("REFUTED   morphism/split"), "{out}");
    assert!(out.contains("counterexample:"), "{out}");
}

#[test]
fn usage_and_parse_errors_exit_two() {
    assert_eq!(relpca(&["check"]).status.code(), Some(2));
    assert_eq!(run("check", "trivial.json", &["--format", "yaml"]).status.code(), Some(2));
    assert_eq!(run("check", "missing.json", &[]).status.code(), Some(2));
    let bad = scratch("bad.json", "{\n  \"pcas\": [\n");
    let o = relpca(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error at"));
    let unresolved = scratch("unresolved.json", r#"{"morphisms": [{"name": "f", "pca": "sk", "dom": "X", "cod": "X", "arrow": []}]}"#);
    assert_eq!(relpca(&["check", unresolved.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn empty_suite_prints_header_only() {
    let p = scratch("empty.json", "{}");
    let o = relpca(&["check", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn nabla_two_slice_matches_its_oracle() {
    let o = run("slice", "nabla2.json", &[]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("PROVEN    slice/nabla2/battery"), "{out}");
    assert!(out.contains("oracle all_meet_c"), "{out}");
}

#[test]
fn structured_output_is_byte_stable() {
    let a = run("density", "density.json", &["--format", "structured"]);
    let b = run("density", "density.json", &["--format", "structured"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["command"], "density");
}

#[test]
fn seed_changes_are_reported() {
    let o = run("check", "trivial.json", &["--seed", "0x10", "--fuel", "50"]);
    assert!(stdout(&o).starts_with("relpca check: seed=0x10 fuel=50"));
}

#[test]
fn stored_certificates_replay_identically() {
    let o = run("synthesize", "sk.json", &["--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    let report = scratch("synth.json", &String::from_utf8(o.stdout).unwrap());
    let r = relpca(&["replay", report.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let out = stdout(&r);
    assert_eq!(out.lines().filter(|l| l.starts_with("PROVEN    replay/term/")).count(), 3, "{out}");
    let f = run("replay", "certs.json", &[]);
    assert_eq!(f.status.code(), Some(0), "{}", stdout(&f));
}

#[test]
fn tampered_certificate_fails_replay() {
    let src = std::fs::read_to_string(fixture("certs.json")).unwrap().replace("\"witness\": \"K\"", "\"witness\": \"o0\"");
    let p = scratch("tampered.json", &src);
    let o = relpca(&["replay", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("REFUTED   replay/k-section"), "{}", stdout(&o));
}
