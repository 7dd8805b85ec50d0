use std::path::PathBuf;
use std::process::{Command, Output};

fn sk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sk")).args(args).output().expect("sk runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn temp_file(name: &str, text: &str) -> String {
    let p = std::env::temp_dir().join(format!("sk-cli-{}-{name}", std::process::id()));
    std::fs::write(&p, text).expect("temp file");
    p.to_string_lossy().into_owned()
}

#[test]
fn trace_reads_acting_order_and_dot_words() {
    let o = sk(&["trace", "--left", "U,Z,sigma", "--right", "z.s.th"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "i1\n");
    let o = sk(&["trace", "--left", "sigma,U", "--right", "s.th"]);
    assert_eq!(stdout(&o), "0\n");
}

#[test]
fn trace_json_reports_the_value() {
    let o = sk(&["--json", "trace", "--left", "T^3", "--right", "f+,f+,f+"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("json");
    assert_eq!(v["value"], "i1");
}

#[test]
fn verify_algebra_passes_with_json() {
    let o = sk(&["--json", "--max-deg", "3", "--max-len", "2", "verify-algebra"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("json");
    assert_eq!(v["passed"], true);
    assert_eq!(v["reports"].as_array().map(Vec::len), Some(4));
}

#[test]
fn verify_duality_passes_at_degree_four_length_three() {
    let o = sk(&["verify-duality", "--max-deg", "4", "--max-len", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_examples_passes() {
    let o = sk(&["verify-examples", "--max-iter", "8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn dangling_arrow_is_a_failure() {
    let f = temp_file("dangling.dd", "gen i0 i0,i0\narrow i0 i1 s|sigma\n");
    let o = sk(&["check", "--dd", &f]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn broken_structure_prints_the_violation() {
    let f = temp_file("broken.dd", "gen i0 i0,i0\ngen i1 i1,i1\narrow i0 i1 s|sigma\n");
    let o = sk(&["check", "--dd", &f]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    assert!(stdout(&o).contains("at "));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(sk(&["--no-such-flag"]).status.code(), Some(2));
    assert_eq!(sk(&["trace", "--left", "Q"]).status.code(), Some(2));
    assert_eq!(sk(&["dualize", "nonesuch"]).status.code(), Some(2));
    assert_eq!(sk(&["tensor", "elliptic", "co"]).status.code(), Some(2));
    assert_eq!(sk(&["check"]).status.code(), Some(2));
}

#[test]
fn dualized_elliptic_matches_the_data_file() {
    let o = sk(&["dualize", "elliptic"]);
    assert_eq!(o.status.code(), Some(0));
    let built = sk_core::structures::DDStruct::parse(&stdout(&o)).expect("printed DD parses");
    let file = std::fs::read_to_string(data("elliptic.dd")).expect("data file");
    let printed = sk_core::structures::DDStruct::parse(&file).expect("data parses");
    assert!(built.compare(&printed, "elliptic").passed());
}

#[test]
fn undualize_recovers_the_elliptic_swap() {
    let o = sk(&["undualize", "--dd", &data("elliptic.dd"), "--input", "sigma"]);
    assert_eq!(stdout(&o), "δ(sigma; i0) ∋ i1 ⊗ tau\n");
}

#[test]
fn tensor_tr_with_cotrace_is_the_identity() {
    let o = sk(&["tensor", "tr", "co", "--max-len", "2", "--max-deg", "2"]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines() {
        let (lhs, rhs) = line.split_once(" ∋ ").expect("table row");
        let input = lhs.trim_start_matches("δ(").split(';').next().expect("input");
        assert!(rhs.ends_with(&format!("⊗ {input}")), "{line}");
    }
}

#[test]
fn whitehead_scans() {
    let o = sk(&["scan", "--stair", &data("whitehead.stair"), "--max-iter", "8"]);
    assert_eq!(stdout(&o), "cobonsai bound: 1\ncommensurability constant: 0\n");
    let o = sk(&["check", "--stair", &data("whitehead.stair")]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn transformer_builtin_checks() {
    let o = sk(&["check", "--builtin", "transformer", "--max-len", "3", "--max-deg", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let o = sk(&["check", "--builtin", "elliptic-dual", "--max-len", "3", "--max-deg", "3"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn thread_count_does_not_change_output() {
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_sk"))
            .env("SK_THREADS", threads)
            .args(["--json", "--max-deg", "3", "--max-len", "2", "verify-algebra"])
            .output()
            .expect("sk runs");
        o.stdout
    };
    assert_eq!(run("1"), run("3"));
}
