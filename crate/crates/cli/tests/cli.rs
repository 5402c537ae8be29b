use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.json"))
}

fn qaideal(args: &[&str], workers: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qaideal"));
    c.args(args);
    if let Some(w) = workers {
        c.env("QAIDEAL_WORKERS", w);
    }
    c.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_on(stage: &str, input: &std::path::Path, extra: &[&str]) -> Output {
    let mut args = vec![stage, "--input", input.to_str().unwrap()];
    args.extend_from_slice(extra);
    qaideal(&args, None)
}

/// Trefoil gluing data with `edit` applied, written to a temporary file.
fn edited(edit: impl FnOnce(&mut Value)) -> tempfile::NamedTempFile {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(fixture("trefoil")).unwrap()).unwrap();
    edit(&mut v);
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), v.to_string()).unwrap();
    f
}

#[test]
fn chart_report_lists_threads() {
    let o = run_on("chart", &fixture("fig8_2tet"), &[]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("rank 36 for 2 tetrahedra\n24 threads\n"), "{s}");
    assert_eq!(s.lines().filter(|l| l.starts_with("  x_")).count(), 24);
    let o = run_on("chart", &fixture("fig8_2tet"), &["--format", "json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["threads"].as_array().unwrap().len(), 24);
    assert!(v["omega_prime"].as_array().unwrap().iter().all(|t| t.as_array().unwrap().len() == 3));
    assert_eq!(v["unimodular"], true);
    assert_eq!(v["central"], true);
}

#[test]
fn classical_trefoil() {
    let o = run_on("classical", &fixture("trefoil"), &[]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "M^6 + L\n");
    let o = run_on("aideal", &fixture("trefoil"), &["--classical"]);
    assert_eq!(stdout(&o), "M^6 + L\n");
}

#[test]
fn aideal_json_report() {
    let o = run_on("aideal", &fixture("trefoil"), &["--reference", "--max-degree", "8", "--format", "json", "--emit-certificates"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["generators", "certificates", "degree_bound_used", "stability_flag", "wall_time"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["display"][0], "(-q^7) M^10 + (-q^(15/2)) M^6 L + (q^(11/2)) M^4 L + L^2");
    assert_eq!(v["stability_flag"], true);
    assert_eq!(v["certificates"].as_array().unwrap().len(), 1);
    let progress = String::from_utf8_lossy(&o.stderr);
    assert!(progress.lines().any(|l| l.starts_with("degree 1:") && l.contains("reduced dimension")));
}

#[test]
fn unknot_chart_input() {
    let o = run_on("aideal", &fixture("unknot"), &["--quiet"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("L^2 + (-q - q^-1) L + (1)\n"));
}

#[test]
fn output_is_independent_of_worker_count() {
    let strip = |o: Output| {
        assert!(o.status.success());
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("wall_time");
        v
    };
    let input = fixture("fig8_2tet");
    let args = ["aideal", "--input", input.to_str().unwrap(), "--max-degree", "5", "--format", "json", "--quiet"];
    let one = strip(qaideal(&args, Some("1")));
    let four = strip(qaideal(&args, Some("4")));
    assert_eq!(one, four);
}

#[test]
fn exit_code_taxonomy() {
    // usage and I/O
    assert_eq!(qaideal(&["nonsense", "--input", "x"], None).status.code(), Some(2));
    assert_eq!(run_on("chart", std::path::Path::new("/nonexistent.json"), &[]).status.code(), Some(3));
    // malformed input
    let f = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(f.path(), "{ not json").unwrap();
    assert_eq!(run_on("chart", f.path(), &[]).status.code(), Some(20));
    // gluing errors
    let f = edited(|v| v["gluings"][0][1] = serde_json::json!([0, 0, 1, 2]));
    assert_eq!(run_on("chart", f.path(), &[]).status.code(), Some(22));
    let f = edited(|v| v["gluings"][0][1] = serde_json::json!([2, 3, 0, 1]));
    assert_eq!(run_on("chart", f.path(), &[]).status.code(), Some(21));
    // budget
    let o = run_on("aideal", &fixture("fig8_2tet"), &["--max-rows", "10", "--quiet"]);
    assert_eq!(o.status.code(), Some(30));
    // failed comparison
    assert_eq!(run_on("diff", &fixture("trefoil"), &[]).status.code(), Some(1));
}

#[test]
fn diff_reports_first_divergence() {
    let f = edited(|v| {
        let r = v["expected"]["thread_monodromies"]["r"]["exponents"].as_object_mut().unwrap();
        r.insert("x_012_113".into(), 2.into());
    });
    let o = run_on("diff", f.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("DIFF thread r: matches no thread cycle"), "{s}");
    assert!(s.contains("first divergence: thread r"), "{s}");
    // the same fixture diffed against its own expected block gets further
    let o = run_on("diff", &fixture("trefoil"), &["--expected", fixture("trefoil").to_str().unwrap()]);
    assert!(stdout(&o).contains("first divergence: bulk coefficients"));
}

#[test]
fn advisory_fixture_does_not_fail() {
    let o = run_on("diff", &fixture("knot_5_2"), &[]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("advisory"));
}
