use std::fs;
use std::path::Path;

use learngraph::analysis::{ComplexityReport, ScalingReport};
use learngraph::cli::{run_with, ExponentReport, OptimizeReport};
use learngraph::emit::parse_graph_json;
use learngraph::graph::ValidationReport;
use learngraph::optimize::GTableRow;
use learngraph::rational::q;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["learngraph"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = call(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    out
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn pattern_file_matches_the_named_pattern() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "tri.txt", "# triangle\n0 1\n1 2\n0 2\n");
    let from_file = ok(&["exponent", "--pattern", &file]);
    assert!(from_file.ends_with(": k=3 l=2 m=1 g=1/27 exponent=35/27\n"));
    let both = ok(&["exponent", "--pattern", &format!("{file},K4"), "--emit", "json"]);
    let rep: ExponentReport = serde_json::from_str(&both).unwrap();
    assert_eq!(rep.patterns.len(), 2);
    assert_eq!(rep.patterns[1].g, q(1, 40));
    assert_eq!(rep.patterns[1].exponent, q(59, 40));
    // Monotone exponent: 2 - min(2/k + g), here set by K4.
    assert_eq!(rep.monotone, q(59, 40));
}

#[test]
fn json_reports_deserialize() {
    let rows: Vec<GTableRow> = serde_json::from_str(&ok(&["gtable", "--max-k", "5", "--emit", "json"])).unwrap();
    assert!(rows.iter().all(|r| r.agree));

    let opt: OptimizeReport = serde_json::from_str(&ok(&["optimize", "--family", "clique", "-k", "4", "--emit", "json"])).unwrap();
    assert_eq!(opt.solution.value, q(3, 2));

    let opt: OptimizeReport = serde_json::from_str(&ok(&["optimize", "--pattern", "triangle", "--emit", "json"])).unwrap();
    assert_eq!(opt.solution.beta, Some(q(1, 27)));

    let an: ComplexityReport = serde_json::from_str(&ok(&["analyze", "--family", "kdist", "-k", "2", "-n", "5", "--emit", "json"])).unwrap();
    assert_eq!(an.stages.len(), 3);
    assert_eq!(an.stages[2].speciality, q(10, 1));

    let v: ValidationReport = serde_json::from_str(&ok(&["verify", "--family", "clique", "-k", "3", "-n", "5", "--emit", "json"])).unwrap();
    assert!(v.is_valid());

    let sc: ScalingReport = serde_json::from_str(&ok(&["scaling", "--family", "kdist", "-k", "2", "--n-list", "4,5,6", "--emit", "json"])).unwrap();
    assert_eq!(sc.points.len(), 3);
}

#[test]
fn emitted_graph_verifies_and_corruption_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let json = ok(&["build", "--family", "kdist", "-k", "2", "-n", "5", "--emit", "json"]);
    let (lg, flow) = parse_graph_json(&json).unwrap();
    assert!(flow.is_some());
    assert_eq!(lg.stage_count(), 3);
    let good = write(dir.path(), "good.json", &json);
    assert_eq!(ok(&["verify", "--graph", &good]), "valid\nstage flow totals: 1, 1, 1\n");

    let mut doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    let first = doc["flows"].as_array_mut().unwrap().iter_mut().find(|f| f["flow"]["num"] != "0").unwrap();
    first["flow"]["num"] = "7".into();
    let bad = write(dir.path(), "bad.json", &doc.to_string());
    let (code, out, _) = call(&["verify", "--graph", &bad]);
    assert_eq!(code, 1);
    assert!(out.contains("violation"));
}

#[test]
fn instance_files() {
    let dir = tempfile::tempdir().unwrap();
    let values = write(dir.path(), "v.txt", "3 1 4 1 5\n");
    assert_eq!(ok(&["verify", "--family", "kdist", "-k", "2", "--instance", &values]).lines().next(), Some("valid"));

    let distinct = write(dir.path(), "d.txt", "1 2 3 4 5\n");
    let (code, _, err) = call(&["build", "--family", "kdist", "-k", "2", "--instance", &distinct]);
    assert_eq!(code, 1);
    assert!(err.contains("negative"));

    let graph = write(dir.path(), "g.txt", "5\n0 1\n1 2\n0 2\n3 4\n");
    let out = ok(&["verify", "--family", "clique", "-k", "3", "--instance", &graph]);
    assert!(out.starts_with("valid"));
    // A larger -n pads with isolated vertices; a smaller one contradicts the file.
    assert!(ok(&["verify", "--family", "clique", "-k", "3", "-n", "6", "--instance", &graph]).starts_with("valid"));
    let (code, _, _) = call(&["build", "--family", "clique", "-k", "3", "-n", "4", "--instance", &graph]);
    assert_eq!(code, 2, "size mismatch is a usage error");
}

#[test]
fn config_supplies_flags_and_explicit_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.cfg", "# defaults\nfamily=kdist\nk=2\nn=5\nemit=json\n");
    let from_cfg = ok(&["analyze", "--config", &cfg]);
    assert_eq!(from_cfg, ok(&["analyze", "--family", "kdist", "-k", "2", "-n", "5", "--emit", "json"]));
    let overridden = ok(&["analyze", "--config", &cfg, "-n", "6", "--emit", "text"]);
    assert_eq!(overridden, ok(&["analyze", "--family", "kdist", "-k", "2", "-n", "6"]));

    let broken = write(dir.path(), "broken.cfg", "family kdist\n");
    assert_eq!(call(&["analyze", "--config", &broken]).0, 2);
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["build", "--family", "clique", "-k", "3", "-n", "5", "--emit", "dot"][..],
        &["analyze", "--pattern", "P3", "-n", "6", "-r", "4"][..],
        &["build", "--family", "kdist", "-k", "2", "-n", "8", "--gen", "planted-values:4", "--seed", "11", "--emit", "json"][..],
    ] {
        assert_eq!(ok(args), ok(args), "{args:?}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(call(&["--help"]).0, 0);
    assert_eq!(call(&["analyze", "--family", "kdist", "-n", "5"]).0, 2);
    assert_eq!(call(&["analyze", "--family", "kdist", "-k", "2", "-n", "5", "-s", "x"]).0, 2);
    assert_eq!(call(&["build", "--family", "kdist", "-k", "2", "-n", "5", "--emit", "svg"]).0, 2);
    assert_eq!(call(&["exponent", "--pattern", "no-such-pattern"]).0, 2);
    assert_eq!(call(&["verify", "--graph", "/nonexistent/graph.json"]).0, 2);
    assert_eq!(call(&["gtable", "--max-k", "2"]).0, 2);
}
