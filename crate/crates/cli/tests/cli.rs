use std::process::{Command, Output};

use serde_json::Value;

fn grwlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grwlab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = grwlab(args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn models_lists_the_catalog() {
    let o = grwlab(&["models"]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(names, ["minkowski", "desitter", "ads-region", "steady-state", "einstein-static", "product-hyperbolic"]);
    let list = json(&["models", "--json"]);
    assert_eq!(list.as_array().unwrap().len(), 6);
    assert_eq!(list[2]["fiber"], "hyperbolic-halfplane");
}

#[test]
fn model_files_round_trip_through_check_model() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["ads-region", "desitter", "steady-state"] {
        let text = stdout(&grwlab(&["models", "--show", name]));
        let path = dir.path().join(format!("{name}.model"));
        std::fs::write(&path, text).unwrap();
        let from_file = json(&["check-model", "--model", path.to_str().unwrap(), "--json"]);
        let builtin = json(&["check-model", "--model", name, "--json"]);
        assert_eq!(from_file, builtin, "{name}");
    }
}

#[test]
fn parse_expr_differentiates_and_evaluates() {
    let o = grwlab(&["parse-expr", "log(cos(t))", "--diff", "2", "--at", "t=0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].parse::<f64>().unwrap(), -1.0);
    let v = json(&["parse-expr", "x^3", "--diff", "1", "--at", "x=2", "--json"]);
    assert_eq!(v["value"], 12.0);
    assert_eq!(grwlab(&["parse-expr", "x*y", "--diff", "1"]).status.code(), Some(1));
    assert_eq!(grwlab(&["parse-expr", "sin("]).status.code(), Some(4));
}

#[test]
fn check_model_reports_the_corollaries() {
    let v = json(&["check-model", "--model", "steady-state", "--json"]);
    for key in [
        "model",
        "window",
        "samples",
        "ncc",
        "sup_log_f_second",
        "inf_fp_over_f_squared",
        "thm_slice_rigidity",
        "thm_nonexistence",
        "thm_product",
        "cor_height_bounds",
        "constant_curvature",
        "conflict",
        "conclusions",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["thm_nonexistence"]["applicable"], true);
    let es = json(&["check-model", "--model", "einstein-static", "--json"]);
    assert_eq!(es["thm_product"]["beta"], 1.0);
    let ads = json(&["check-model", "--model", "ads-region", "--window", "-1.2,1.2", "--json"]);
    assert_eq!(ads["thm_slice_rigidity"]["applicable"], true);
    assert_eq!(grwlab(&["check-model", "--model", "ads-region", "--window", "1,0"]).status.code(), Some(1));
}

#[test]
fn verify_reports_orders_and_is_deterministic() {
    let args = [
        "verify",
        "--model",
        "product-hyperbolic",
        "--graph",
        "builtin:h2log",
        "--box",
        "-1,1,0.5,2.5",
        "--grid",
        "33,33",
        "--refine",
        "1",
        "--json",
    ];
    let a = grwlab(&args);
    let b = grwlab(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let ids: Vec<&str> = v["reports"].as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["I1", "I2", "I3", "I4", "I5", "I6", "I8", "I9"]);
    assert_eq!(v["skipped"][0]["id"], "I7");
    for r in v["reports"].as_array().unwrap() {
        assert_eq!(r["levels"].as_array().unwrap().len(), 2);
        if r["exact"] == false {
            assert!(r["observed_order"].as_f64().unwrap() > 1.8, "{r}");
        }
    }
}

#[test]
fn solve_then_analyse_the_stored_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("catenoid.grid");
    let out = out.to_str().unwrap();
    let bc = "log(sqrt(x1^2 + x2^2) + sqrt(x1^2 + x2^2 + 1))";
    let v = json(&[
        "solve",
        "--model",
        "minkowski",
        "--box",
        "0.5,1.4,0.5,1.4",
        "--grid",
        "33,33",
        "--bc",
        bc,
        "--out",
        out,
        "--json",
    ]);
    assert_eq!(v["report"]["converged"], true);
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("# grwlab-grid v1\n"));
    assert_eq!(text.lines().count(), 4 + 33);

    let c = json(&[
        "completeness",
        "--model",
        "minkowski",
        "--graph",
        out,
        "--origin",
        "16,16",
        "--rmax",
        "0.3",
        "--G",
        "1",
        "--json",
    ]);
    for key in ["ricci_lower", "volume_growth", "radial_ricci", "angle_sup", "lambda", "overall", "note"] {
        assert!(c.get(key).is_some(), "missing {key}");
    }
    assert_eq!(c["radial_ricci"]["G_expr"], "1");

    let s = json(&["verify", "--model", "minkowski", "--graph", out, "--ids", "I6", "--json"]);
    assert!(s["reports"][0]["max_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(grwlab(&["verify", "--model", "minkowski", "--graph", out, "--grid", "9,9"]).status.code(), Some(1));

    let again = json(&["solve", "--model", "minkowski", "--bc", out, "--json"]);
    assert_eq!(again["report"]["converged"], true);
    assert_eq!(again["counts"], serde_json::json!([33, 33]));
}

#[test]
fn exit_codes() {
    let base = ["solve", "--model", "minkowski", "--box", "-1,1,-1,1", "--grid", "17,17"];
    let run = |extra: &[&str]| grwlab(&[&base[..], extra].concat()).status.code();
    assert_eq!(run(&["--bc", "0.3*x1 + 0.2*x2^2"]), Some(0));
    assert_eq!(run(&["--bc", "0.3*x1 + 0.2*x2^2", "--max-iter", "1"]), Some(2));
    assert_eq!(run(&["--bc", "x1 + x2^2"]), Some(3));
    assert_eq!(grwlab(&["solve", "--model", "minkowski", "--bc", "0"]).status.code(), Some(1));
    assert_eq!(grwlab(&["solve", "--model", "no-such-model", "--bc", "0"]).status.code(), Some(4));
    assert_eq!(grwlab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        grwlab(&["completeness", "--model", "minkowski", "--graph", "/nonexistent", "--origin", "1,1", "--rmax", "1"])
            .status
            .code(),
        Some(4)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.model");
    std::fs::write(&bad, "dim=2\nwarping=exp(t)\nfiber=torus\n").unwrap();
    assert_eq!(grwlab(&["check-model", "--model", bad.to_str().unwrap()]).status.code(), Some(4));
}
