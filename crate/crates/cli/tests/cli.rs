use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use twcst::dot::node_labels;
use twcst::optimal::{KeyMask, Oracle};
use twcst::thresholds::gen_random_instance;
use twcst::{Instance, Tree};

fn twcst(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twcst"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn instance_file(dir: &TempDir, weights: &[u64]) -> PathBuf {
    write(dir, "instance.json", &Instance::new(weights.to_vec()).unwrap().to_json())
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn solve_eight_key_example_matches_the_oracle() {
    let dir = TempDir::new().unwrap();
    let weights = [8, 3, 4, 3, 2, 9, 8, 7];
    let path = instance_file(&dir, &weights);
    let out = twcst(&["solve", "--instance", s(&path)]);
    assert!(out.status.success());
    let result = json(&out);
    let inst = Instance::new(weights.to_vec()).unwrap();
    let optimum = Oracle::new(&inst).unwrap().cost(KeyMask::full(8)).unwrap();
    assert_eq!(result["cost"], optimum);
    assert_eq!(result["cost"], 127);
    assert_eq!(result["rootKinds"], serde_json::json!(["lt"]));
    let tree: Tree = serde_json::from_value(result["tree"].clone()).unwrap();
    assert_eq!(twcst::cost(&tree, &inst).unwrap(), 127);
}

#[test]
fn solve_and_oracle_agree_on_cost() {
    let dir = TempDir::new().unwrap();
    for n in 1..=9 {
        for seed in 0..3 {
            let inst = gen_random_instance(n, (0, 30), seed).unwrap();
            let path = instance_file(&dir, inst.weights());
            let cost_of = |command| {
                let out = twcst(&[command, "--instance", s(&path)]);
                assert!(out.status.success());
                json(&out)["cost"].to_string()
            };
            assert_eq!(cost_of("solve"), cost_of("oracle"), "{:?}", inst.weights());
        }
    }
}

#[test]
fn theorem_sweep_passes() {
    let out = twcst(&["verify", "--theorem", "--n", "7", "--samples", "1000", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out);
    assert_eq!(summary["samples"], 1000);
    assert_eq!(summary["passed"], true);
    assert!(summary["ties"].as_u64().unwrap() > 0);
}

#[test]
fn theorem_sweep_csv_frontier() {
    let out = twcst(&["verify", "--theorem", "--samples", "300", "--format", "csv", "--jobs", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,weights,w_max,W,ratio,E,L,verdict"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| !r.ends_with("lt-strict")));
}

#[test]
fn lambda_minus_check_passes() {
    let out = twcst(&["verify", "--lambda-minus", "--n", "5", "--max-weight", "6"]);
    assert!(out.status.success());
    let summary = json(&out);
    assert_eq!(summary["violationCount"], 0);
    assert_eq!(summary["scans"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_instance_reports_thresholds() {
    let dir = TempDir::new().unwrap();
    let path = instance_file(&dir, &[3, 4, 3]);
    let out = twcst(&["verify", "--instance", s(&path)]);
    assert!(out.status.success());
    let summary = json(&out);
    assert_eq!(summary["thresholds"]["E"], 16);
    assert_eq!(summary["thresholds"]["L"], 17);
    assert_eq!(summary["thresholds"]["maxRatio"], "2/5");
    assert_eq!(summary["thresholds"]["verdict"], "eq-strict");
    assert_eq!(summary["theorem"], "not-applicable");
    assert_eq!(summary["passed"], true);
}

#[test]
fn render_eq_test() {
    let dir = TempDir::new().unwrap();
    let tree = write(&dir, "tree.json", &Tree::eq(1, Tree::leaf(1), Tree::leaf(2)).to_json());
    let out = twcst(&["render", "--tree", s(&tree)]);
    assert!(out.status.success());
    let dot = stdout(&out);
    assert_eq!(node_labels(&dot).len(), 3);
    assert_eq!(dot.matches("->").count(), 2);
}

#[test]
fn render_round_trips_nodes_and_labels() {
    let dir = TempDir::new().unwrap();
    let tree: Tree = "<6(=1(1,<4(<3(2,3),<5(4,5))),=6(6,<8(7,8)))".parse().unwrap();
    let tree_path = write(&dir, "tree.json", &tree.to_json());
    let inst = instance_file(&dir, &[8, 3, 4, 3, 2, 9, 8, 7]);
    let out_path = dir.path().join("tree.dot");
    let out = twcst(&["render", "--tree", s(&tree_path), "--instance", s(&inst), "--out", s(&out_path)]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let labels = node_labels(&std::fs::read_to_string(&out_path).unwrap());
    let expected: Vec<(String, String)> = tree
        .preorder()
        .into_iter()
        .enumerate()
        .map(|(i, (_, node))| {
            let label = match node.kind() {
                Some(kind) => format!("{}{}", kind.symbol(), node.key()),
                None => format!("{} ({})", node.key(), [8, 3, 4, 3, 2, 9, 8, 7][node.key() - 1]),
            };
            (format!("n{i}"), label)
        })
        .collect();
    assert_eq!(labels, expected);
}

#[test]
fn transform_three_sevenths_instance() {
    let dir = TempDir::new().unwrap();
    let inst = instance_file(&dir, &[3, 2, 2]);
    let tree = write(&dir, "tree.txt", "<2(1,=2(2,3))");
    let out = twcst(&["transform", "--instance", s(&inst), "--tree", s(&tree)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result = json(&out);
    assert_eq!(result["cost"], 11);
    assert_eq!(result["tree"]["kind"], "eq");
    assert_eq!(result["trace"]["inputCost"], 11);

    let out = twcst(&["transform", "--instance", s(&inst), "--tree", s(&tree), "--format", "dot"]);
    assert_eq!(stdout(&out).matches("digraph").count(), 2);
}

#[test]
fn transform_rejects_light_instances() {
    let dir = TempDir::new().unwrap();
    let inst = instance_file(&dir, &[1, 1, 1, 1]);
    let tree = write(&dir, "tree.txt", "<3(=1(1,2),=3(3,4))");
    let out = twcst(&["transform", "--instance", s(&inst), "--tree", s(&tree)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_writes_csv_and_summary() {
    let dir = TempDir::new().unwrap();
    let summary = dir.path().join("summary.json");
    let out = twcst(&["sweep", "--n", "5", "--max-weight", "5", "--summary", s(&summary)]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("n,weights,w_max,W,ratio,E,L,verdict\n"));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["lambdaPlus"]["violationCount"], 0);
    assert!(summary["bestLambdaPlusRatio"].is_string());
}

#[test]
fn input_errors_exit_2_with_json_on_stderr() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"weights\": [1.5, 2]}");
    let empty = write(&dir, "empty.json", "{\"weights\": []}");
    let big = instance_file(&dir, &[1; 16]);
    let cases: Vec<Vec<&str>> = vec![
        vec!["solve"],
        vec!["frobnicate"],
        vec!["solve", "--instance", "/nonexistent/instance.json"],
        vec!["solve", "--instance", s(&bad)],
        vec!["solve", "--instance", s(&empty)],
        vec!["oracle", "--instance", s(&big)],
        vec!["solve", "--instance", s(&bad), "--format", "csv"],
        vec!["verify", "--theorem", "--n", "1"],
    ];
    for args in cases {
        let out = twcst(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&out.stderr).unwrap();
        assert!(err["error"].is_string() && err["message"].is_string(), "{err}");
    }
}

#[test]
fn help_exits_0() {
    let out = twcst(&["--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("transform"));
    let out = twcst(&["verify", "--help"]);
    assert!(stdout(&out).contains("--lambda-minus"));
}

#[test]
fn non_optimal_transform_input_exits_1() {
    let dir = TempDir::new().unwrap();
    let inst = instance_file(&dir, &[1, 1, 1, 6]);
    let tree = write(&dir, "tree.txt", "<3(=1(1,2),=3(3,4))");
    let out = twcst(&["transform", "--instance", s(&inst), "--tree", s(&tree)]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "check-failed");
    assert!(err["message"].as_str().unwrap().contains("not optimal"));
}
