//! End-to-end runs of the `liftcg` binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use liftcg::compress::CompressionReport;
use liftcg::graph::{serialize, Activation, ComputationGraph, Edge, GraphBundle, NodeId, WeightStore};
use tempfile::TempDir;

fn liftcg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liftcg")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = liftcg(args);
    assert!(
        out.status.success(),
        "liftcg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

fn bundles(path: &str) -> Vec<GraphBundle> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| GraphBundle::from_json(l).unwrap()).collect()
}

fn write_bundle(path: &str, g: &ComputationGraph, w: &WeightStore) {
    std::fs::write(path, serialize(g, w) + "\n").unwrap();
}

#[test]
fn unfold_matches_golden_methane_bundle() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "m.jsonl");
    ok(&["unfold", "--template", "gcn", "--input", "bundled:methane", "--dim", "3", "--seed", "0", "--out", &out]);
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/methane_gcn.jsonl");
    assert_eq!(std::fs::read_to_string(out).unwrap(), std::fs::read_to_string(golden).unwrap());
}

#[test]
fn missing_input_is_a_usage_error() {
    let out = liftcg(&["unfold", "--template", "gcn", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--input"));

    let out = liftcg(&["unfold", "--template", "gcn", "--input", "/nonexistent/x.jsonl", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/x.jsonl"));
}

#[test]
fn unknown_template_is_rejected() {
    let out = liftcg(&["unfold", "--template", "resnet", "--input", "bundled:methane", "--out", "/dev/null"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dim_one_gives_scalar_weights() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "m.jsonl");
    ok(&["unfold", "--template", "graphlets", "--input", "bundled:toy_molecules", "--dim", "1", "--out", &out]);
    let bs = bundles(&out);
    assert_eq!(bs.len(), 10);
    for b in &bs {
        assert_eq!(b.graph.value_dim(), 1);
        assert!(b.weights.weights().iter().all(|t| t.is_scalar()));
    }
}

#[test]
fn compress_example_one_report() {
    let dir = TempDir::new().unwrap();
    let (g, w) = common::example_one();
    let (input, out, report) = (p(&dir, "in.jsonl"), p(&dir, "out.jsonl"), p(&dir, "report.jsonl"));
    write_bundle(&input, &g, &w);
    for mode in ["exact", "nonexact"] {
        ok(&["compress", "--mode", mode, "--digits", "6", "--in", &input, "--out", &out, "--report", &report]);
        let r: CompressionReport =
            serde_json::from_str(std::fs::read_to_string(&report).unwrap().lines().next().unwrap()).unwrap();
        assert_eq!((r.nodes_before, r.nodes_after), (4, 3), "{mode}");
        assert!(r.wall_time > 0.0);
        assert_eq!(bundles(&out)[0].graph.len(), 3);
    }
}

#[test]
fn full_precision_exact_mode_keeps_an_asymmetric_chain() {
    let dir = TempDir::new().unwrap();
    let mut w = WeightStore::new(1);
    for v in [0.3, -0.7, 0.9] {
        w.push(liftcg::graph::Tensor::scalar(v), true, None);
    }
    let g = ComputationGraph::new(
        vec![
            Activation::Const(vec![1.0]),
            Activation::Identity,
            Activation::TanhSum,
            Activation::Identity,
            Activation::SigmoidSum,
        ],
        vec![Edge::new(0, 1, 1), Edge::new(1, 2, 2), Edge::new(2, 3, 3), Edge::new(3, 4, 1)],
        vec![NodeId(4)],
        1,
    )
    .unwrap();
    let (input, out, report) = (p(&dir, "in.jsonl"), p(&dir, "out.jsonl"), p(&dir, "r.jsonl"));
    write_bundle(&input, &g, &w);
    ok(&["compress", "--mode", "exact", "--digits", "17", "--in", &input, "--out", &out, "--report", &report]);
    let r: CompressionReport = serde_json::from_str(std::fs::read_to_string(&report).unwrap().trim()).unwrap();
    assert_eq!(r.merges(), 0);
    assert_eq!(r.nodes_after, 5);
}

#[test]
fn verify_passes_lossless_and_flags_lossy_compression() {
    let dir = TempDir::new().unwrap();
    let (orig, exact, lossy) = (p(&dir, "o.jsonl"), p(&dir, "e.jsonl"), p(&dir, "l.jsonl"));
    ok(&["unfold", "--template", "gcn", "--input", "bundled:toy_molecules", "--dim", "1", "--out", &orig]);
    ok(&["compress", "--mode", "exact", "--in", &orig, "--out", &exact]);
    ok(&["compress", "--mode", "nonexact", "--digits", "2", "--in", &orig, "--out", &lossy]);

    let stdout = ok(&["verify", "--in-original", &orig, "--in-compressed", &exact, "--trials", "20"]);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 10);
    ok(&["verify", "--in-original", &orig, "--in-compressed", &orig, "--trials", "5"]);

    let out = liftcg(&["verify", "--in-original", &orig, "--in-compressed", &lossy, "--trials", "20", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let fail = stdout.lines().find(|l| l.starts_with("FAIL")).expect("a failing graph");
    assert!(fail.contains("at init") && fail.contains("seed 4"), "{fail}");
}

#[test]
fn bench_sweeps_digits() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "bench.csv");
    ok(&[
        "bench", "--template", "graphlets", "--dataset", "bundled:toy_molecules", "--dims", "1,3",
        "--digit-sweep", "1..15", "--out", &out,
    ]);
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "template", "dim", "digits", "inits", "nodes_before", "nodes_after", "edges_before", "edges_after",
            "eval_time_orig", "eval_time_comp", "train_time_orig", "train_time_comp", "train_acc", "test_acc",
            "partitions_match_exact",
        ]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 30);
    for r in &rows {
        let dim: usize = r[1].parse().unwrap();
        let digits: u32 = r[2].parse().unwrap();
        let matches: bool = r[14].parse().unwrap();
        if (dim == 1 && digits >= 12) || (dim == 3 && digits >= 4) {
            assert!(matches, "dim {dim} digits {digits}");
        }
        assert!(r[12].is_empty() && r[13].is_empty(), "no training without folds");
    }
}

#[test]
fn bench_rejects_bad_digit_range() {
    let out = liftcg(&[
        "bench", "--template", "gcn", "--dataset", "bundled:methane", "--digit-sweep", "5..2", "--out", "/dev/null",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_is_deterministic_and_thread_count_independent() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, threads: Option<&str>| {
        let out = p(&dir, name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_liftcg"));
        cmd.args([
            "train", "--template", "gcn", "--dataset", "bundled:toy_molecules", "--dim", "2", "--steps", "15",
            "--compress", "exact", "--seed", "3", "--out", &out,
        ]);
        if let Some(t) = threads {
            cmd.env("LIFTCG_THREADS", t);
        }
        assert!(cmd.output().unwrap().status.success());
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
        assert_eq!(v["trace"]["losses"].as_array().unwrap().len(), 15);
        v["digest"].as_str().unwrap().to_string()
    };
    let a = run("a.json", None);
    assert_eq!(a, run("b.json", None));
    assert_eq!(a, run("c.json", Some("1")));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_liftcg"))
        .args(["gen", "stars", "--out", "/dev/null"])
        .env("LIFTCG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_is_reproducible() {
    let dir = TempDir::new().unwrap();
    for kind in ["stars", "trees", "mols", "kb"] {
        let ext = if kind == "kb" { "tsv" } else { "jsonl" };
        let (a, b) = (p(&dir, &format!("a.{ext}")), p(&dir, &format!("b.{ext}")));
        ok(&["gen", kind, "--seed", "11", "--out", &a]);
        ok(&["gen", kind, "--seed", "11", "--out", &b]);
        let (x, y) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{kind}");
        let manifest = liftcg::data::manifest(&a).unwrap();
        assert!(manifest.sample_count > 0);
    }
}

#[test]
fn knowledge_base_round_trips_through_the_cli() {
    let dir = TempDir::new().unwrap();
    let (kb, bundle) = (p(&dir, "kb.tsv"), p(&dir, "kb.jsonl"));
    std::fs::write(&kb, liftcg::data::bundled::kinships_sample_tsv()).unwrap();
    ok(&["unfold", "--template", "kbe", "--input", &kb, "--dim", "3", "--out", &bundle]);
    let bs = bundles(&bundle);
    assert_eq!(bs.len(), 1);
    assert_eq!(bs[0].graph.outputs().len(), 96);
}
