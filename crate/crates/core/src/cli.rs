//! The `liftcg` command line.
//!
//! Graph bundles and compression reports are written as JSON lines, one per
//! input sample. Dataset arguments accept a file path or one of
//! `bundled:methane`, `bundled:toy_molecules` and `bundled:kinships`.
//! The `LIFTCG_THREADS` environment variable caps the worker pool.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::compress::{compress_exact, compress_nonexact, same_partition, sample_weights, CompressionParams};
use crate::data::{self, bundled, Dataset, Synthetic};
use crate::graph::{evaluate, ComputationGraph, GraphBundle, WeightStore};
use crate::templates::{prepare_store, prepare_store_kb, unfold, unfold_kbe, Model, TemplateConfig};
use crate::train::{self, CompressMode, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "liftcg", version, about = "Unfold, compress and train structured convolutional models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unfold a template over every sample into graph bundles.
    Unfold(UnfoldArgs),
    /// Compress graph bundles.
    Compress(CompressArgs),
    /// Check that compressed bundles compute the same outputs.
    Verify(VerifyArgs),
    /// Sweep digits and initialisations and write a CSV of metrics.
    Bench(BenchArgs),
    /// Train a template, optionally on compressed graphs.
    Train(TrainArgs),
    /// Write a synthetic dataset.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct TemplateArgs {
    #[arg(long, value_parser = parse_model)]
    pub template: Model,
    /// Number of layers; the template default when omitted.
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub dim: u64,
    /// Use a separate weight per edge type.
    #[arg(long)]
    pub edge_typed: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse()
}

#[derive(Debug, Args)]
pub struct UnfoldArgs {
    #[command(flatten)]
    pub template: TemplateArgs,
    #[arg(long)]
    pub input: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Nonexact,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub inits: u64,
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..=17))]
    pub digits: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub in_original: PathBuf,
    #[arg(long)]
    pub in_compressed: PathBuf,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Largest accepted relative output deviation.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = parse_model)]
    pub template: Model,
    #[arg(long)]
    pub dataset: String,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Comma separated value dimensions.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub dims: Vec<usize>,
    /// Inclusive digit range `lo..hi`.
    #[arg(long, default_value = "1..15", value_parser = parse_range)]
    pub digit_sweep: (u32, u32),
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub inits_sweep: Vec<usize>,
    /// Crossvalidation folds; 0 skips training.
    #[arg(long, default_value_t = 0)]
    pub folds: usize,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let lo: u32 = lo.trim().parse().map_err(|_| format!("bad lower bound in {s:?}"))?;
    let hi: u32 = hi.trim().parse().map_err(|_| format!("bad upper bound in {s:?}"))?;
    if lo == 0 || hi > 17 || lo > hi {
        return Err(format!("digit range {s:?} must satisfy 1 <= lo <= hi <= 17"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainCompress {
    None,
    Exact,
    Nonexact,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub template: TemplateArgs,
    #[arg(long)]
    pub dataset: String,
    #[arg(long, value_enum, default_value_t = TrainCompress::None)]
    pub compress: TrainCompress,
    #[arg(long, default_value_t = 1)]
    pub inits: usize,
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..=17))]
    pub digits: u32,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// Also run k-fold crossvalidation when at least 2.
    #[arg(long, default_value_t = 0)]
    pub folds: usize,
    /// JSON trace output.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional `step,loss` CSV.
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Stars,
    Trees,
    Mols,
    Kb,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Leaves per star.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 2)]
    pub branching: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 4)]
    pub max_carbons: usize,
    #[arg(long, default_value_t = 14)]
    pub entities: usize,
    #[arg(long, default_value_t = 4)]
    pub relations: usize,
    #[arg(long, default_value_t = 48)]
    pub positives: usize,
    #[arg(long, default_value_t = 48)]
    pub negatives: usize,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Ok(n) = std::env::var("LIFTCG_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: LIFTCG_THREADS must be a positive integer, got {n:?}");
                return 2;
            }
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// Runs a parsed command, printing a summary on stdout. Returns the exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Unfold(a) => cmd_unfold(&a),
        Command::Compress(a) => cmd_compress(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Gen(a) => cmd_gen(&a),
    }
}

/// Loads a dataset path or a `bundled:` name, featurised for `dim`.
pub fn load_source(source: &str, dim: usize) -> Result<Dataset> {
    Ok(match source.strip_prefix("bundled:") {
        Some("methane") => Dataset::Graphs(vec![bundled::methane(dim)]),
        Some("toy_molecules") => Dataset::Graphs(bundled::toy_molecules(dim)),
        Some("kinships") => Dataset::Triples(bundled::kinships_sample()),
        Some(other) => bail!("unknown bundled dataset {other:?} (methane, toy_molecules, kinships)"),
        None => data::load_dataset(source).with_context(|| format!("loading {source}"))?,
    })
}

fn template_config(model: Model, layers: Option<usize>, dim: usize, edge_typed: bool, seed: u64, ds: &Dataset) -> TemplateConfig {
    let mut cfg = TemplateConfig::new(model, dim).seed(seed);
    if let Some(l) = layers {
        cfg = cfg.layers(l);
    }
    if edge_typed {
        if let Dataset::Graphs(g) = ds {
            cfg = cfg.edge_typed(g.iter().flat_map(|s| s.edge_types()).map(str::to_string).collect::<Vec<_>>());
        }
    }
    cfg
}

/// Unfolds every sample (or the whole knowledge base) against one store.
pub fn unfold_dataset(ds: &Dataset, cfg: &TemplateConfig) -> Result<(WeightStore, Vec<ComputationGraph>)> {
    let mut store = WeightStore::new(cfg.value_dim);
    let graphs = match ds {
        Dataset::Graphs(g) => {
            prepare_store(g, cfg, &mut store)?;
            g.iter().map(|s| unfold(s, cfg, &mut store)).collect::<Result<_, _>>()?
        }
        Dataset::Triples(kb) => {
            if cfg.model != Model::Kbe {
                bail!("knowledge bases need the kbe template");
            }
            prepare_store_kb(kb, cfg, &mut store)?;
            vec![unfold_kbe(kb, cfg, &mut store)?]
        }
    };
    Ok((store, graphs))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_bundles(path: &Path) -> Result<Vec<GraphBundle>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| GraphBundle::from_json(l).with_context(|| format!("{}: bundle on line {}", path.display(), i + 1)))
        .collect()
}

fn bundles_to_jsonl(bundles: &[GraphBundle]) -> String {
    bundles.iter().map(|b| b.to_json() + "\n").collect()
}

fn cmd_unfold(a: &UnfoldArgs) -> Result<i32> {
    let t = &a.template;
    let ds = load_source(&a.input, t.dim as usize)?;
    let cfg = template_config(t.template, t.layers, t.dim as usize, t.edge_typed, t.seed, &ds);
    let (store, graphs) = unfold_dataset(&ds, &cfg)?;
    let bundles: Vec<GraphBundle> =
        graphs.into_iter().map(|graph| GraphBundle { graph, weights: store.clone() }).collect();
    write(&a.out, &bundles_to_jsonl(&bundles))?;
    let nodes: usize = bundles.iter().map(|b| b.graph.len()).sum();
    let edges: usize = bundles.iter().map(|b| b.graph.edges().len()).sum();
    println!("unfolded {} graphs: {nodes} nodes, {edges} edges, {} weights", bundles.len(), store.len());
    Ok(0)
}

fn cmd_compress(a: &CompressArgs) -> Result<i32> {
    let params = CompressionParams::new(a.inits as usize, a.digits, a.seed);
    let mut out = Vec::new();
    let mut reports = String::new();
    for b in read_bundles(&a.input)? {
        let (graph, report) = match a.mode {
            Mode::Exact => compress_exact(&b.graph, &b.weights, params)?,
            Mode::Nonexact => compress_nonexact(&b.graph, &b.weights, params)?,
        };
        println!(
            "nodes {} -> {}, edges {} -> {}, {} merges",
            report.nodes_before,
            report.nodes_after,
            report.edges_before,
            report.edges_after,
            report.merges()
        );
        reports.push_str(&serde_json::to_string(&report)?);
        reports.push('\n');
        out.push(GraphBundle { graph, weights: b.weights });
    }
    write(&a.out, &bundles_to_jsonl(&out))?;
    if let Some(r) = &a.report {
        write(r, &reports)?;
    }
    Ok(0)
}

/// Largest relative output deviation between two graphs over `trials`
/// weight draws, with the trial index where it occurred.
pub fn max_deviation(
    original: &GraphBundle,
    compressed: &GraphBundle,
    trials: usize,
    seed: u64,
) -> Result<(f64, usize)> {
    if original.graph.outputs().len() != compressed.graph.outputs().len() {
        bail!("graphs have different numbers of outputs");
    }
    if original.weights.len() != compressed.weights.len() {
        bail!("bundles carry different weight stores");
    }
    let mut worst = (0.0f64, 0);
    for (trial, w) in sample_weights(&original.weights, seed, trials).iter().enumerate() {
        let va = evaluate(&original.graph, w)?;
        let vb = evaluate(&compressed.graph, w)?;
        for (oa, ob) in original.graph.outputs().iter().zip(compressed.graph.outputs()) {
            for (x, y) in va[oa.0].iter().zip(&vb[ob.0]) {
                let dev = if x == y { 0.0 } else { (x - y).abs() / x.abs().max(y.abs()) };
                if dev > worst.0 || dev.is_nan() {
                    worst = (dev, trial);
                }
            }
        }
    }
    Ok(worst)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let orig = read_bundles(&a.in_original)?;
    let comp = read_bundles(&a.in_compressed)?;
    if orig.len() != comp.len() {
        bail!("{} original bundles but {} compressed ones", orig.len(), comp.len());
    }
    let mut pass = true;
    for (i, (o, c)) in orig.iter().zip(&comp).enumerate() {
        let (dev, trial) = max_deviation(o, c, a.trials as usize, a.seed)?;
        if dev <= a.tol {
            println!("PASS graph {i}: max relative deviation {dev:e}");
        } else {
            pass = false;
            println!("FAIL graph {i}: max relative deviation {dev:e} at init {trial} (seed {})", a.seed);
        }
    }
    Ok(if pass { 0 } else { 1 })
}

/// One row of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub template: String,
    pub dim: usize,
    pub digits: u32,
    pub inits: usize,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub eval_time_orig: f64,
    pub eval_time_comp: f64,
    pub train_time_orig: Option<f64>,
    pub train_time_comp: Option<f64>,
    pub train_acc: Option<f64>,
    pub test_acc: Option<f64>,
    pub partitions_match_exact: bool,
}

fn eval_time(graphs: &[ComputationGraph], w: &WeightStore) -> Result<f64> {
    let start = Instant::now();
    for g in graphs {
        evaluate(g, w)?;
    }
    Ok(start.elapsed().as_secs_f64())
}

/// Runs the digit and initialisation sweep of `cmd_bench` and returns its rows.
pub fn bench_rows(a: &BenchArgs) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &dim in &a.dims {
        if dim == 0 {
            bail!("dimensions must be positive");
        }
        let ds = load_source(&a.dataset, dim)?;
        let cfg = template_config(a.template, a.layers, dim, false, a.seed, &ds);
        let (store, graphs) = unfold_dataset(&ds, &cfg)?;
        let exact: Vec<_> = graphs
            .iter()
            .map(|g| compress_exact(g, &store, CompressionParams::new(1, 12, a.seed)))
            .collect::<Result<_, _>>()?;
        let eval_orig = eval_time(&graphs, &store)?;
        let tc = TrainConfig::default().steps(a.steps).folds(a.folds).seed(a.seed);
        let orig_cv = if a.folds >= 2 { Some(train::crossvalidate(&ds, &cfg, &tc, CompressMode::None)?) } else { None };
        for &inits in &a.inits_sweep {
            for digits in a.digit_sweep.0..=a.digit_sweep.1 {
                let params = CompressionParams::new(inits, digits, a.seed);
                let mut comp = Vec::with_capacity(graphs.len());
                let mut matches = true;
                for (g, (_, ex)) in graphs.iter().zip(&exact) {
                    let (c, rep) = compress_nonexact(g, &store, params)?;
                    matches &= same_partition(&rep.representatives(), &ex.representatives(), &g.reachable_from_outputs());
                    comp.push(c);
                }
                let cv = if a.folds >= 2 {
                    Some(train::crossvalidate(&ds, &cfg, &tc, CompressMode::NonExact { inits, digits })?)
                } else {
                    None
                };
                rows.push(BenchRow {
                    template: a.template.name().to_string(),
                    dim,
                    digits,
                    inits,
                    nodes_before: graphs.iter().map(ComputationGraph::len).sum(),
                    nodes_after: comp.iter().map(ComputationGraph::len).sum(),
                    edges_before: graphs.iter().map(|g| g.edges().len()).sum(),
                    edges_after: comp.iter().map(|g| g.edges().len()).sum(),
                    eval_time_orig: eval_orig,
                    eval_time_comp: eval_time(&comp, &store)?,
                    train_time_orig: orig_cv.as_ref().map(|r| r.folds.iter().map(|f| f.train_time).sum()),
                    train_time_comp: cv.as_ref().map(|r| r.folds.iter().map(|f| f.train_time).sum()),
                    train_acc: cv.as_ref().map(|r| r.train_accuracy.mean),
                    test_acc: cv.as_ref().map(|r| r.test_accuracy.mean),
                    partitions_match_exact: matches,
                });
            }
        }
    }
    Ok(rows)
}

fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let rows = bench_rows(a)?;
    let mut w = csv::Writer::from_path(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(0)
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    digest: String,
    trace: &'a train::TrainTrace,
    crossvalidation: Option<train::CvReport>,
}

fn cmd_train(a: &TrainArgs) -> Result<i32> {
    let t = &a.template;
    let ds = load_source(&a.dataset, t.dim as usize)?;
    let cfg = template_config(t.template, t.layers, t.dim as usize, t.edge_typed, t.seed, &ds);
    let mode = match a.compress {
        TrainCompress::None => CompressMode::None,
        TrainCompress::Exact => CompressMode::Exact,
        TrainCompress::Nonexact => CompressMode::NonExact { inits: a.inits, digits: a.digits },
    };
    let tc = TrainConfig::default().steps(a.steps).folds(a.folds.max(2)).seed(t.seed);
    let trace = train::train(&ds, &cfg, &tc, mode)?;
    let crossvalidation = if a.folds >= 2 { Some(train::crossvalidate(&ds, &cfg, &tc, mode)?) } else { None };
    let out = TrainOutput { digest: trace.digest(), trace: &trace, crossvalidation };
    write(&a.out, &serde_json::to_string_pretty(&out)?)?;
    if let Some(p) = &a.loss_csv {
        write(p, &trace.to_csv())?;
    }
    println!(
        "loss {:.6} -> {:.6}, train accuracy {:.3}, digest {}",
        trace.losses[0],
        trace.train.mse,
        trace.train.accuracy,
        out.digest
    );
    if let Some(cv) = &out.crossvalidation {
        println!("test accuracy {:.3} +- {:.3}", cv.test_accuracy.mean, cv.test_accuracy.std);
    }
    Ok(0)
}

fn cmd_gen(a: &GenArgs) -> Result<i32> {
    let spec = match a.kind {
        GenKind::Stars => Synthetic::Stars { k: a.k, count: a.count },
        GenKind::Trees => Synthetic::Trees { branching: a.branching, depth: a.depth, count: a.count },
        GenKind::Mols => Synthetic::Mols { count: a.count, max_carbons: a.max_carbons },
        GenKind::Kb => Synthetic::Kb {
            entities: a.entities,
            relations: a.relations,
            positives: a.positives,
            negatives: a.negatives,
        },
    };
    if a.dim == 0 {
        bail!("--dim must be positive");
    }
    let ds = data::gen_synthetic(spec, a.dim, a.seed);
    data::save_dataset(&ds, &a.out)?;
    println!("wrote {} samples to {}", ds.len(), a.out.display());
    Ok(0)
}
