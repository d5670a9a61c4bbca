//! Gradient training over unfolded graphs.
//!
//! Every sample becomes a [`Unit`]: one computation graph plus the targets of
//! some of its outputs. Training is full-batch ADAM on the mean squared error
//! over all targets. Per-unit passes run in parallel but are reduced in unit
//! order, so results are deterministic for a given seed and independent of
//! the thread count.

mod backward;

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compress::{compress_exact, compress_nonexact, CompressionParams};
use crate::data::Dataset;
use crate::graph::{evaluate, ComputationGraph, EvalError, Tensor, WeightStore};
use crate::templates::{
    prepare_store, prepare_store_kb, unfold, unfold_kbe_split, Model, TemplateConfig, TemplateError, Triple, TripleStore,
};

pub use backward::{backward, Gradients};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("{samples} samples cannot be split into {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub adam: Adam,
    pub folds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { steps: 1000, adam: Adam::default(), folds: 5, seed: 0 }
    }
}

impl TrainConfig {
    pub fn steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn folds(mut self, folds: usize) -> Self {
        self.folds = folds;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn check(&self) -> Result<(), TrainError> {
        if self.steps == 0 {
            return Err(TrainError::InvalidConfig("steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Whether and how every unit graph is compressed before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressMode {
    None,
    Exact,
    NonExact { inits: usize, digits: u32 },
}

/// A graph and the regression targets of some of its outputs, given as
/// `(index into outputs, target)`.
#[derive(Debug, Clone)]
pub struct Unit {
    pub graph: ComputationGraph,
    pub targets: Vec<(usize, f64)>,
}

impl Unit {
    pub fn single(graph: ComputationGraph, target: f64) -> Self {
        Unit { graph, targets: vec![(0, target)] }
    }

    /// The same unit with its graph compressed. Output positions are kept.
    pub fn compressed(&self, store: &WeightStore, mode: CompressMode, seed: u64) -> Result<Unit, EvalError> {
        let graph = match mode {
            CompressMode::None => self.graph.clone(),
            CompressMode::Exact => compress_exact(&self.graph, store, CompressionParams::new(1, 12, seed))?.0,
            CompressMode::NonExact { inits, digits } => {
                compress_nonexact(&self.graph, store, CompressionParams::new(inits, digits, seed))?.0
            }
        };
        Ok(Unit { graph, targets: self.targets.clone() })
    }
}

/// Mean squared error and thresholded accuracy over a set of targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub accuracy: f64,
    pub targets: usize,
}

struct Pass {
    sq_err: f64,
    correct: usize,
    count: usize,
    grads: Option<Gradients>,
}

fn unit_pass(u: &Unit, w: &WeightStore, norm: f64, with_grads: bool) -> Result<Pass, EvalError> {
    let values = evaluate(&u.graph, w)?;
    let outs = u.graph.outputs();
    let mut upstream: Vec<Vec<f64>> = outs.iter().map(|o| vec![0.0; values[o.0].len()]).collect();
    let (mut sq_err, mut correct) = (0.0, 0);
    for &(i, t) in &u.targets {
        let y = &values[outs[i].0];
        let m = y.len() as f64;
        for (j, &yj) in y.iter().enumerate() {
            sq_err += (yj - t).powi(2) / m;
            upstream[i][j] += 2.0 * (yj - t) / (m * norm);
        }
        if (y[0] >= 0.5) == (t >= 0.5) {
            correct += 1;
        }
    }
    let grads = if with_grads { Some(backward(&u.graph, w, &values, &upstream)?) } else { None };
    Ok(Pass { sq_err, correct, count: u.targets.len(), grads })
}

fn run_passes(units: &[Unit], w: &WeightStore, with_grads: bool) -> Result<(Metrics, Option<Gradients>), EvalError> {
    let total: usize = units.iter().map(|u| u.targets.len()).sum();
    let norm = total.max(1) as f64;
    let passes = units
        .par_iter()
        .map(|u| unit_pass(u, w, norm, with_grads))
        .collect::<Result<Vec<_>, _>>()?;
    let mut grads = with_grads.then(|| Gradients::zeros(w));
    let (mut sq, mut correct) = (0.0, 0);
    for p in &passes {
        sq += p.sq_err;
        correct += p.correct;
        if let (Some(acc), Some(g)) = (grads.as_mut(), p.grads.as_ref()) {
            acc.accumulate(g);
        }
    }
    let count: usize = passes.iter().map(|p| p.count).sum();
    let metrics = Metrics {
        mse: sq / norm,
        accuracy: if count == 0 { 0.0 } else { correct as f64 / count as f64 },
        targets: count,
    };
    Ok((metrics, grads))
}

/// Loss and accuracy of `units` under `w`.
pub fn evaluate_units(units: &[Unit], w: &WeightStore) -> Result<Metrics, EvalError> {
    Ok(run_passes(units, w, false)?.0)
}

/// Mean squared error over all targets and its gradient for every label.
pub fn loss_and_gradients(units: &[Unit], w: &WeightStore) -> Result<(Metrics, Gradients), EvalError> {
    let (m, g) = run_passes(units, w, true)?;
    Ok((m, g.expect("gradients requested")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelGradient {
    pub label: usize,
    pub name: Option<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    /// Training loss before each update, one entry per step.
    pub losses: Vec<f64>,
    /// Gradients of the training loss at the final weights, trainable labels only.
    pub final_gradients: Vec<LabelGradient>,
    /// Metrics at the final weights.
    pub train: Metrics,
    pub test: Option<Metrics>,
    /// Number of MAX subgradient choices over all steps.
    pub non_differentiable: usize,
    pub nodes: usize,
    pub edges: usize,
    /// Seconds spent in the optimisation loop.
    pub wall_time: f64,
}

impl TrainTrace {
    /// SHA-256 over the bit patterns of losses and final gradients.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for l in &self.losses {
            h.update(l.to_bits().to_le_bytes());
        }
        for g in &self.final_gradients {
            h.update((g.label as u64).to_le_bytes());
            for v in &g.values {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `step,loss` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss\n");
        for (i, l) in self.losses.iter().enumerate() {
            out.push_str(&format!("{},{l:e}\n", i + 1));
        }
        out
    }
}

/// Runs `cfg.steps` full-batch ADAM updates on `w`.
pub fn fit(units: &[Unit], w: &mut WeightStore, cfg: &TrainConfig) -> Result<TrainTrace, TrainError> {
    cfg.check()?;
    if units.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let start = Instant::now();
    let Adam { lr, beta1, beta2, eps } = cfg.adam;
    let mut m: Vec<Tensor> = w.weights().iter().map(|t| Tensor::zeros(t.rows, t.cols)).collect();
    let mut v = m.clone();
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut non_differentiable = 0;
    for step in 1..=cfg.steps {
        let (metrics, grads) = loss_and_gradients(units, w)?;
        losses.push(metrics.mse);
        non_differentiable += grads.non_differentiable.len();
        let bc1 = 1.0 - beta1.powi(step as i32);
        let bc2 = 1.0 - beta2.powi(step as i32);
        let trainable = w.trainable_mask().to_vec();
        for (l, t) in w.weights_mut().iter_mut().enumerate() {
            if !trainable[l] {
                continue;
            }
            for (k, x) in t.data.iter_mut().enumerate() {
                let g = grads.per_label[l].data[k];
                m[l].data[k] = beta1 * m[l].data[k] + (1.0 - beta1) * g;
                v[l].data[k] = beta2 * v[l].data[k] + (1.0 - beta2) * g * g;
                *x -= lr * (m[l].data[k] / bc1) / ((v[l].data[k] / bc2).sqrt() + eps);
            }
        }
    }
    let wall_time = start.elapsed().as_secs_f64();
    let (train, grads) = loss_and_gradients(units, w)?;
    let final_gradients = grads
        .per_label
        .into_iter()
        .enumerate()
        .filter(|&(l, _)| w.trainable_mask()[l])
        .map(|(l, t)| LabelGradient { label: l, name: w.name(crate::graph::Label(l)).map(str::to_string), values: t.data })
        .collect();
    Ok(TrainTrace {
        losses,
        final_gradients,
        train,
        test: None,
        non_differentiable,
        nodes: units.iter().map(|u| u.graph.len()).sum(),
        edges: units.iter().map(|u| u.graph.edges().len()).sum(),
        wall_time,
    })
}

/// Fresh weight store with every parameter the dataset needs.
pub fn init_store(dataset: &Dataset, cfg: &TemplateConfig) -> Result<WeightStore, TrainError> {
    let mut store = WeightStore::new(cfg.value_dim);
    match dataset {
        Dataset::Graphs(g) => prepare_store(g, cfg, &mut store)?,
        Dataset::Triples(kb) => prepare_store_kb(kb, cfg, &mut store)?,
    }
    Ok(store)
}

/// Unfolds graph samples into one unit each.
pub fn graph_units(
    samples: &[crate::templates::InputSample],
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<Vec<Unit>, TrainError> {
    samples
        .iter()
        .map(|s| Ok(Unit::single(unfold(s, cfg, store)?, s.label)))
        .collect()
}

/// One unit scoring `queries`, with propagation over the positive `context`.
pub fn kb_unit(
    kb: &TripleStore,
    context: &[Triple],
    queries: &[Triple],
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<Unit, TrainError> {
    let graph = unfold_kbe_split(kb, context, queries, cfg, store)?;
    Ok(Unit { graph, targets: queries.iter().enumerate().map(|(i, t)| (i, t.label)).collect() })
}

fn compress_all(units: Vec<Unit>, store: &WeightStore, mode: CompressMode, seed: u64) -> Result<Vec<Unit>, TrainError> {
    if mode == CompressMode::None {
        return Ok(units);
    }
    units
        .par_iter()
        .map(|u| u.compressed(store, mode, seed).map_err(TrainError::from))
        .collect()
}

fn check_model(dataset: &Dataset, cfg: &TemplateConfig) -> Result<(), TrainError> {
    match (dataset, cfg.model) {
        (Dataset::Triples(_), Model::Kbe) | (Dataset::Graphs(_), _) => Ok(()),
        (Dataset::Triples(_), m) => Err(TemplateError::WrongInput(m).into()),
    }
}

/// Unfolds the whole dataset, optionally compresses it and trains on it.
pub fn train(
    dataset: &Dataset,
    cfg: &TemplateConfig,
    tc: &TrainConfig,
    mode: CompressMode,
) -> Result<TrainTrace, TrainError> {
    tc.check()?;
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    check_model(dataset, cfg)?;
    let mut store = init_store(dataset, cfg)?;
    let units = match dataset {
        Dataset::Graphs(g) => graph_units(g, cfg, &mut store)?,
        Dataset::Triples(kb) => {
            let context: Vec<Triple> = kb.triples.iter().filter(|t| t.label >= 0.5).cloned().collect();
            vec![kb_unit(kb, &context, &kb.triples, cfg, &mut store)?]
        }
    };
    let units = compress_all(units, &store, mode, tc.seed)?;
    fit(&units, &mut store, tc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub train: Metrics,
    pub test: Metrics,
    pub trace_digest: String,
    pub train_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population standard deviation.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len().max(1) as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldMetrics>,
    pub train_accuracy: MeanStd,
    pub test_accuracy: MeanStd,
    pub test_mse: MeanStd,
}

/// Seeded shuffle of sample indices split into `folds` contiguous blocks.
pub fn fold_split(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut crate::rng::keyed(seed, "folds"));
    (0..folds).map(|f| idx[f * n / folds..(f + 1) * n / folds].to_vec()).collect()
}

/// k-fold crossvalidation. Each fold trains from the same initial weights.
pub fn crossvalidate(
    dataset: &Dataset,
    cfg: &TemplateConfig,
    tc: &TrainConfig,
    mode: CompressMode,
) -> Result<CvReport, TrainError> {
    tc.check()?;
    check_model(dataset, cfg)?;
    if tc.folds < 2 {
        return Err(TrainError::InvalidConfig("at least 2 folds are required".into()));
    }
    if dataset.len() < tc.folds {
        return Err(TrainError::TooFewSamples { samples: dataset.len(), folds: tc.folds });
    }
    let initial = init_store(dataset, cfg)?;
    let split = fold_split(dataset.len(), tc.folds, tc.seed);
    let mut folds = Vec::with_capacity(tc.folds);
    for (f, test_idx) in split.iter().enumerate() {
        let mut is_test = vec![false; dataset.len()];
        test_idx.iter().for_each(|&i| is_test[i] = true);
        let mut store = initial.clone();
        let (train_units, test_units) = match dataset {
            Dataset::Graphs(g) => {
                let pick = |want: bool| -> Vec<_> {
                    (0..g.len()).filter(|&i| is_test[i] == want).map(|i| g[i].clone()).collect()
                };
                (graph_units(&pick(false), cfg, &mut store)?, graph_units(&pick(true), cfg, &mut store)?)
            }
            Dataset::Triples(kb) => {
                let pick = |want: bool| -> Vec<Triple> {
                    (0..kb.len()).filter(|&i| is_test[i] == want).map(|i| kb.triples[i].clone()).collect()
                };
                let (train_t, test_t) = (pick(false), pick(true));
                let context: Vec<Triple> = train_t.iter().filter(|t| t.label >= 0.5).cloned().collect();
                (
                    vec![kb_unit(kb, &context, &train_t, cfg, &mut store)?],
                    vec![kb_unit(kb, &context, &test_t, cfg, &mut store)?],
                )
            }
        };
        let train_units = compress_all(train_units, &store, mode, tc.seed)?;
        let test_units = compress_all(test_units, &store, mode, tc.seed)?;
        let mut trace = fit(&train_units, &mut store, tc)?;
        let test = evaluate_units(&test_units, &store)?;
        trace.test = Some(test);
        folds.push(FoldMetrics {
            fold: f,
            train: trace.train,
            test,
            trace_digest: trace.digest(),
            train_time: trace.wall_time,
        });
    }
    let col = |f: &dyn Fn(&FoldMetrics) -> f64| MeanStd::of(&folds.iter().map(f).collect::<Vec<_>>());
    Ok(CvReport {
        train_accuracy: col(&|m| m.train.accuracy),
        test_accuracy: col(&|m| m.test.accuracy),
        test_mse: col(&|m| m.test.mse),
        folds,
    })
}
