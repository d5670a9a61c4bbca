//! Model templates unfolded over input samples.
//!
//! Every template produces one [`ComputationGraph`] per sample (or one per
//! knowledge base) whose edge labels index into a shared [`WeightStore`].
//! Parameters are registered under string keys such as `gcn/l1/w1`, so
//! unfolding many samples against one store reuses the same labels.

mod gnn;
mod kbe;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::graph::{Activation, ComputationGraph, Edge, GraphError, NodeId, WeightError, WeightStore};

pub use kbe::unfold_kbe_split;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gcn,
    Sage,
    Gin,
    Graphlets,
    Kbe,
}

impl Model {
    pub const ALL: [Model; 5] = [Model::Gcn, Model::Sage, Model::Gin, Model::Graphlets, Model::Kbe];

    pub fn name(self) -> &'static str {
        match self {
            Model::Gcn => "gcn",
            Model::Sage => "sage",
            Model::Gin => "gin",
            Model::Graphlets => "graphlets",
            Model::Kbe => "kbe",
        }
    }

    pub fn default_layers(self) -> usize {
        match self {
            Model::Gin => 5,
            Model::Kbe => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Model::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown template {s:?} (expected gcn, sage, gin, graphlets or kbe)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateConfig {
    pub model: Model,
    pub layers: usize,
    pub value_dim: usize,
    pub edge_typed_weights: bool,
    /// Edge types that get their own convolution weight when
    /// `edge_typed_weights` is set.
    pub edge_types: Vec<String>,
    pub seed: u64,
}

impl TemplateConfig {
    pub fn new(model: Model, value_dim: usize) -> Self {
        TemplateConfig {
            model,
            layers: model.default_layers(),
            value_dim,
            edge_typed_weights: false,
            edge_types: Vec::new(),
            seed: 0,
        }
    }

    pub fn layers(mut self, layers: usize) -> Self {
        self.layers = layers;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Enables per-type convolution weights for the given edge types.
    pub fn edge_typed<I, S>(mut self, types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.edge_typed_weights = true;
        self.edge_types = types.into_iter().map(Into::into).collect();
        self.edge_types.sort();
        self.edge_types.dedup();
        self
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("sample {0:?} has no nodes")]
    EmptySample(String),
    #[error("knowledge base has no triples")]
    EmptyKb,
    #[error("edge type {0:?} is not registered for typed weights")]
    UnknownEdgeType(String),
    #[error("sample {sample:?}: node {node:?} has {got} features, expected {expected}")]
    FeatureDim {
        sample: String,
        node: String,
        got: usize,
        expected: usize,
    },
    #[error("invalid sample {sample:?}: {detail}")]
    InvalidSample { sample: String, detail: String },
    #[error("template {0} unfolds graph samples, not knowledge bases (or vice versa)")]
    WrongInput(Model),
    #[error("layers must be positive")]
    ZeroLayers,
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn id_string<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        N(i64),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::N(n) => n.to_string(),
    })
}

fn default_edge_type() -> String {
    "-".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleNode {
    #[serde(deserialize_with = "id_string")]
    pub id: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEdge {
    #[serde(deserialize_with = "id_string")]
    pub src: String,
    #[serde(deserialize_with = "id_string")]
    pub dst: String,
    #[serde(rename = "type", default = "default_edge_type")]
    pub kind: String,
}

/// Attributed input graph. Edges are undirected for message passing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSample {
    #[serde(deserialize_with = "id_string")]
    pub id: String,
    pub nodes: Vec<SampleNode>,
    #[serde(default)]
    pub edges: Vec<SampleEdge>,
    #[serde(default)]
    pub label: f64,
}

impl InputSample {
    /// Checks unique node ids, existing edge endpoints and finite features of
    /// uniform length. Returns that length.
    pub fn validate(&self) -> Result<usize, TemplateError> {
        let invalid = |detail: String| TemplateError::InvalidSample { sample: self.id.clone(), detail };
        let mut seen = HashSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id.as_str()) {
                return Err(invalid(format!("duplicate node id {:?}", n.id)));
            }
            if n.features.iter().any(|f| !f.is_finite()) {
                return Err(invalid(format!("node {:?} has non-finite features", n.id)));
            }
        }
        for e in &self.edges {
            for end in [&e.src, &e.dst] {
                if !seen.contains(end.as_str()) {
                    return Err(invalid(format!("edge endpoint {end:?} is not a node")));
                }
            }
        }
        let dim = self.nodes.first().map_or(0, |n| n.features.len());
        if let Some(n) = self.nodes.iter().find(|n| n.features.len() != dim) {
            return Err(TemplateError::FeatureDim {
                sample: self.id.clone(),
                node: n.id.clone(),
                got: n.features.len(),
                expected: dim,
            });
        }
        Ok(dim)
    }

    /// Incoming neighbour lists `(neighbour index, edge type)`; each undirected
    /// edge contributes both directions, in edge-list order.
    pub fn neighbours(&self) -> Vec<Vec<(usize, &str)>> {
        let index: BTreeMap<&str, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
        let mut nb = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            let (s, d) = (index[e.src.as_str()], index[e.dst.as_str()]);
            nb[d].push((s, e.kind.as_str()));
            nb[s].push((d, e.kind.as_str()));
        }
        nb
    }

    /// Number of directed edges seen by message passing.
    pub fn directed_edge_count(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edge_types(&self) -> impl Iterator<Item = &str> {
        self.edges.iter().map(|e| e.kind.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub label: f64,
}

/// Knowledge base of labeled `(subject, relation, object)` triples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TripleStore {
    pub entities: Vec<String>,
    pub relations: Vec<String>,
    pub triples: Vec<Triple>,
}

impl TripleStore {
    /// Builds a store, declaring entities and relations in order of first use.
    pub fn from_triples(triples: Vec<Triple>) -> Result<Self, String> {
        let mut kb = TripleStore::default();
        let mut ents = HashSet::new();
        let mut rels = HashSet::new();
        let mut keys = HashSet::new();
        for t in &triples {
            if !keys.insert((t.subject.as_str(), t.relation.as_str(), t.object.as_str())) {
                return Err(format!("duplicate triple ({}, {}, {})", t.subject, t.relation, t.object));
            }
            for e in [&t.subject, &t.object] {
                if ents.insert(e.as_str()) {
                    kb.entities.push(e.clone());
                }
            }
            if rels.insert(t.relation.as_str()) {
                kb.relations.push(t.relation.clone());
            }
        }
        kb.triples = triples;
        Ok(kb)
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }
}

/// Incrementally assembled node and edge lists.
#[derive(Debug, Default)]
pub(crate) struct GraphBuilder {
    nodes: Vec<Activation>,
    edges: Vec<Edge>,
}

impl GraphBuilder {
    pub(crate) fn node(&mut self, act: Activation) -> usize {
        self.nodes.push(act);
        self.nodes.len() - 1
    }

    pub(crate) fn edge(&mut self, child: usize, parent: usize, label: crate::graph::Label) {
        self.edges.push(Edge { child: NodeId(child), parent: NodeId(parent), label });
    }

    pub(crate) fn finish(self, outputs: Vec<usize>, dim: usize) -> Result<ComputationGraph, GraphError> {
        ComputationGraph::new(self.nodes, self.edges, outputs.into_iter().map(NodeId).collect(), dim)
    }
}

/// Unfolds a graph sample with the configured GNN-style template.
pub fn unfold(
    sample: &InputSample,
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<ComputationGraph, TemplateError> {
    match cfg.model {
        Model::Gcn | Model::Sage => gnn::unfold_gcn(sample, cfg, store),
        Model::Gin => gnn::unfold_gin(sample, cfg, store),
        Model::Graphlets => gnn::unfold_graphlets(sample, cfg, store),
        Model::Kbe => Err(TemplateError::WrongInput(Model::Kbe)),
    }
}

pub use gnn::{unfold_gin, unfold_graphlets};

/// Unfolds a whole knowledge base into one graph with an output per triple.
pub fn unfold_kbe(
    kb: &TripleStore,
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<ComputationGraph, TemplateError> {
    unfold_kbe_split(kb, &kb.triples, &kb.triples, cfg, store)
}

/// Registers every parameter a dataset needs, in sorted key order, so label
/// numbering does not depend on sample order.
pub fn prepare_store(
    samples: &[InputSample],
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<(), TemplateError> {
    let mut scratch = WeightStore::new(cfg.value_dim);
    for s in samples {
        unfold(s, cfg, &mut scratch)?;
    }
    register_sorted(&scratch, cfg, store)
}

/// Same as [`prepare_store`] for a knowledge base.
pub fn prepare_store_kb(
    kb: &TripleStore,
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<(), TemplateError> {
    let mut scratch = WeightStore::new(cfg.value_dim);
    unfold_kbe(kb, cfg, &mut scratch)?;
    register_sorted(&scratch, cfg, store)
}

fn register_sorted(
    scratch: &WeightStore,
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<(), TemplateError> {
    let mut keys: Vec<(&str, (usize, usize))> = scratch
        .names()
        .map(|(l, n)| (n, scratch.get(l).expect("named label exists").shape()))
        .collect();
    keys.sort();
    for (name, (r, c)) in keys {
        store.param(name, r, c, cfg.seed)?;
    }
    Ok(())
}

pub(crate) fn check_dim(sample: &InputSample, cfg: &TemplateConfig) -> Result<(), TemplateError> {
    if sample.nodes.is_empty() {
        return Err(TemplateError::EmptySample(sample.id.clone()));
    }
    if cfg.layers == 0 {
        return Err(TemplateError::ZeroLayers);
    }
    let dim = sample.validate()?;
    if dim != cfg.value_dim {
        return Err(TemplateError::FeatureDim {
            sample: sample.id.clone(),
            node: sample.nodes[0].id.clone(),
            got: dim,
            expected: cfg.value_dim,
        });
    }
    Ok(())
}
