use crate::graph::{Activation, ComputationGraph, Label, WeightStore};

use super::{check_dim, GraphBuilder, InputSample, Model, TemplateConfig, TemplateError};

/// Label lookup keyed by `<model>/l<layer>/<role>`.
struct Params<'a> {
    cfg: &'a TemplateConfig,
    store: &'a mut WeightStore,
}

impl Params<'_> {
    fn square(&mut self, layer: usize, role: &str) -> Result<Label, TemplateError> {
        let d = self.cfg.value_dim;
        let key = format!("{}/l{layer}/{role}", self.cfg.model);
        Ok(self.store.param(&key, d, d, self.cfg.seed)?)
    }

    /// Neighbour convolution weight, optionally one per edge type.
    fn conv(&mut self, layer: usize, role: &str, edge_type: &str) -> Result<Label, TemplateError> {
        if !self.cfg.edge_typed_weights {
            return self.square(layer, role);
        }
        if self.cfg.edge_types.binary_search_by(|t| t.as_str().cmp(edge_type)).is_err() {
            return Err(TemplateError::UnknownEdgeType(edge_type.to_string()));
        }
        self.square(layer, &format!("{role}/{edge_type}"))
    }

    fn readout(&mut self) -> Result<Label, TemplateError> {
        let key = format!("{}/out", self.cfg.model);
        Ok(self.store.param(&key, 1, self.cfg.value_dim, self.cfg.seed)?)
    }
}

fn leaves(b: &mut GraphBuilder, sample: &InputSample) -> Vec<usize> {
    sample
        .nodes
        .iter()
        .map(|n| b.node(Activation::Const(n.features.clone())))
        .collect()
}

/// `h(v) = sigmoid(W2 h(v) + W3 agg)`, or the self term alone when `agg` is absent.
fn update(
    b: &mut GraphBuilder,
    p: &mut Params<'_>,
    layer: usize,
    prev: usize,
    agg: Option<usize>,
) -> Result<usize, TemplateError> {
    let self_w = p.square(layer, "w2")?;
    let h = b.node(Activation::SigmoidSum);
    b.edge(prev, h, self_w);
    if let Some(a) = agg {
        let agg_w = p.square(layer, "w3")?;
        b.edge(a, h, agg_w);
    }
    Ok(h)
}

/// Average over the final states, then a sigmoid projection to one value.
fn finish_with_readout(
    mut b: GraphBuilder,
    p: &mut Params<'_>,
    states: &[usize],
) -> Result<ComputationGraph, TemplateError> {
    let pool = b.node(Activation::Avg);
    for &h in states {
        b.edge(h, pool, Label::IDENTITY);
    }
    let w_out = p.readout()?;
    let out = b.node(Activation::SigmoidSum);
    b.edge(pool, out, w_out);
    Ok(b.finish(vec![out], p.cfg.value_dim)?)
}

/// GCN (average pooling) and GraphSAGE (max pooling).
///
/// Per layer and sample node `v`: one convolution node per incoming directed
/// edge, an aggregation node over them, and an update node combining the
/// previous state of `v` with the aggregate.
pub(crate) fn unfold_gcn(
    sample: &InputSample,
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<ComputationGraph, TemplateError> {
    check_dim(sample, cfg)?;
    let pool = match cfg.model {
        Model::Sage => Activation::Max,
        _ => Activation::Avg,
    };
    let nb = sample.neighbours();
    let mut b = GraphBuilder::default();
    let mut p = Params { cfg, store };
    let mut h = leaves(&mut b, sample);
    for layer in 1..=cfg.layers {
        let mut next = Vec::with_capacity(h.len());
        for (v, incoming) in nb.iter().enumerate() {
            let mut convs = Vec::with_capacity(incoming.len());
            for &(u, ty) in incoming {
                let w1 = p.conv(layer, "w1", ty)?;
                let c = b.node(Activation::SigmoidSum);
                b.edge(h[u], c, w1);
                convs.push(c);
            }
            let agg = (!convs.is_empty()).then(|| {
                let a = b.node(pool.clone());
                for &c in &convs {
                    b.edge(c, a, Label::IDENTITY);
                }
                a
            });
            next.push(update(&mut b, &mut p, layer, h[v], agg)?);
        }
        h = next;
    }
    finish_with_readout(b, &mut p, &h)
}

/// GIN: identity messages summed together with the node's own state, followed
/// by a two-node MLP (`RELU_SUM`, then a weighted `SUM`).
pub fn unfold_gin(
    sample: &InputSample,
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<ComputationGraph, TemplateError> {
    check_dim(sample, cfg)?;
    let nb = sample.neighbours();
    let mut b = GraphBuilder::default();
    let mut p = Params { cfg, store };
    let mut h = leaves(&mut b, sample);
    for layer in 1..=cfg.layers {
        let w_hidden = p.square(layer, "mlp1")?;
        let w_out = p.square(layer, "mlp2")?;
        let mut next = Vec::with_capacity(h.len());
        for (v, incoming) in nb.iter().enumerate() {
            let agg = b.node(Activation::Sum);
            for &(u, _) in incoming {
                b.edge(h[u], agg, Label::IDENTITY);
            }
            b.edge(h[v], agg, Label::IDENTITY);
            let hidden = b.node(Activation::ReluSum);
            b.edge(agg, hidden, w_hidden);
            let out = b.node(Activation::Sum);
            b.edge(hidden, out, w_out);
            next.push(out);
        }
        h = next;
    }
    finish_with_readout(b, &mut p, &h)
}

/// Graphlet template: for every unordered pair of neighbours `{u, w}` of `v`
/// a convolution node `sigmoid(Wa h(u) + Wb h(v) + Wa h(w))`, averaged.
/// Nodes with fewer than two neighbours fall back to the GCN neighbour rule.
pub fn unfold_graphlets(
    sample: &InputSample,
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<ComputationGraph, TemplateError> {
    check_dim(sample, cfg)?;
    let nb = sample.neighbours();
    let mut b = GraphBuilder::default();
    let mut p = Params { cfg, store };
    let mut h = leaves(&mut b, sample);
    for layer in 1..=cfg.layers {
        let mut next = Vec::with_capacity(h.len());
        for (v, incoming) in nb.iter().enumerate() {
            let mut convs = Vec::new();
            if incoming.len() >= 2 {
                let wa = p.square(layer, "pair")?;
                let wb = p.square(layer, "center")?;
                for i in 0..incoming.len() {
                    for j in i + 1..incoming.len() {
                        let c = b.node(Activation::SigmoidSum);
                        b.edge(h[incoming[i].0], c, wa);
                        b.edge(h[v], c, wb);
                        b.edge(h[incoming[j].0], c, wa);
                        convs.push(c);
                    }
                }
            } else {
                for &(u, ty) in incoming {
                    let w1 = p.conv(layer, "w1", ty)?;
                    let c = b.node(Activation::SigmoidSum);
                    b.edge(h[u], c, w1);
                    convs.push(c);
                }
            }
            let agg = (!convs.is_empty()).then(|| {
                let a = b.node(Activation::Avg);
                for &c in &convs {
                    b.edge(c, a, Label::IDENTITY);
                }
                a
            });
            next.push(update(&mut b, &mut p, layer, h[v], agg)?);
        }
        h = next;
    }
    finish_with_readout(b, &mut p, &h)
}
