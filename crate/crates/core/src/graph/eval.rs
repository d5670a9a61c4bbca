use thiserror::Error;

use super::{Activation, ComputationGraph, Label, NodeId, WeightStore};

/// Value vector of every node, indexed by node id.
pub type NodeValues = Vec<Vec<f64>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("edge label {label:?} is outside the weight store (len {len})")]
    WeightIndexOutOfRange { label: Label, len: usize },
    #[error("dimension mismatch at node {node}: {detail}")]
    DimensionMismatch { node: NodeId, detail: String },
}

/// Evaluates every node bottom-up in one topological pass.
///
/// Arguments of a node are `W[label] * value(child)` in edge-list order. Sums
/// and averages accumulate each component over the arguments sorted by value,
/// so they are bit-for-bit independent of argument order.
pub fn evaluate(g: &ComputationGraph, w: &WeightStore) -> Result<NodeValues, EvalError> {
    if let Some(l) = g.max_label() {
        if l.0 >= w.len() {
            return Err(EvalError::WeightIndexOutOfRange { label: l, len: w.len() });
        }
    }
    let mut values: NodeValues = vec![Vec::new(); g.len()];
    let mut args: Vec<Vec<f64>> = Vec::new();
    for &node in g.topological_order() {
        let act = g.activation(node);
        if let Activation::Const(c) = act {
            values[node.0] = c.clone();
            continue;
        }
        weighted_args(g, w, &values, node, &mut args)?;
        values[node.0] = activate(act, &args);
    }
    Ok(values)
}

/// Fills `args` with `W[label] * value(child)` for every incoming edge of `node`.
pub(crate) fn weighted_args(
    g: &ComputationGraph,
    w: &WeightStore,
    values: &NodeValues,
    node: NodeId,
    args: &mut Vec<Vec<f64>>,
) -> Result<(), EvalError> {
    args.resize_with(g.child_edge_indices(node).len(), Vec::new);
    let mut dim = None;
    for (slot, e) in args.iter_mut().zip(g.child_edges(node)) {
        let t = w
            .get(e.label)
            .ok_or(EvalError::WeightIndexOutOfRange { label: e.label, len: w.len() })?;
        let x = &values[e.child.0];
        let out_len = t.output_len(x.len()).ok_or_else(|| EvalError::DimensionMismatch {
            node,
            detail: format!(
                "weight {:?} has shape {:?} but child {} has length {}",
                e.label,
                t.shape(),
                e.child,
                x.len()
            ),
        })?;
        match dim {
            None => dim = Some(out_len),
            Some(d) if d != out_len => {
                return Err(EvalError::DimensionMismatch {
                    node,
                    detail: format!("arguments of length {d} and {out_len}"),
                })
            }
            _ => {}
        }
        t.apply_into(x, slot);
    }
    Ok(())
}

/// Order-independent sum of component `j` over all arguments.
pub fn pooled_sum(args: &[Vec<f64>], j: usize) -> f64 {
    match args.len() {
        0 => 0.0,
        1 => args[0][j],
        2 => args[0][j] + args[1][j],
        _ => {
            let mut col: Vec<f64> = args.iter().map(|a| a[j]).collect();
            col.sort_unstable_by(f64::total_cmp);
            col.iter().sum()
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Applies a non-constant activation to already weighted arguments.
pub(crate) fn activate(act: &Activation, args: &[Vec<f64>]) -> Vec<f64> {
    let d = args.first().map_or(0, Vec::len);
    let pooled = |f: &dyn Fn(f64) -> f64| (0..d).map(|j| f(pooled_sum(args, j))).collect();
    match act {
        Activation::Const(c) => c.clone(),
        Activation::Identity => args[0].clone(),
        Activation::SigmoidSum => pooled(&sigmoid),
        Activation::TanhSum => pooled(&f64::tanh),
        Activation::ReluSum => pooled(&|x| x.max(0.0)),
        Activation::Sum => pooled(&|x| x),
        Activation::Avg => {
            let m = args.len() as f64;
            pooled(&|x| x / m)
        }
        Activation::Max => (0..d)
            .map(|j| args.iter().map(|a| a[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        Activation::MulCos => args[0]
            .iter()
            .zip(&args[1])
            .map(|(x, y)| x * y.cos())
            .collect(),
    }
}
