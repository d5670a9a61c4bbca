use crate::graph::eval::weighted_args;
use crate::graph::{Activation, ComputationGraph, EvalError, NodeId, NodeValues, Tensor, WeightStore};

/// Per-label gradient tensors plus the nodes where a subgradient was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub per_label: Vec<Tensor>,
    /// MAX nodes whose maximum was attained by more than one argument. The
    /// first argument in child order received the gradient.
    pub non_differentiable: Vec<NodeId>,
}

impl Gradients {
    pub fn zeros(w: &WeightStore) -> Self {
        Gradients {
            per_label: w.weights().iter().map(|t| Tensor::zeros(t.rows, t.cols)).collect(),
            non_differentiable: Vec::new(),
        }
    }

    /// Adds `other` component-wise.
    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.per_label.iter_mut().zip(&other.per_label) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
        self.non_differentiable.extend_from_slice(&other.non_differentiable);
    }
}

/// Reverse-mode gradients of `sum_i <upstream[i], value(outputs[i])>` with
/// respect to every weight, given forward `values` from [`crate::graph::evaluate`].
///
/// Nodes are visited in reverse topological order and their incoming edges
/// in child order, so the accumulation order is fixed. Gradients are
/// computed for non-trainable labels too; optimisers skip them.
pub fn backward(
    g: &ComputationGraph,
    w: &WeightStore,
    values: &NodeValues,
    upstream: &[Vec<f64>],
) -> Result<Gradients, EvalError> {
    assert_eq!(upstream.len(), g.outputs().len(), "one upstream gradient per output");
    let mut grads = Gradients::zeros(w);
    let mut adjoint: Vec<Option<Vec<f64>>> = vec![None; g.len()];
    for (o, u) in g.outputs().iter().zip(upstream) {
        add_into(&mut adjoint[o.0], u);
    }
    let mut args = Vec::new();
    let mut arg_grads: Vec<Vec<f64>> = Vec::new();
    for &node in g.topological_order().iter().rev() {
        let Some(adj) = adjoint[node.0].take() else { continue };
        let act = g.activation(node);
        if matches!(act, Activation::Const(_)) {
            continue;
        }
        weighted_args(g, w, values, node, &mut args)?;
        if local_gradients(act, &args, &values[node.0], &adj, &mut arg_grads) {
            grads.non_differentiable.push(node);
        }
        for (e, ga) in g.child_edges(node).zip(&arg_grads) {
            let t = w.get(e.label).expect("labels checked by weighted_args");
            let x = &values[e.child.0];
            let gw = &mut grads.per_label[e.label.0];
            let back = if t.is_scalar() {
                gw.data[0] += ga.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                ga.iter().map(|a| a * t.data[0]).collect()
            } else {
                let mut back = vec![0.0; t.cols];
                for r in 0..t.rows {
                    let row = r * t.cols;
                    for c in 0..t.cols {
                        gw.data[row + c] += ga[r] * x[c];
                        back[c] += t.data[row + c] * ga[r];
                    }
                }
                back
            };
            add_into(&mut adjoint[e.child.0], &back);
        }
    }
    Ok(grads)
}

fn add_into(slot: &mut Option<Vec<f64>>, v: &[f64]) {
    match slot {
        Some(acc) => acc.iter_mut().zip(v).for_each(|(a, b)| *a += b),
        None => *slot = Some(v.to_vec()),
    }
}

/// Gradient of the node output with respect to each weighted argument.
/// Returns true when a MAX tie forced a subgradient choice.
fn local_gradients(act: &Activation, args: &[Vec<f64>], out: &[f64], adj: &[f64], res: &mut Vec<Vec<f64>>) -> bool {
    let d = out.len();
    res.clear();
    let mut tie = false;
    let uniform = |res: &mut Vec<Vec<f64>>, f: &dyn Fn(usize) -> f64| {
        let g: Vec<f64> = (0..d).map(|j| adj[j] * f(j)).collect();
        res.resize(args.len(), g);
    };
    match act {
        Activation::Const(_) => {}
        Activation::Identity | Activation::Sum => uniform(res, &|_| 1.0),
        Activation::SigmoidSum => uniform(res, &|j| out[j] * (1.0 - out[j])),
        Activation::TanhSum => uniform(res, &|j| 1.0 - out[j] * out[j]),
        Activation::ReluSum => uniform(res, &|j| if out[j] > 0.0 { 1.0 } else { 0.0 }),
        Activation::Avg => {
            let m = args.len() as f64;
            uniform(res, &|_| 1.0 / m)
        }
        Activation::Max => {
            res.resize(args.len(), vec![0.0; d]);
            for j in 0..d {
                let best = (0..args.len()).find(|&k| args[k][j] == out[j]).unwrap_or(0);
                tie |= args[best + 1..].iter().any(|a| a[j] == out[j]);
                res[best][j] = adj[j];
            }
        }
        Activation::MulCos => {
            let (x, y) = (&args[0], &args[1]);
            res.push((0..d).map(|j| adj[j] * y[j].cos()).collect());
            res.push((0..d).map(|j| -adj[j] * x[j] * y[j].sin()).collect());
        }
    }
    tie
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::example_one;
    use crate::graph::{evaluate, Edge, Label};

    fn grad_example_one(w1: f64, w2: f64) -> (f64, f64) {
        let (g, _) = example_one();
        let w = WeightStore::from_scalars(1, &[w1, w2]);
        let v = evaluate(&g, &w).unwrap();
        let gr = backward(&g, &w, &v, &[vec![1.0]]).unwrap();
        (gr.per_label[1].data[0], gr.per_label[2].data[0])
    }

    #[test]
    fn example_one_closed_form() {
        // out = w1 w2 cos(w1 w2)
        for &(w1, w2) in &[(0.5, 1.0), (-0.7, 0.3), (1.1, -1.4)] {
            let p: f64 = w1 * w2;
            let d1 = w2 * p.cos() - p * w2 * p.sin();
            let d2 = w1 * p.cos() - p * w1 * p.sin();
            let (g1, g2) = grad_example_one(w1, w2);
            assert!((g1 - d1).abs() <= 1e-12 * d1.abs().max(1.0), "{g1} vs {d1}");
            assert!((g2 - d2).abs() <= 1e-12 * d2.abs().max(1.0), "{g2} vs {d2}");
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let (g, w) = example_one();
        let v = evaluate(&g, &w).unwrap();
        let gr = backward(&g, &w, &v, &[vec![0.0]]).unwrap();
        assert!(gr.per_label.iter().all(|t| t.data.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn max_tie_is_flagged() {
        let g = ComputationGraph::new(
            vec![Activation::Const(vec![1.0]), Activation::Max],
            vec![Edge::new(0, 1, 1), Edge::new(0, 1, 1)],
            vec![NodeId(1)],
            1,
        )
        .unwrap();
        let w = WeightStore::from_scalars(1, &[0.4]);
        let v = evaluate(&g, &w).unwrap();
        let gr = backward(&g, &w, &v, &[vec![1.0]]).unwrap();
        assert_eq!(gr.non_differentiable, vec![NodeId(1)]);
        // Only the first argument carries the gradient.
        assert_eq!(gr.per_label[Label(1).0].data[0], 1.0);
    }
}
