//! Brute-force structural equivalence, independent of the compressor.
//!
//! Two nodes are structurally equivalent when their canonical forms agree:
//! a constant is `(CONST c)`, any other node is `(KIND (label child) ...)`
//! with the pairs in edge order, or sorted for symmetric activations. Forms
//! are hash-consed: each distinct form gets a class id, and a parent refers to
//! its children by class id, so the strings never grow exponentially.

use std::collections::HashMap;

use crate::graph::{evaluate, Activation, ActivationKind, ComputationGraph, NodeId, WeightStore};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Form {
    Const(Vec<u64>),
    Op(ActivationKind, Vec<(usize, usize)>),
}

/// Interns canonical forms across any number of graphs, so class ids are
/// comparable between graphs canonicalised by the same instance.
#[derive(Debug, Default)]
pub struct Canonicalizer {
    classes: HashMap<Form, usize>,
}

impl Canonicalizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Class id of every node of `g`.
    pub fn classes(&mut self, g: &ComputationGraph) -> Vec<usize> {
        let mut memo: Vec<Option<usize>> = vec![None; g.len()];
        for v in 0..g.len() {
            self.visit(g, NodeId(v), &mut memo);
        }
        memo.into_iter().map(|c| c.expect("every node visited")).collect()
    }

    fn visit(&mut self, g: &ComputationGraph, v: NodeId, memo: &mut Vec<Option<usize>>) -> usize {
        if let Some(c) = memo[v.0] {
            return c;
        }
        let form = match g.activation(v) {
            Activation::Const(c) => Form::Const(c.iter().map(|x| x.to_bits()).collect()),
            act => {
                let edges: Vec<_> = g.child_edges(v).copied().collect();
                let mut args: Vec<(usize, usize)> = edges
                    .iter()
                    .map(|e| (e.label.0, self.visit(g, e.child, memo)))
                    .collect();
                if act.is_symmetric() {
                    args.sort_unstable();
                }
                Form::Op(act.kind(), args)
            }
        };
        let next = self.classes.len();
        let c = *self.classes.entry(form).or_insert(next);
        memo[v.0] = Some(c);
        c
    }
}

/// Groups nodes with equal canonical forms; returns the smallest member of
/// each node's class, for every node.
pub fn canonical_partition(g: &ComputationGraph) -> Vec<usize> {
    let classes = Canonicalizer::new().classes(g);
    let mut first: HashMap<usize, usize> = HashMap::new();
    classes
        .iter()
        .enumerate()
        .map(|(v, c)| *first.entry(*c).or_insert(v))
        .collect()
}

/// Fully expanded canonical string of one node. Exponential in the worst case;
/// meant for small graphs and debugging.
pub fn canonical_string(g: &ComputationGraph, v: NodeId) -> String {
    match g.activation(v) {
        Activation::Const(c) => {
            let vals: Vec<String> = c.iter().map(|x| format!("{x:?}")).collect();
            format!("(CONST {})", vals.join(" "))
        }
        act => {
            let mut args: Vec<String> = g
                .child_edges(v)
                .map(|e| format!("({} {})", e.label.0, canonical_string(g, e.child)))
                .collect();
            if act.is_symmetric() {
                args.sort();
            }
            format!("({} {})", act.kind(), args.join(" "))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeOutcome {
    /// No trial separated the nodes. Not a proof of equivalence.
    EquivalentLikely,
    Distinguished { trial: usize, witness: WeightStore },
}

/// Evaluates both nodes under `trials` random weight lists and reports the
/// first one that separates them by more than relative 1e-9.
pub fn functional_equiv_probe(
    g: &ComputationGraph,
    store: &WeightStore,
    a: NodeId,
    b: NodeId,
    trials: usize,
    seed: u64,
) -> Result<ProbeOutcome, crate::graph::EvalError> {
    let mut rng = crate::rng::seeded(seed);
    for trial in 0..trials {
        let w = store.resampled(&mut rng);
        let vals = evaluate(g, &w)?;
        let (x, y) = (&vals[a.0], &vals[b.0]);
        let differs = x.len() != y.len()
            || x.iter().zip(y).any(|(p, q)| (p - q).abs() > 1e-9 * p.abs().max(q.abs()));
        if differs {
            return Ok(ProbeOutcome::Distinguished { trial, witness: w });
        }
    }
    Ok(ProbeOutcome::EquivalentLikely)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Tensor};

    fn example_one() -> (ComputationGraph, WeightStore) {
        let g = ComputationGraph::new(
            vec![Activation::Const(vec![1.0]), Activation::Identity, Activation::Identity, Activation::MulCos],
            vec![Edge::new(0, 1, 1), Edge::new(0, 2, 1), Edge::new(1, 3, 2), Edge::new(2, 3, 2)],
            vec![NodeId(3)],
            1,
        )
        .unwrap();
        (g, WeightStore::from_scalars(1, &[0.5, 1.0]))
    }

    #[test]
    fn example_one_classes() {
        let (g, _) = example_one();
        assert_eq!(canonical_partition(&g), vec![0, 1, 1, 3]);
        assert_eq!(canonical_string(&g, NodeId(1)), canonical_string(&g, NodeId(2)));
        assert_eq!(canonical_string(&g, NodeId(1)), "(IDENTITY (1 (CONST 1.0)))");
    }

    #[test]
    fn chain_is_all_singletons() {
        let g = ComputationGraph::new(
            vec![Activation::Const(vec![1.0]), Activation::SigmoidSum, Activation::SigmoidSum, Activation::SigmoidSum],
            vec![Edge::new(0, 1, 1), Edge::new(1, 2, 1), Edge::new(2, 3, 1)],
            vec![NodeId(3)],
            1,
        )
        .unwrap();
        assert_eq!(canonical_partition(&g), vec![0, 1, 2, 3]);
    }

    #[test]
    fn probe_example_one() {
        let (g, w) = example_one();
        assert_eq!(
            functional_equiv_probe(&g, &w, NodeId(1), NodeId(2), 50, 3).unwrap(),
            ProbeOutcome::EquivalentLikely
        );
        match functional_equiv_probe(&g, &w, NodeId(0), NodeId(3), 5, 3).unwrap() {
            ProbeOutcome::Distinguished { trial, .. } => assert_eq!(trial, 0),
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn functional_but_not_structural() {
        // SUM(a, a) through a duplicated edge vs SUM(2 * a) through a fixed weight.
        let mut w = WeightStore::from_scalars(1, &[0.4]);
        let two = w.push(Tensor::scalar(2.0), false, None);
        let g = ComputationGraph::new(
            vec![Activation::Const(vec![0.7]), Activation::Identity, Activation::Sum, Activation::Sum, Activation::MulCos],
            vec![
                Edge::new(0, 1, 1),
                Edge::new(1, 2, 0),
                Edge::new(1, 2, 0),
                Edge::new(1, 3, two.0),
                Edge::new(2, 4, 0),
                Edge::new(3, 4, 0),
            ],
            vec![NodeId(4)],
            1,
        )
        .unwrap();
        assert_eq!(
            functional_equiv_probe(&g, &w, NodeId(2), NodeId(3), 100, 11).unwrap(),
            ProbeOutcome::EquivalentLikely
        );
        let p = canonical_partition(&g);
        assert_ne!(p[2], p[3]);
    }
}
