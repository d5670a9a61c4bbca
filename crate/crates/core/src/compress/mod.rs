//! Detection and merging of equivalent nodes.
//!
//! Both algorithms start from a [`FingerprintTable`]: every node is evaluated
//! under `inits` random weight draws and its values are rounded to `digits`
//! significant digits.
//!
//! * [`compress_nonexact`] walks the graph breadth-first from the outputs and
//!   merges every node into the first visited node with the same fingerprint.
//!   It finds functional equivalences but can also merge nodes that merely
//!   collide at the chosen precision.
//! * [`compress_exact`] walks children-first and treats equal fingerprints only
//!   as candidates. A candidate is merged when the activations agree and the
//!   `(child, label)` lists are identical, or equal as multisets for symmetric
//!   activations. Children have already been replaced by their
//!   representatives at that point, so identity of children suffices. The
//!   result computes the same function as the input for every weight list.

mod fingerprint;
mod report;

use std::collections::HashMap;
use std::time::Instant;

use crate::graph::{ActivationKind, ComputationGraph, Edge, EvalError, Label, NodeId, WeightStore};

pub use fingerprint::{fingerprint, quantize, sample_weights, FingerprintTable};
pub use report::{apply_merge_map, same_partition, Algorithm, CompressError, CompressionParams, CompressionReport};

/// A graph with unreachable nodes removed and ids re-densified.
#[derive(Debug, Clone)]
pub struct Pruned {
    pub graph: ComputationGraph,
    /// Old id -> new id, `None` for removed nodes.
    pub renumbering: Vec<Option<NodeId>>,
}

/// Removes nodes from which no output is reachable. Edge order among the
/// surviving nodes is preserved.
pub fn prune_unreachable(g: &ComputationGraph) -> Pruned {
    let identity: Vec<usize> = (0..g.len()).collect();
    rewrite(g, &identity)
}

/// Redirects every reference to a node to its representative, drops merged
/// nodes together with their incoming edges, and prunes.
fn rewrite(g: &ComputationGraph, rep: &[usize]) -> Pruned {
    let n = g.len();
    let kept_edges: Vec<Edge> = g
        .edges()
        .iter()
        .filter(|e| rep[e.parent.0] == e.parent.0)
        .map(|e| Edge { child: NodeId(rep[e.child.0]), ..*e })
        .collect();
    let outputs: Vec<usize> = g.outputs().iter().map(|o| rep[o.0]).collect();

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &kept_edges {
        children[e.parent.0].push(e.child.0);
    }
    let mut alive = vec![false; n];
    let mut stack = outputs.clone();
    while let Some(v) = stack.pop() {
        if !std::mem::replace(&mut alive[v], true) {
            stack.extend(children[v].iter().copied());
        }
    }

    let mut renumbering = vec![None; n];
    let mut nodes = Vec::new();
    for (old, act) in g.nodes().iter().enumerate() {
        if alive[old] {
            renumbering[old] = Some(NodeId(nodes.len()));
            nodes.push(act.clone());
        }
    }
    let new_id = |v: usize| renumbering[v].expect("alive node has an id");
    let edges = kept_edges
        .iter()
        .filter(|e| alive[e.parent.0])
        .map(|e| Edge { child: new_id(e.child.0), parent: new_id(e.parent.0), label: e.label })
        .collect();
    let outputs = outputs.into_iter().map(new_id).collect();
    let graph = ComputationGraph::new(nodes, edges, outputs, g.value_dim())
        .expect("rewriting a valid graph keeps it valid");
    Pruned { graph, renumbering }
}

fn finish(
    g: &ComputationGraph,
    rep: Vec<usize>,
    algorithm: Algorithm,
    params: CompressionParams,
    started: Instant,
) -> (ComputationGraph, CompressionReport) {
    let pruned = rewrite(g, &rep);
    let report = CompressionReport {
        algorithm,
        params,
        nodes_before: g.len(),
        nodes_after: pruned.graph.len(),
        edges_before: g.edges().len(),
        edges_after: pruned.graph.edges().len(),
        merge_map: rep.iter().enumerate().map(|(o, &r)| (NodeId(o), NodeId(r))).collect(),
        renumbering: pruned
            .renumbering
            .iter()
            .enumerate()
            .filter_map(|(o, n)| n.map(|n| (NodeId(o), n)))
            .collect(),
        wall_time: started.elapsed().as_secs_f64(),
    };
    (pruned.graph, report)
}

/// Merge by fingerprint alone, breadth-first from the outputs.
///
/// Within a BFS frontier nodes are visited in ascending id order. The first
/// visited node with a given key becomes the representative. A later node is
/// merged into the first representative of its key whose height (longest path
/// to a leaf) does not exceed its own; this keeps the rewritten graph acyclic
/// when a node collides with one of its own ancestors.
pub fn compress_nonexact(
    g: &ComputationGraph,
    store: &WeightStore,
    params: CompressionParams,
) -> Result<(ComputationGraph, CompressionReport), EvalError> {
    let started = Instant::now();
    let fp = fingerprint(g, store, params.inits, params.digits, params.seed)?;
    let heights = g.heights();
    let mut rep: Vec<usize> = (0..g.len()).collect();
    let mut classes: HashMap<(ActivationKind, &str), Vec<usize>> = HashMap::new();
    let mut visited = vec![false; g.len()];

    let mut frontier: Vec<usize> = g.outputs().iter().map(|o| o.0).collect();
    frontier.sort_unstable();
    frontier.dedup();
    for &o in &frontier {
        visited[o] = true;
    }
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &v in &frontier {
            let reps = classes
                .entry((g.nodes()[v].kind(), fp.keys[v].as_str()))
                .or_default();
            match reps.iter().find(|&&r| heights[r] <= heights[v]) {
                Some(&r) => rep[v] = r,
                None => reps.push(v),
            }
            for e in g.child_edges(NodeId(v)) {
                let c = e.child.0;
                if !std::mem::replace(&mut visited[c], true) {
                    next.push(c);
                }
            }
        }
        next.sort_unstable();
        frontier = next;
    }
    Ok(finish(g, rep, Algorithm::NonExact, params, started))
}

/// `(representative child, label)` list of a node, sorted for symmetric
/// activations.
fn signature(g: &ComputationGraph, rep: &[usize], v: usize) -> Vec<(usize, Label)> {
    let mut sig: Vec<(usize, Label)> = g
        .child_edges(NodeId(v))
        .map(|e| (rep[e.child.0], e.label))
        .collect();
    if g.nodes()[v].is_symmetric() {
        sig.sort_unstable();
    }
    sig
}

/// Merge structurally equivalent nodes, children first.
pub fn compress_exact(
    g: &ComputationGraph,
    store: &WeightStore,
    params: CompressionParams,
) -> Result<(ComputationGraph, CompressionReport), EvalError> {
    let started = Instant::now();
    let fp = fingerprint(g, store, params.inits, params.digits, params.seed)?;
    let mut rep: Vec<usize> = (0..g.len()).collect();
    let mut sigs: Vec<Vec<(usize, Label)>> = vec![Vec::new(); g.len()];
    let mut index: HashMap<(ActivationKind, &str), Vec<usize>> = HashMap::new();

    for &node in g.topological_order() {
        let v = node.0;
        let act = &g.nodes()[v];
        let sig = signature(g, &rep, v);
        let candidates = index.entry((act.kind(), fp.keys[v].as_str())).or_default();
        let found = candidates
            .iter()
            .copied()
            .find(|&c| g.nodes()[c].same_function(act) && sigs[c] == sig);
        match found {
            Some(c) => rep[v] = c,
            None => {
                candidates.push(v);
                sigs[v] = sig;
            }
        }
    }
    Ok(finish(g, rep, Algorithm::Exact, params, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{evaluate, Activation};

    fn example_one() -> (ComputationGraph, WeightStore) {
        let g = ComputationGraph::new(
            vec![
                Activation::Const(vec![1.0]),
                Activation::Identity,
                Activation::Identity,
                Activation::MulCos,
            ],
            vec![Edge::new(0, 1, 1), Edge::new(0, 2, 1), Edge::new(1, 3, 2), Edge::new(2, 3, 2)],
            vec![NodeId(3)],
            1,
        )
        .unwrap();
        (g, WeightStore::from_scalars(1, &[0.5, 1.0]))
    }

    fn edge_triples(g: &ComputationGraph) -> Vec<(usize, usize, usize)> {
        g.edges().iter().map(|e| (e.child.0, e.parent.0, e.label.0)).collect()
    }

    #[test]
    fn example_one_both_algorithms() {
        let (g, w) = example_one();
        let params = CompressionParams::new(1, 12, 42);
        for (c, r) in [compress_exact(&g, &w, params).unwrap(), compress_nonexact(&g, &w, params).unwrap()] {
            assert_eq!(r.nodes_after, 3);
            assert_eq!(edge_triples(&c), vec![(0, 1, 1), (1, 2, 2), (1, 2, 2)]);
            let a = evaluate(&g, &w).unwrap()[3][0];
            let b = evaluate(&c, &w).unwrap()[2][0];
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fingerprints_of_example_one() {
        let (g, w) = example_one();
        let fp = fingerprint(&g, &w, 1, 12, 42).unwrap();
        assert_eq!(fp.keys[1], fp.keys[2]);
        assert_ne!(fp.keys[0], fp.keys[1]);
        assert_ne!(fp.keys[0], fp.keys[3]);
        assert_ne!(fp.keys[1], fp.keys[3]);
    }

    #[test]
    fn equal_constants_share_keys() {
        let g = ComputationGraph::new(
            vec![Activation::Const(vec![0.25, 4.0]), Activation::Const(vec![0.25, 4.0]), Activation::Sum],
            vec![Edge::new(0, 2, 0), Edge::new(1, 2, 0)],
            vec![NodeId(2)],
            2,
        )
        .unwrap();
        let w = WeightStore::new(2);
        for (n, s) in [(1, 1), (3, 7), (2, 17)] {
            let fp = fingerprint(&g, &w, n, s, 9).unwrap();
            assert_eq!(fp.keys[0], fp.keys[1]);
        }
    }

    #[test]
    fn pruning_removes_orphans() {
        // diamond 0 -> {1, 2} -> 3, plus orphan branch 0 -> 4
        let g = ComputationGraph::new(
            vec![
                Activation::Const(vec![0.3]),
                Activation::SigmoidSum,
                Activation::TanhSum,
                Activation::Sum,
                Activation::SigmoidSum,
            ],
            vec![Edge::new(0, 1, 1), Edge::new(0, 2, 2), Edge::new(1, 3, 0), Edge::new(2, 3, 0), Edge::new(0, 4, 1)],
            vec![NodeId(3)],
            1,
        )
        .unwrap();
        let w = WeightStore::from_scalars(1, &[0.7, -0.4]);
        let p = prune_unreachable(&g);
        assert_eq!(p.graph.len(), 4);
        assert_eq!(p.renumbering[4], None);
        assert_eq!(p.renumbering[3], Some(NodeId(3)));
        assert_eq!(evaluate(&g, &w).unwrap()[3], evaluate(&p.graph, &w).unwrap()[3]);

        let (g1, _) = example_one();
        let p = prune_unreachable(&g1);
        assert_eq!(edge_triples(&p.graph), edge_triples(&g1));
    }

    #[test]
    fn symmetric_permutation_merges() {
        // two SUM parents over (a, b) with labels (5, 7) and (b, a) with (7, 5)
        let mut nodes = vec![Activation::Const(vec![0.1]), Activation::Const(vec![0.9])];
        nodes.extend([Activation::Sum, Activation::Sum, Activation::MulCos]);
        let g = ComputationGraph::new(
            nodes,
            vec![
                Edge::new(0, 2, 5),
                Edge::new(1, 2, 7),
                Edge::new(1, 3, 7),
                Edge::new(0, 3, 5),
                Edge::new(2, 4, 0),
                Edge::new(3, 4, 0),
            ],
            vec![NodeId(4)],
            1,
        )
        .unwrap();
        let w = WeightStore::from_scalars(1, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]);
        let (_, r) = compress_exact(&g, &w, CompressionParams::new(1, 12, 1)).unwrap();
        assert_eq!(r.merge_map[3].1, NodeId(2));
    }

    #[test]
    fn ordered_swap_is_not_merged_despite_collision() {
        // x = CONST(w*), y = IDENTITY(w * CONST(1)); at the sampled weight w* both
        // have the same value, so MUL_COS(x, y) and MUL_COS(y, x) collide.
        let probe = WeightStore::from_scalars(1, &[0.0]);
        let seed = 5;
        let w_star = sample_weights(&probe, seed, 1)[0].get(Label(1)).unwrap().data[0];
        let g = ComputationGraph::new(
            vec![
                Activation::Const(vec![w_star]),
                Activation::Const(vec![1.0]),
                Activation::Identity,
                Activation::MulCos,
                Activation::MulCos,
                Activation::Sum,
            ],
            vec![
                Edge::new(1, 2, 1),
                Edge::new(0, 3, 0),
                Edge::new(2, 3, 0),
                Edge::new(2, 4, 0),
                Edge::new(0, 4, 0),
                Edge::new(3, 5, 0),
                Edge::new(4, 5, 0),
            ],
            vec![NodeId(5)],
            1,
        )
        .unwrap();
        let params = CompressionParams::new(1, 17, seed);
        let fp = fingerprint(&g, &probe, 1, 17, seed).unwrap();
        assert_eq!(fp.keys[3], fp.keys[4]);
        let (_, exact) = compress_exact(&g, &probe, params).unwrap();
        assert_eq!(exact.merges(), 0);
        let (_, lossy) = compress_nonexact(&g, &probe, params).unwrap();
        assert!(lossy.merges() > 0);
    }

    #[test]
    fn self_colliding_chain_stays_acyclic() {
        // IDENTITY over label 0 has the same value as its child.
        let g = ComputationGraph::new(
            vec![Activation::Const(vec![0.5]), Activation::SigmoidSum, Activation::Identity, Activation::Identity],
            vec![Edge::new(0, 1, 1), Edge::new(1, 2, 0), Edge::new(2, 3, 0)],
            vec![NodeId(3)],
            1,
        )
        .unwrap();
        let w = WeightStore::from_scalars(1, &[0.3]);
        let (c, _) = compress_nonexact(&g, &w, CompressionParams::new(1, 12, 0)).unwrap();
        assert_eq!(evaluate(&c, &w).unwrap()[c.outputs()[0].0], evaluate(&g, &w).unwrap()[3]);
    }
}
