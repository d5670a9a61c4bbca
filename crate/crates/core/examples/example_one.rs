//! The four-node graph computing `(w1 w2) cos(w1 w2)`: both inner identity
//! nodes compute `w1 * 1`, so either algorithm merges them and node 3 ends up
//! with the same child twice.

use liftcg::compress::{compress_exact, compress_nonexact, CompressionParams};
use liftcg::graph::{evaluate, Activation, ComputationGraph, Edge, NodeId, WeightStore};

pub fn graph() -> ComputationGraph {
    ComputationGraph::new(
        vec![Activation::Const(vec![1.0]), Activation::Identity, Activation::Identity, Activation::MulCos],
        vec![Edge::new(0, 1, 1), Edge::new(0, 2, 1), Edge::new(1, 3, 2), Edge::new(2, 3, 2)],
        vec![NodeId(3)],
        1,
    )
    .expect("valid graph")
}

pub fn run() -> anyhow::Result<Vec<(usize, usize, usize)>> {
    let g = graph();
    let w = WeightStore::from_scalars(1, &[0.5, 1.0]);
    println!("value at (0.5, 1.0): {}", evaluate(&g, &w)?[3][0]);

    let params = CompressionParams::new(1, 6, 0);
    let (exact, report) = compress_exact(&g, &w, params)?;
    let (nonexact, _) = compress_nonexact(&g, &w, params)?;
    let edges: Vec<_> = exact.edges().iter().map(|e| (e.child.0, e.parent.0, e.label.0)).collect();
    println!("nodes {} -> {}", report.nodes_before, report.nodes_after);
    println!("edges after compression: {edges:?}");
    println!("merge map: {:?}", report.representatives());
    assert_eq!(exact.edges(), nonexact.edges());
    Ok(edges)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run().map(|_| ())
}
