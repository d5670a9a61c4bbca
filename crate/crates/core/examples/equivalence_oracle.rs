//! Compares the exact compressor with the canonical-form oracle on methane
//! and shows a pair of nodes that are functionally but not structurally
//! equivalent: `max(a, a)` and `a`.

use liftcg::compress::{compress_exact, CompressionParams};
use liftcg::data::bundled;
use liftcg::graph::{Activation, ComputationGraph, Edge, NodeId, WeightStore};
use liftcg::oracle::{canonical_partition, canonical_string, functional_equiv_probe, ProbeOutcome};
use liftcg::templates::{unfold, Model, TemplateConfig};

pub fn run() -> anyhow::Result<bool> {
    let mut store = WeightStore::new(3);
    let g = unfold(&bundled::methane(3), &TemplateConfig::new(Model::Gcn, 3), &mut store)?;
    let classes = canonical_partition(&g);
    let (_, report) = compress_exact(&g, &store, CompressionParams::default())?;
    let agree = liftcg::compress::same_partition(&classes, &report.representatives(), &vec![true; g.len()]);
    println!("methane/gcn: oracle and exact compressor agree: {agree}");
    println!("output expression starts with: {:.80}", canonical_string(&g, g.outputs()[0]));

    let toy = ComputationGraph::new(
        vec![Activation::Const(vec![0.3]), Activation::Identity, Activation::Max, Activation::Sum],
        vec![Edge::new(0, 1, 1), Edge::new(0, 2, 1), Edge::new(0, 2, 1), Edge::new(1, 3, 0), Edge::new(2, 3, 0)],
        vec![NodeId(3)],
        1,
    )?;
    let w = WeightStore::from_scalars(1, &[0.7]);
    let probe = functional_equiv_probe(&toy, &w, NodeId(1), NodeId(2), 50, 0)?;
    let structural = canonical_partition(&toy);
    println!(
        "max(w x, w x) vs w x: probe says {}, structurally equal: {}",
        match probe {
            ProbeOutcome::EquivalentLikely => "equivalent".to_string(),
            ProbeOutcome::Distinguished { trial, .. } => format!("distinguished at trial {trial}"),
        },
        structural[1] == structural[2]
    );
    Ok(agree)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run().map(|_| ())
}
