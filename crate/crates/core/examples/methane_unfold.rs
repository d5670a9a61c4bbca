//! Unfolds the bundled methane molecule with each GNN template and prints
//! how many nodes of every activation the computation graph contains.

use std::collections::BTreeMap;

use liftcg::data::bundled;
use liftcg::graph::{serialize, ComputationGraph, WeightStore};
use liftcg::templates::{unfold, Model, TemplateConfig};

pub fn histogram(g: &ComputationGraph) -> BTreeMap<&'static str, usize> {
    let mut h = BTreeMap::new();
    for a in g.nodes() {
        *h.entry(a.kind().name()).or_default() += 1;
    }
    h
}

pub fn run() -> anyhow::Result<usize> {
    let methane = bundled::methane(3);
    let mut gcn_nodes = 0;
    for model in [Model::Gcn, Model::Sage, Model::Gin, Model::Graphlets] {
        let cfg = TemplateConfig::new(model, 3);
        let mut store = WeightStore::new(3);
        let g = unfold(&methane, &cfg, &mut store)?;
        println!(
            "{model:>9}: {} nodes, {} edges, {} weights, {:?}",
            g.len(),
            g.edges().len(),
            store.len(),
            histogram(&g)
        );
        if model == Model::Gcn {
            gcn_nodes = g.len();
            println!("bundle size: {} bytes", serialize(&g, &store).len());
        }
    }
    Ok(gcn_nodes)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run().map(|_| ())
}
