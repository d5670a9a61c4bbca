//! Sweeps the number of significant digits kept by the non-exact algorithm
//! and compares its partition with the exact one, for scalar and
//! three-dimensional graphlet models on the toy molecules.

use liftcg::compress::{compress_exact, compress_nonexact, same_partition, CompressionParams};
use liftcg::data::bundled;
use liftcg::graph::WeightStore;
use liftcg::templates::{prepare_store, unfold, Model, TemplateConfig};

/// `(digits, nodes_after, matches_exact)` for digits 1..=15.
pub fn sweep(model: Model, dim: usize) -> anyhow::Result<(usize, Vec<(u32, usize, bool)>)> {
    let mols = bundled::toy_molecules(dim);
    let cfg = TemplateConfig::new(model, dim);
    let mut store = WeightStore::new(dim);
    prepare_store(&mols, &cfg, &mut store)?;
    let graphs = mols.iter().map(|m| unfold(m, &cfg, &mut store)).collect::<Result<Vec<_>, _>>()?;
    let exact = graphs
        .iter()
        .map(|g| compress_exact(g, &store, CompressionParams::default()))
        .collect::<Result<Vec<_>, _>>()?;
    let exact_nodes = exact.iter().map(|(c, _)| c.len()).sum();
    let mut rows = Vec::new();
    for digits in 1..=15 {
        let (mut nodes, mut same) = (0, true);
        for (g, (_, ex)) in graphs.iter().zip(&exact) {
            let (c, r) = compress_nonexact(g, &store, CompressionParams::new(1, digits, 0))?;
            nodes += c.len();
            same &= same_partition(&r.representatives(), &ex.representatives(), &g.reachable_from_outputs());
        }
        rows.push((digits, nodes, same));
    }
    Ok((exact_nodes, rows))
}

pub fn run() -> anyhow::Result<()> {
    for dim in [1, 3] {
        let (exact, rows) = sweep(Model::Graphlets, dim)?;
        println!("graphlets, dim {dim}, exact compression keeps {exact} nodes");
        for (d, n, same) in rows {
            println!("  digits {d:>2}: {n:>4} nodes{}", if same { "  (= exact)" } else { "" });
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run()
}
