//! Compresses the bundled toy molecules with both algorithms and checks on
//! fresh random weights that the exact result computes the same outputs.

use liftcg::compress::{compress_exact, compress_nonexact, sample_weights, CompressionParams};
use liftcg::data::bundled;
use liftcg::graph::{evaluate, WeightStore};
use liftcg::templates::{prepare_store, unfold, Model, TemplateConfig};

pub struct Row {
    pub model: Model,
    pub before: usize,
    pub exact: usize,
    pub nonexact: usize,
    pub max_rel_dev: f64,
}

pub fn run() -> anyhow::Result<Vec<Row>> {
    let dim = 3;
    let mols = bundled::toy_molecules(dim);
    let params = CompressionParams::new(1, 12, 0);
    let mut rows = Vec::new();
    for model in [Model::Gcn, Model::Sage, Model::Gin, Model::Graphlets] {
        let cfg = TemplateConfig::new(model, dim);
        let mut store = WeightStore::new(dim);
        prepare_store(&mols, &cfg, &mut store)?;
        let mut row = Row { model, before: 0, exact: 0, nonexact: 0, max_rel_dev: 0.0 };
        for m in &mols {
            let g = unfold(m, &cfg, &mut store)?;
            let (c, _) = compress_exact(&g, &store, params)?;
            let (n, _) = compress_nonexact(&g, &store, params)?;
            row.before += g.len();
            row.exact += c.len();
            row.nonexact += n.len();
            for w in sample_weights(&store, 99, 10) {
                let (a, b) = (evaluate(&g, &w)?, evaluate(&c, &w)?);
                let (x, y) = (a[g.outputs()[0].0][0], b[c.outputs()[0].0][0]);
                row.max_rel_dev = row.max_rel_dev.max((x - y).abs() / x.abs().max(f64::MIN_POSITIVE));
            }
        }
        println!(
            "{model:>9}: {} nodes -> exact {} ({:.2}x), nonexact {}; max output deviation {:e}",
            row.before,
            row.exact,
            row.before as f64 / row.exact as f64,
            row.nonexact,
            row.max_rel_dev
        );
        rows.push(row);
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run().map(|_| ())
}
