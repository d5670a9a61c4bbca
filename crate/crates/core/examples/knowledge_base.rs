//! Knowledge-base embeddings on the bundled kinship sample: unfolds one graph
//! scoring every triple, compresses it and runs a short crossvalidation.

use liftcg::compress::{compress_exact, CompressionParams};
use liftcg::data::{bundled, Dataset};
use liftcg::graph::WeightStore;
use liftcg::templates::{prepare_store_kb, unfold_kbe, Model, TemplateConfig};
use liftcg::train::{crossvalidate, CompressMode, TrainConfig};

pub fn run(steps: usize) -> anyhow::Result<(usize, usize)> {
    let kb = bundled::kinships_sample();
    println!("{} entities, {} relations, {} triples", kb.entities.len(), kb.relations.len(), kb.len());
    let cfg = TemplateConfig::new(Model::Kbe, 3);
    let mut store = WeightStore::new(3);
    prepare_store_kb(&kb, &cfg, &mut store)?;
    let g = unfold_kbe(&kb, &cfg, &mut store)?;
    let (c, report) = compress_exact(&g, &store, CompressionParams::default())?;
    println!("graph: {} nodes -> {} after exact compression", g.len(), c.len());

    let tc = TrainConfig::default().steps(steps).folds(3);
    let cv = crossvalidate(&Dataset::Triples(kb), &cfg, &tc, CompressMode::Exact)?;
    for f in &cv.folds {
        println!("fold {}: train acc {:.3}, test acc {:.3}", f.fold, f.train.accuracy, f.test.accuracy);
    }
    println!("test accuracy {:.3} +- {:.3}", cv.test_accuracy.mean, cv.test_accuracy.std);
    Ok((report.nodes_before, report.nodes_after))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run(300).map(|_| ())
}
