//! Trains the graphlet model on the toy molecules twice with the same seed,
//! once on the unfolded graphs and once on their exact compressions, and
//! compares the loss curves and final gradients.

use liftcg::data::{bundled, Dataset};
use liftcg::templates::{Model, TemplateConfig};
use liftcg::train::{train, CompressMode, TrainConfig, TrainTrace};

pub fn run(steps: usize) -> anyhow::Result<(TrainTrace, TrainTrace)> {
    let ds = Dataset::Graphs(bundled::toy_molecules(3));
    let cfg = TemplateConfig::new(Model::Graphlets, 3).seed(1);
    let tc = TrainConfig::default().steps(steps).seed(1);
    let plain = train(&ds, &cfg, &tc, CompressMode::None)?;
    let packed = train(&ds, &cfg, &tc, CompressMode::Exact)?;
    let worst = plain
        .losses
        .iter()
        .zip(&packed.losses)
        .map(|(a, b)| (a - b).abs() / a.abs())
        .fold(0.0, f64::max);
    println!("nodes: {} unfolded, {} compressed", plain.nodes, packed.nodes);
    println!("loss: {:.6} -> {:.6} (compressed {:.6})", plain.losses[0], plain.train.mse, packed.train.mse);
    println!("largest relative loss difference over {steps} steps: {worst:e}");
    println!("train time: {:.3}s unfolded, {:.3}s compressed", plain.wall_time, packed.wall_time);
    Ok((plain, packed))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run(200).map(|_| ())
}
