//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use liftcg::data::{bundled, gen_synthetic, Dataset, Synthetic};
use liftcg::graph::{Activation, ActivationKind, ComputationGraph, Edge, NodeId, Tensor, WeightStore};
use liftcg::templates::{prepare_store, prepare_store_kb, unfold, unfold_kbe, Model, TemplateConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub name: String,
    pub graph: ComputationGraph,
    pub store: WeightStore,
}

/// Random DAG with mixed activations and deliberate structural duplicates.
///
/// A third of the non-leaf nodes are copies of an earlier node (same
/// activation and children, arguments shuffled when the activation is
/// symmetric), so compression has something to find.
pub fn random_graph(seed: u64, max_nodes: usize) -> (ComputationGraph, WeightStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.gen_range(1..=2);
    let n = rng.gen_range(4..=max_nodes.max(4));
    let mut store = WeightStore::new(dim);
    for _ in 0..rng.gen_range(1..=4) {
        let t = if rng.gen_bool(0.5) {
            Tensor::scalar(rng.gen_range(-1.0..1.0))
        } else {
            Tensor::from_rows(dim, dim, (0..dim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        };
        store.push(t, true, None);
    }
    let labels = store.len();
    let leaves = rng.gen_range(1..=3.min(n - 1));
    let consts = [0.5, -1.0, 0.25];
    let mut nodes = Vec::with_capacity(n);
    let mut children: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    for _ in 0..leaves {
        nodes.push(Activation::Const((0..dim).map(|_| *consts.choose(&mut rng).unwrap()).collect()));
        children.push(Vec::new());
    }
    let kinds: Vec<ActivationKind> = ActivationKind::ALL.into_iter().filter(|k| *k != ActivationKind::Const).collect();
    while nodes.len() < n {
        let i = nodes.len();
        if i > leaves && rng.gen_bool(0.33) {
            let src = rng.gen_range(leaves..i);
            let mut kids = children[src].clone();
            if nodes[src].is_symmetric() {
                kids.shuffle(&mut rng);
            }
            nodes.push(nodes[src].clone());
            children.push(kids);
            continue;
        }
        let kind = *kinds.choose(&mut rng).unwrap();
        let arity = match kind {
            ActivationKind::Identity => 1,
            ActivationKind::MulCos => 2,
            _ => rng.gen_range(1..=3),
        };
        // Prefer recent nodes so the graph gets deep, but allow any.
        let lo = i.saturating_sub(8);
        let kids = (0..arity)
            .map(|_| {
                let c = if rng.gen_bool(0.7) { rng.gen_range(lo..i) } else { rng.gen_range(0..i) };
                (c, rng.gen_range(0..labels))
            })
            .collect();
        nodes.push(Activation::from_kind(kind).unwrap());
        children.push(kids);
    }
    let edges = children
        .iter()
        .enumerate()
        .flat_map(|(p, kids)| kids.iter().map(move |&(c, l)| Edge::new(c, p, l)))
        .collect();
    // Outputs: the last node plus a few random non-leaves, possibly repeated.
    let mut outputs = vec![NodeId(n - 1)];
    for _ in 0..rng.gen_range(0..3) {
        outputs.push(NodeId(rng.gen_range(leaves..n)));
    }
    let g = ComputationGraph::new(nodes, edges, outputs, dim).expect("generated graph is valid");
    (g, store)
}

pub fn example_one() -> (ComputationGraph, WeightStore) {
    let g = ComputationGraph::new(
        vec![Activation::Const(vec![1.0]), Activation::Identity, Activation::Identity, Activation::MulCos],
        vec![Edge::new(0, 1, 1), Edge::new(0, 2, 1), Edge::new(1, 3, 2), Edge::new(2, 3, 2)],
        vec![NodeId(3)],
        1,
    )
    .unwrap();
    (g, WeightStore::from_scalars(1, &[0.5, 1.0]))
}

/// Unfolds every graph sample against one store.
pub fn unfold_all(samples: &[liftcg::templates::InputSample], cfg: &TemplateConfig) -> (Vec<ComputationGraph>, WeightStore) {
    let mut store = WeightStore::new(cfg.value_dim);
    prepare_store(samples, cfg, &mut store).unwrap();
    let graphs = samples.iter().map(|s| unfold(s, cfg, &mut store).unwrap()).collect();
    (graphs, store)
}

/// Every bundled and synthetic dataset unfolded with every applicable
/// template, at dims 1 and 3.
pub fn bundled_fixtures() -> Vec<Fixture> {
    let mut out = Vec::new();
    let models = [Model::Gcn, Model::Sage, Model::Gin, Model::Graphlets];
    for dim in [1, 3] {
        let mut sets: Vec<(&str, Vec<_>)> = vec![
            ("methane", vec![bundled::methane(dim)]),
            ("toy", bundled::toy_molecules(dim)),
        ];
        for (name, spec) in [
            ("stars", Synthetic::Stars { k: 5, count: 2 }),
            ("trees", Synthetic::Trees { branching: 2, depth: 2, count: 2 }),
            ("chains", Synthetic::Mols { count: 3, max_carbons: 3 }),
        ] {
            if let Dataset::Graphs(g) = gen_synthetic(spec, dim, 5) {
                sets.push((name, g));
            }
        }
        for (set, samples) in &sets {
            for model in models {
                let cfg = TemplateConfig::new(model, dim);
                let (graphs, store) = unfold_all(samples, &cfg);
                for (s, g) in samples.iter().zip(graphs) {
                    out.push(Fixture { name: format!("{set}/{}/{model}/d{dim}", s.id), graph: g, store: store.clone() });
                }
            }
        }
    }
    let kb = bundled::kinships_sample();
    let cfg = TemplateConfig::new(Model::Kbe, 3);
    let mut store = WeightStore::new(3);
    prepare_store_kb(&kb, &cfg, &mut store).unwrap();
    let g = unfold_kbe(&kb, &cfg, &mut store).unwrap();
    out.push(Fixture { name: "kinships/kbe/d3".into(), graph: g, store });
    out
}

/// `|a - b| <= tol * max(|a|, |b|)`, treating identical values (including
/// infinities and NaNs with the same bits) as equal.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    a.to_bits() == b.to_bits() || (a - b).abs() <= tol * a.abs().max(b.abs())
}
