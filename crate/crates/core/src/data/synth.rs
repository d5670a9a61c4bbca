use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{atom_features, Dataset};
use crate::templates::{InputSample, SampleEdge, SampleNode, Triple, TripleStore};

/// Seeded generators of highly symmetric datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Synthetic {
    /// Star graphs `K_{1,k}`: a carbon centre with `k` leaves that are each
    /// hydrogen or, with probability 1/4, oxygen. Label 1 iff an oxygen occurs.
    Stars { k: usize, count: usize },
    /// Balanced trees with carbon interior and H/O leaves, labeled like stars.
    Trees { branching: usize, depth: usize, count: usize },
    /// Saturated carbon chains of 1..=`max_carbons` atoms; half of them carry
    /// one hydroxyl group and are labeled 1.
    Mols { count: usize, max_carbons: usize },
    /// Kinship-like knowledge base. Entities live in two families and
    /// positive triples only link members of the same family.
    Kb { entities: usize, relations: usize, positives: usize, negatives: usize },
}

struct Mol {
    nodes: Vec<SampleNode>,
    edges: Vec<SampleEdge>,
    dim: usize,
}

impl Mol {
    fn new(dim: usize) -> Self {
        Mol { nodes: Vec::new(), edges: Vec::new(), dim }
    }

    fn atom(&mut self, kind: &str) -> usize {
        let i = self.nodes.len();
        self.nodes.push(SampleNode { id: format!("a{i}"), kind: kind.into(), features: atom_features(kind, self.dim) });
        i
    }

    fn bond(&mut self, a: usize, b: usize) {
        self.edges.push(SampleEdge { src: format!("a{a}"), dst: format!("a{b}"), kind: "single".into() });
    }

    fn finish(self, id: String) -> InputSample {
        let label = if self.nodes.iter().any(|n| n.kind == "O") { 1.0 } else { 0.0 };
        InputSample { id, nodes: self.nodes, edges: self.edges, label }
    }
}

/// Generates the dataset described by `spec` with node features of length
/// `dim`. Output depends only on the arguments.
pub fn gen_synthetic(spec: Synthetic, dim: usize, seed: u64) -> Dataset {
    let mut rng = crate::rng::keyed(seed, "synthetic");
    let leaf = |rng: &mut rand_chacha::ChaCha8Rng| if rng.gen_bool(0.25) { "O" } else { "H" };
    match spec {
        Synthetic::Stars { k, count } => Dataset::Graphs(
            (0..count)
                .map(|i| {
                    let mut m = Mol::new(dim);
                    let c = m.atom("C");
                    for _ in 0..k {
                        let l = m.atom(leaf(&mut rng));
                        m.bond(c, l);
                    }
                    m.finish(format!("star{i}"))
                })
                .collect(),
        ),
        Synthetic::Trees { branching, depth, count } => Dataset::Graphs(
            (0..count)
                .map(|i| {
                    let mut m = Mol::new(dim);
                    let mut level = vec![m.atom(if depth == 0 { leaf(&mut rng) } else { "C" })];
                    for d in 1..=depth {
                        let mut next = Vec::new();
                        for &p in &level {
                            for _ in 0..branching {
                                let kind = if d == depth { leaf(&mut rng) } else { "C" };
                                let c = m.atom(kind);
                                m.bond(p, c);
                                next.push(c);
                            }
                        }
                        level = next;
                    }
                    m.finish(format!("tree{i}"))
                })
                .collect(),
        ),
        Synthetic::Mols { count, max_carbons } => Dataset::Graphs(
            (0..count)
                .map(|i| {
                    let n = rng.gen_range(1..=max_carbons.max(1));
                    let hydroxyl = rng.gen_bool(0.5);
                    let oh_at = rng.gen_range(0..n);
                    let mut m = Mol::new(dim);
                    let carbons: Vec<usize> = (0..n).map(|_| m.atom("C")).collect();
                    for w in carbons.windows(2) {
                        m.bond(w[0], w[1]);
                    }
                    for (j, &c) in carbons.iter().enumerate() {
                        let bonds = usize::from(j > 0) + usize::from(j + 1 < n);
                        let mut free = 4 - bonds;
                        if hydroxyl && j == oh_at {
                            let o = m.atom("O");
                            m.bond(c, o);
                            let h = m.atom("H");
                            m.bond(o, h);
                            free -= 1;
                        }
                        for _ in 0..free {
                            let h = m.atom("H");
                            m.bond(c, h);
                        }
                    }
                    m.finish(format!("mol{i}"))
                })
                .collect(),
        ),
        Synthetic::Kb { entities, relations, positives, negatives } => {
            Dataset::Triples(gen_kb(&mut rng, entities, relations, positives, negatives))
        }
    }
}

fn gen_kb(
    rng: &mut rand_chacha::ChaCha8Rng,
    entities: usize,
    relations: usize,
    positives: usize,
    negatives: usize,
) -> TripleStore {
    let ents: Vec<String> = (0..entities).map(|i| format!("p{i}")).collect();
    let rels: Vec<String> = (0..relations).map(|i| format!("r{i}")).collect();
    let family = |e: usize| e % 2;
    let mut candidates_pos = Vec::new();
    let mut candidates_neg = Vec::new();
    for s in 0..entities {
        for o in 0..entities {
            if s == o {
                continue;
            }
            for r in 0..relations {
                if family(s) == family(o) {
                    candidates_pos.push((s, r, o));
                } else {
                    candidates_neg.push((s, r, o));
                }
            }
        }
    }
    candidates_pos.shuffle(rng);
    candidates_neg.shuffle(rng);
    let mut seen = HashSet::new();
    let mut triples = Vec::new();
    let picks = candidates_pos
        .into_iter()
        .take(positives)
        .map(|t| (t, 1.0))
        .chain(candidates_neg.into_iter().take(negatives).map(|t| (t, 0.0)));
    for ((s, r, o), label) in picks {
        if seen.insert((s, r, o)) {
            triples.push(Triple { subject: ents[s].clone(), relation: rels[r].clone(), object: ents[o].clone(), label });
        }
    }
    // Entity order is first appearance, the same order a saved copy loads with.
    TripleStore::from_triples(triples).expect("generated triples are unique")
}
