use std::collections::{BTreeSet, HashMap};

use crate::graph::{Activation, ComputationGraph, Label, WeightStore};

use super::{GraphBuilder, TemplateConfig, TemplateError, Triple, TripleStore};

/// Knowledge-base embedding model.
///
/// Every declared entity and relation gets an embedding realised as a
/// `CONST(1)` leaf feeding an `IDENTITY` node through its own trainable label.
/// Entity embeddings are then propagated over the co-occurrence graph built
/// from the positive `context` triples (`cfg.layers` GCN layers), and every
/// query triple gets a scoring chain
/// `sigmoid(Ws h(s) + Wr e(r) + Wo h(o))` -> hidden sigmoid -> scalar output.
pub fn unfold_kbe_split(
    kb: &TripleStore,
    context: &[Triple],
    queries: &[Triple],
    cfg: &TemplateConfig,
    store: &mut WeightStore,
) -> Result<ComputationGraph, TemplateError> {
    if kb.is_empty() || queries.is_empty() {
        return Err(TemplateError::EmptyKb);
    }
    let d = cfg.value_dim;
    let seed = cfg.seed;
    let mut b = GraphBuilder::default();

    let mut embed = |b: &mut GraphBuilder, key: String| -> Result<usize, TemplateError> {
        let w = store.param(&key, d, 1, seed)?;
        let leaf = b.node(Activation::Const(vec![1.0]));
        let e = b.node(Activation::Identity);
        b.edge(leaf, e, w);
        Ok(e)
    };
    let mut ent_state = Vec::with_capacity(kb.entities.len());
    for e in &kb.entities {
        ent_state.push(embed(&mut b, format!("kbe/ent/{e}"))?);
    }
    let mut rel_emb = HashMap::new();
    for r in &kb.relations {
        let node = embed(&mut b, format!("kbe/rel/{r}"))?;
        rel_emb.insert(r.as_str(), node);
    }

    let ent_index: HashMap<&str, usize> =
        kb.entities.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let lookup = |name: &str| {
        ent_index
            .get(name)
            .copied()
            .ok_or_else(|| TemplateError::InvalidSample { sample: "kb".into(), detail: format!("undeclared entity {name:?}") })
    };

    let mut adjacent = vec![BTreeSet::new(); kb.entities.len()];
    for t in context.iter().filter(|t| t.label >= 0.5) {
        let (s, o) = (lookup(&t.subject)?, lookup(&t.object)?);
        if s != o {
            adjacent[s].insert(o);
            adjacent[o].insert(s);
        }
    }

    let square = |store: &mut WeightStore, key: String| store.param(&key, d, d, seed);
    for layer in 1..=cfg.layers {
        let w1 = square(store, format!("kbe/l{layer}/w1"))?;
        let w2 = square(store, format!("kbe/l{layer}/w2"))?;
        let w3 = square(store, format!("kbe/l{layer}/w3"))?;
        let mut next = Vec::with_capacity(ent_state.len());
        for (v, nbrs) in adjacent.iter().enumerate() {
            let agg = if nbrs.is_empty() {
                None
            } else {
                let convs: Vec<usize> = nbrs
                    .iter()
                    .map(|&u| {
                        let c = b.node(Activation::SigmoidSum);
                        b.edge(ent_state[u], c, w1);
                        c
                    })
                    .collect();
                let a = b.node(Activation::Avg);
                for c in convs {
                    b.edge(c, a, Label::IDENTITY);
                }
                Some(a)
            };
            let h = b.node(Activation::SigmoidSum);
            b.edge(ent_state[v], h, w2);
            if let Some(a) = agg {
                b.edge(a, h, w3);
            }
            next.push(h);
        }
        ent_state = next;
    }

    let ws = square(store, "kbe/score/subject".into())?;
    let wr = square(store, "kbe/score/relation".into())?;
    let wo = square(store, "kbe/score/object".into())?;
    let wm = square(store, "kbe/mlp/hidden".into())?;
    let w_out = store.param("kbe/mlp/out", 1, d, seed)?;
    let mut outputs = Vec::with_capacity(queries.len());
    for t in queries {
        let (s, o) = (lookup(&t.subject)?, lookup(&t.object)?);
        let r = *rel_emb.get(t.relation.as_str()).ok_or_else(|| TemplateError::InvalidSample {
            sample: "kb".into(),
            detail: format!("undeclared relation {:?}", t.relation),
        })?;
        let score = b.node(Activation::SigmoidSum);
        b.edge(ent_state[s], score, ws);
        b.edge(r, score, wr);
        b.edge(ent_state[o], score, wo);
        let hidden = b.node(Activation::SigmoidSum);
        b.edge(score, hidden, wm);
        let out = b.node(Activation::SigmoidSum);
        b.edge(hidden, out, w_out);
        outputs.push(out);
    }
    Ok(b.finish(outputs, d)?)
}
