//! JSON document holding one graph together with its weight store.
//!
//! ```text
//! { "value_dim": 1,
//!   "nodes":   [ {"id": 0, "activation": "CONST", "const": [1.0]}, ... ],
//!   "edges":   [ [child, parent, label], ... ],
//!   "outputs": [ 3 ],
//!   "weights": [ {"shape": [1, 1], "data": [1.0], "trainable": false}, ... ] }
//! ```

use serde::{Deserialize, Serialize};

use super::{Activation, ActivationKind, ComputationGraph, Edge, GraphError, NodeId, Tensor, WeightStore};

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("malformed input at line {line}, column {column}: {message}")]
    MalformedInput {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct NodeDoc {
    id: usize,
    activation: ActivationKind,
    #[serde(rename = "const", default, skip_serializing_if = "Option::is_none")]
    constant: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct WeightDoc {
    shape: [usize; 2],
    data: Vec<f64>,
    trainable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
struct BundleDoc {
    value_dim: usize,
    nodes: Vec<NodeDoc>,
    edges: Vec<[usize; 3]>,
    outputs: Vec<usize>,
    weights: Vec<WeightDoc>,
}

/// A graph paired with the weights its labels point into.
#[derive(Debug, Clone)]
pub struct GraphBundle {
    pub graph: ComputationGraph,
    pub weights: WeightStore,
}

impl GraphBundle {
    pub fn to_json(&self) -> String {
        serialize(&self.graph, &self.weights)
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        let (graph, weights) = deserialize(text.as_bytes())?;
        Ok(GraphBundle { graph, weights })
    }
}

fn malformed(line: usize, column: usize, message: impl Into<String>) -> BundleError {
    BundleError::MalformedInput { line, column, message: message.into() }
}

pub fn serialize(g: &ComputationGraph, w: &WeightStore) -> String {
    let doc = BundleDoc {
        value_dim: g.value_dim(),
        nodes: g
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, a)| NodeDoc {
                id,
                activation: a.kind(),
                constant: match a {
                    Activation::Const(c) => Some(c.clone()),
                    _ => None,
                },
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| [e.child.0, e.parent.0, e.label.0])
            .collect(),
        outputs: g.outputs().iter().map(|o| o.0).collect(),
        weights: w
            .weights()
            .iter()
            .enumerate()
            .map(|(i, t)| WeightDoc {
                shape: [t.rows, t.cols],
                data: t.data.clone(),
                trainable: w.trainable_mask()[i],
                name: w.name(super::Label(i)).map(str::to_string),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("bundle serialization cannot fail")
}

pub fn deserialize(bytes: &[u8]) -> Result<(ComputationGraph, WeightStore), BundleError> {
    let doc: BundleDoc = serde_json::from_slice(bytes)
        .map_err(|e| malformed(e.line(), e.column(), e.to_string()))?;

    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (pos, n) in doc.nodes.into_iter().enumerate() {
        if n.id != pos {
            return Err(malformed(0, 0, format!("node #{pos} has id {} (ids must be 0..n in order)", n.id)));
        }
        let act = match (n.activation, n.constant) {
            (ActivationKind::Const, Some(c)) => Activation::Const(c),
            (ActivationKind::Const, None) => {
                return Err(malformed(0, 0, format!("CONST node {pos} has no \"const\" field")))
            }
            (k, None) => Activation::from_kind(k).expect("non-const kind"),
            (k, Some(_)) => {
                return Err(malformed(0, 0, format!("{k} node {pos} carries a constant")))
            }
        };
        nodes.push(act);
    }
    let edges = doc.edges.iter().map(|&[c, p, l]| Edge::new(c, p, l)).collect();
    let outputs = doc.outputs.into_iter().map(NodeId).collect();
    let graph = ComputationGraph::new(nodes, edges, outputs, doc.value_dim)?;

    if doc.weights.is_empty() {
        return Err(malformed(0, 0, "weight list is empty (entry 0 is the identity)"));
    }
    let mut tensors = Vec::with_capacity(doc.weights.len());
    let mut trainable = Vec::with_capacity(doc.weights.len());
    let mut names = Vec::with_capacity(doc.weights.len());
    for (i, wd) in doc.weights.into_iter().enumerate() {
        let [r, c] = wd.shape;
        if r * c != wd.data.len() {
            return Err(malformed(0, 0, format!("weight {i}: shape {r}x{c} but {} values", wd.data.len())));
        }
        tensors.push(Tensor::from_rows(r, c, wd.data));
        trainable.push(wd.trainable);
        names.push(wd.name);
    }
    if !(tensors[0].is_scalar() && tensors[0].data[0] == 1.0) || trainable[0] {
        return Err(malformed(0, 0, "weight 0 must be the fixed scalar identity"));
    }
    Ok((graph, WeightStore::from_parts(doc.value_dim, tensors, trainable, names)))
}

#[cfg(test)]
mod tests {
    use super::super::tests::example_one;
    use super::*;

    #[test]
    fn round_trip_example_one() {
        let (g, w) = example_one();
        let text = serialize(&g, &w);
        let (g2, w2) = deserialize(text.as_bytes()).unwrap();
        assert_eq!(g2.nodes(), g.nodes());
        assert_eq!(g2.edges(), g.edges());
        assert_eq!(g2.outputs(), g.outputs());
        assert_eq!(w2, w);
        assert_eq!(serialize(&g2, &w2), text);
    }

    #[test]
    fn duplicate_edges_survive() {
        let g = ComputationGraph::new(
            vec![Activation::Const(vec![1.0]), Activation::Identity, Activation::MulCos],
            vec![Edge::new(0, 1, 1), Edge::new(1, 2, 2), Edge::new(1, 2, 2)],
            vec![NodeId(2)],
            1,
        )
        .unwrap();
        let w = WeightStore::from_scalars(1, &[0.1, 0.2]);
        let text = serialize(&g, &w);
        assert!(text.contains("[1,2,2],[1,2,2]"));
        let (g2, _) = deserialize(text.as_bytes()).unwrap();
        assert_eq!(g2.edges().len(), 3);
    }

    #[test]
    fn truncated_stream_is_malformed() {
        let (g, w) = example_one();
        let text = serialize(&g, &w);
        let err = deserialize(&text.as_bytes()[..text.len() / 2]).unwrap_err();
        match err {
            BundleError::MalformedInput { line, column, .. } => assert!(line >= 1 && column > 0),
            other => panic!("unexpected {other}"),
        }
    }
}
