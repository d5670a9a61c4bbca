//! Computation-graph IR.
//!
//! A graph is a list of nodes, each carrying an [`Activation`], plus an ordered
//! list of labeled edges `(child, parent, label)`. The label of an edge indexes
//! into a [`WeightStore`]; several edges carrying the same label share a
//! parameter. Edge order is significant: the children of a node are ordered by
//! the position of their edges in the edge list, and the same edge may appear
//! more than once.

mod bundle;
pub(crate) mod eval;
mod weights;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bundle::{deserialize, serialize, BundleError, GraphBundle};
pub use eval::{evaluate, pooled_sum, EvalError, NodeValues};
pub use weights::{Tensor, WeightError, WeightStore};

/// Dense node index, unique within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index into a [`WeightStore`]. Label 0 is the fixed identity weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub usize);

impl Label {
    pub const IDENTITY: Label = Label(0);

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub child: NodeId,
    pub parent: NodeId,
    pub label: Label,
}

impl Edge {
    pub fn new(child: usize, parent: usize, label: usize) -> Self {
        Edge {
            child: NodeId(child),
            parent: NodeId(parent),
            label: Label(label),
        }
    }
}

/// Discriminant of an [`Activation`], without the constant payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActivationKind {
    Const,
    Identity,
    SigmoidSum,
    TanhSum,
    ReluSum,
    Sum,
    Avg,
    Max,
    MulCos,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 9] = [
        ActivationKind::Const,
        ActivationKind::Identity,
        ActivationKind::SigmoidSum,
        ActivationKind::TanhSum,
        ActivationKind::ReluSum,
        ActivationKind::Sum,
        ActivationKind::Avg,
        ActivationKind::Max,
        ActivationKind::MulCos,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Const => "CONST",
            ActivationKind::Identity => "IDENTITY",
            ActivationKind::SigmoidSum => "SIGMOID_SUM",
            ActivationKind::TanhSum => "TANH_SUM",
            ActivationKind::ReluSum => "RELU_SUM",
            ActivationKind::Sum => "SUM",
            ActivationKind::Avg => "AVG",
            ActivationKind::Max => "MAX",
            ActivationKind::MulCos => "MUL_COS",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Invariant under any permutation of the (weighted) argument list.
    ///
    /// Every `f(sum of args)` kind qualifies, as do the pooling kinds.
    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            ActivationKind::SigmoidSum
                | ActivationKind::TanhSum
                | ActivationKind::ReluSum
                | ActivationKind::Sum
                | ActivationKind::Avg
                | ActivationKind::Max
        )
    }

    fn arity_ok(self, children: usize) -> bool {
        match self {
            ActivationKind::Const => children == 0,
            ActivationKind::Identity => children == 1,
            ActivationKind::MulCos => children == 2,
            _ => children >= 1,
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-node activation function.
#[derive(Debug, Clone, PartialEq)]
pub enum Activation {
    /// Leaf holding a constant (sample feature) vector.
    Const(Vec<f64>),
    Identity,
    SigmoidSum,
    TanhSum,
    ReluSum,
    Sum,
    Avg,
    Max,
    /// `x * cos(y)` elementwise over exactly two arguments.
    MulCos,
}

impl Activation {
    pub fn kind(&self) -> ActivationKind {
        match self {
            Activation::Const(_) => ActivationKind::Const,
            Activation::Identity => ActivationKind::Identity,
            Activation::SigmoidSum => ActivationKind::SigmoidSum,
            Activation::TanhSum => ActivationKind::TanhSum,
            Activation::ReluSum => ActivationKind::ReluSum,
            Activation::Sum => ActivationKind::Sum,
            Activation::Avg => ActivationKind::Avg,
            Activation::Max => ActivationKind::Max,
            Activation::MulCos => ActivationKind::MulCos,
        }
    }

    pub fn from_kind(kind: ActivationKind) -> Option<Self> {
        Some(match kind {
            ActivationKind::Const => return None,
            ActivationKind::Identity => Activation::Identity,
            ActivationKind::SigmoidSum => Activation::SigmoidSum,
            ActivationKind::TanhSum => Activation::TanhSum,
            ActivationKind::ReluSum => Activation::ReluSum,
            ActivationKind::Sum => Activation::Sum,
            ActivationKind::Avg => Activation::Avg,
            ActivationKind::Max => Activation::Max,
            ActivationKind::MulCos => Activation::MulCos,
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.kind().is_symmetric()
    }

    /// Equality used for merging: constants must match bit for bit.
    pub fn same_function(&self, other: &Activation) -> bool {
        match (self, other) {
            (Activation::Const(a), Activation::Const(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => self.kind() == other.kind(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("cycle detected through node {0}")]
    CycleDetected(NodeId),
    #[error("node {node} ({kind}) has {children} children, which its activation does not allow")]
    ArityViolation {
        node: NodeId,
        kind: ActivationKind,
        children: usize,
    },
    #[error("edge #{index} ({child} -> {parent}) references a node outside 0..{nodes}")]
    DanglingEdge {
        index: usize,
        child: usize,
        parent: usize,
        nodes: usize,
    },
    #[error("output {0} does not exist")]
    UnknownOutput(NodeId),
    #[error("value dimension must be positive")]
    ZeroDimension,
}

/// A validated, acyclic computation graph.
#[derive(Debug, Clone)]
pub struct ComputationGraph {
    nodes: Vec<Activation>,
    edges: Vec<Edge>,
    outputs: Vec<NodeId>,
    value_dim: usize,
    // edge indices into `edges`, in edge-list order
    child_edges: Vec<Vec<usize>>,
    parent_edges: Vec<Vec<usize>>,
    topo: Vec<NodeId>,
}

impl ComputationGraph {
    /// Validates the parts and builds adjacency indices and a topological order.
    pub fn new(
        nodes: Vec<Activation>,
        edges: Vec<Edge>,
        outputs: Vec<NodeId>,
        value_dim: usize,
    ) -> Result<Self, GraphError> {
        if value_dim == 0 {
            return Err(GraphError::ZeroDimension);
        }
        let n = nodes.len();
        let mut child_edges = vec![Vec::new(); n];
        let mut parent_edges = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.child.0 >= n || e.parent.0 >= n {
                return Err(GraphError::DanglingEdge {
                    index: i,
                    child: e.child.0,
                    parent: e.parent.0,
                    nodes: n,
                });
            }
            if e.child == e.parent {
                return Err(GraphError::CycleDetected(e.child));
            }
            child_edges[e.parent.0].push(i);
            parent_edges[e.child.0].push(i);
        }
        if let Some(&o) = outputs.iter().find(|o| o.0 >= n) {
            return Err(GraphError::UnknownOutput(o));
        }

        // Kahn's algorithm, smallest ready id first.
        let mut pending: Vec<usize> = child_edges.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = pending
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(Reverse(i)) = ready.pop() {
            topo.push(NodeId(i));
            for &e in &parent_edges[i] {
                let p = edges[e].parent.0;
                pending[p] -= 1;
                if pending[p] == 0 {
                    ready.push(Reverse(p));
                }
            }
        }
        if topo.len() != n {
            let stuck = pending.iter().position(|&p| p > 0).unwrap_or(0);
            return Err(GraphError::CycleDetected(NodeId(stuck)));
        }
        for (i, act) in nodes.iter().enumerate() {
            let kind = act.kind();
            if !kind.arity_ok(child_edges[i].len()) {
                return Err(GraphError::ArityViolation {
                    node: NodeId(i),
                    kind,
                    children: child_edges[i].len(),
                });
            }
        }

        Ok(ComputationGraph {
            nodes,
            edges,
            outputs,
            value_dim,
            child_edges,
            parent_edges,
            topo,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn nodes(&self) -> &[Activation] {
        &self.nodes
    }

    pub fn activation(&self, node: NodeId) -> &Activation {
        &self.nodes[node.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    /// Incoming edges of `node` (node is the parent), in edge-list order.
    pub fn child_edges(&self, node: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.child_edges[node.0].iter().map(|&e| &self.edges[e])
    }

    /// Edge indices of the incoming edges of `node`.
    pub fn child_edge_indices(&self, node: NodeId) -> &[usize] {
        &self.child_edges[node.0]
    }

    pub fn parent_edges(&self, node: NodeId) -> impl Iterator<Item = &Edge> + '_ {
        self.parent_edges[node.0].iter().map(|&e| &self.edges[e])
    }

    /// Children first; ties broken by ascending id.
    pub fn topological_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// Length of the longest path from `node` down to a leaf, for every node.
    pub fn heights(&self) -> Vec<usize> {
        let mut h = vec![0usize; self.len()];
        for &n in &self.topo {
            h[n.0] = self
                .child_edges(n)
                .map(|e| h[e.child.0] + 1)
                .max()
                .unwrap_or(0);
        }
        h
    }

    /// Marks nodes from which some output is reachable.
    pub fn reachable_from_outputs(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<NodeId> = self.outputs.clone();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n.0], true) {
                continue;
            }
            stack.extend(self.child_edges(n).map(|e| e.child));
        }
        seen
    }

    pub fn max_label(&self) -> Option<Label> {
        self.edges.iter().map(|e| e.label).max()
    }

    /// Labels used by edges, with multiplicity, sorted.
    pub fn label_multiset(&self) -> Vec<Label> {
        let mut l: Vec<Label> = self.edges.iter().map(|e| e.label).collect();
        l.sort_unstable();
        l
    }
}
