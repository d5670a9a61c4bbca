use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "NONEXACT")]
    NonExact,
    #[serde(rename = "EXACT")]
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompressionParams {
    /// Number of random weight initialisations (n).
    pub inits: usize,
    /// Significant digits kept per value (s).
    pub digits: u32,
    pub seed: u64,
}

impl CompressionParams {
    pub fn new(inits: usize, digits: u32, seed: u64) -> Self {
        CompressionParams { inits, digits, seed }
    }
}

impl Default for CompressionParams {
    fn default() -> Self {
        CompressionParams::new(1, 12, 0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompressError {
    #[error("node {0} is not part of the compressed graph")]
    UnknownNode(NodeId),
}

/// Outcome of one compression pass.
///
/// `merge_map` covers every original node and maps it to its representative
/// (an original id). `renumbering` maps the surviving representatives to
/// their ids in the compressed graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub algorithm: Algorithm,
    pub params: CompressionParams,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub merge_map: Vec<(NodeId, NodeId)>,
    pub renumbering: Vec<(NodeId, NodeId)>,
    /// Seconds.
    pub wall_time: f64,
}

impl CompressionReport {
    /// Number of nodes that were merged into another node.
    pub fn merges(&self) -> usize {
        self.merge_map.iter().filter(|(o, r)| o != r).count()
    }

    /// Representative of every original node, as a plain vector.
    pub fn representatives(&self) -> Vec<usize> {
        let mut rep = vec![0; self.merge_map.len()];
        for &(o, r) in &self.merge_map {
            rep[o.0] = r.0;
        }
        rep
    }

    pub fn compression_ratio(&self) -> f64 {
        self.nodes_before as f64 / self.nodes_after.max(1) as f64
    }

    /// Id in the compressed graph that answers queries about `original`.
    pub fn resolve(&self, original: NodeId) -> Result<NodeId, CompressError> {
        let rep = self
            .merge_map
            .get(original.0)
            .map(|&(_, r)| r)
            .ok_or(CompressError::UnknownNode(original))?;
        self.renumbering
            .binary_search_by_key(&rep, |&(o, _)| o)
            .map(|i| self.renumbering[i].1)
            .map_err(|_| CompressError::UnknownNode(original))
    }

    /// Report of running `self` and then `next` on its output.
    pub fn then(&self, next: &CompressionReport) -> CompressionReport {
        let mid_to_orig: HashMap<NodeId, NodeId> = self.renumbering.iter().map(|&(o, m)| (m, o)).collect();
        let next_rep = next.representatives();
        let merge_map = self
            .merge_map
            .iter()
            .map(|&(o, r)| {
                let merged = self
                    .renumbering
                    .binary_search_by_key(&r, |&(x, _)| x)
                    .ok()
                    .map(|i| self.renumbering[i].1)
                    .map(|mid| mid_to_orig[&NodeId(next_rep[mid.0])]);
                (o, merged.unwrap_or(r))
            })
            .collect();
        let renumbering = next
            .renumbering
            .iter()
            .map(|&(mid, fin)| (mid_to_orig[&mid], fin))
            .collect::<Vec<_>>();
        let mut renumbering = renumbering;
        renumbering.sort_unstable();
        CompressionReport {
            algorithm: next.algorithm,
            params: next.params,
            nodes_before: self.nodes_before,
            nodes_after: next.nodes_after,
            edges_before: self.edges_before,
            edges_after: next.edges_after,
            merge_map,
            renumbering,
            wall_time: self.wall_time + next.wall_time,
        }
    }
}

/// Looks up per-node data of the compressed graph for original nodes.
pub fn apply_merge_map<T: Clone>(
    report: &CompressionReport,
    compressed: &[T],
    originals: &[NodeId],
) -> Result<Vec<T>, CompressError> {
    originals
        .iter()
        .map(|&o| report.resolve(o).map(|c| compressed[c.0].clone()))
        .collect()
}

/// Whether two representative vectors induce the same partition on the
/// nodes selected by `mask`.
pub fn same_partition(a: &[usize], b: &[usize], mask: &[bool]) -> bool {
    let mut ab = HashMap::new();
    let mut ba = HashMap::new();
    for i in (0..a.len()).filter(|&i| mask[i]) {
        if *ab.entry(a[i]).or_insert(b[i]) != b[i] || *ba.entry(b[i]).or_insert(a[i]) != a[i] {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(merge: &[usize], survivors: &[usize]) -> CompressionReport {
        CompressionReport {
            algorithm: Algorithm::Exact,
            params: CompressionParams::default(),
            nodes_before: merge.len(),
            nodes_after: survivors.len(),
            edges_before: 0,
            edges_after: 0,
            merge_map: merge.iter().enumerate().map(|(o, &r)| (NodeId(o), NodeId(r))).collect(),
            renumbering: survivors.iter().enumerate().map(|(n, &o)| (NodeId(o), NodeId(n))).collect(),
            wall_time: 0.0,
        }
    }

    #[test]
    fn identity_map_round_trip() {
        let r = report(&[0, 1, 2], &[0, 1, 2]);
        let vals = vec!["a", "b", "c"];
        let ids: Vec<NodeId> = (0..3).map(NodeId).collect();
        assert_eq!(apply_merge_map(&r, &vals, &ids).unwrap(), vals);
    }

    #[test]
    fn merged_node_resolves_to_representative() {
        // original 0,1,2,3 with 2 merged into 1; compressed ids 0,1,2
        let r = report(&[0, 1, 1, 3], &[0, 1, 3]);
        let vals = vec![10, 20, 40];
        assert_eq!(apply_merge_map(&r, &vals, &[NodeId(2)]).unwrap(), vec![20]);
        assert_eq!(r.resolve(NodeId(3)).unwrap(), NodeId(2));
        assert!(r.resolve(NodeId(9)).is_err());
    }

    #[test]
    fn pruned_node_is_unknown() {
        let r = report(&[0, 1, 2], &[0, 2]);
        assert_eq!(r.resolve(NodeId(1)), Err(CompressError::UnknownNode(NodeId(1))));
    }

    #[test]
    fn composed_reports() {
        // pass 1: 0..5, 3 -> 1, survivors [0,1,2,4] -> ids 0..3
        let first = report(&[0, 1, 2, 1, 4], &[0, 1, 2, 4]);
        // pass 2 on the 4-node graph: 2 -> 0, survivors [0,1,3]
        let second = report(&[0, 1, 0, 3], &[0, 1, 3]);
        let both = first.then(&second);
        let direct = |o: usize| both.resolve(NodeId(o)).unwrap();
        assert_eq!(direct(0), NodeId(0));
        assert_eq!(direct(2), NodeId(0));
        assert_eq!(direct(3), NodeId(1));
        assert_eq!(direct(4), NodeId(2));
        for o in 0..5 {
            let step = second.resolve(first.resolve(NodeId(o)).unwrap()).unwrap();
            assert_eq!(both.resolve(NodeId(o)).unwrap(), step);
        }
    }

    #[test]
    fn partitions() {
        let all = [true; 4];
        assert!(same_partition(&[0, 0, 2, 3], &[1, 1, 2, 0], &all));
        assert!(!same_partition(&[0, 0, 2, 3], &[0, 1, 2, 3], &all));
        assert!(same_partition(&[0, 0, 2, 3], &[0, 1, 2, 3], &[false, true, true, true]));
    }
}
