use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use super::Label;

/// Row-major weight tensor. A 1x1 tensor acts as a scalar multiplier on a
/// vector of any length; anything else acts as a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn scalar(v: f64) -> Self {
        Tensor { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "tensor data does not match shape");
        Tensor { rows, cols, data }
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Output length when applied to an input of length `input`, if compatible.
    pub fn output_len(&self, input: usize) -> Option<usize> {
        if self.is_scalar() {
            Some(input)
        } else if self.cols == input {
            Some(self.rows)
        } else {
            None
        }
    }

    /// `out = self * x`. Caller guarantees shapes are compatible.
    pub fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        if self.is_scalar() {
            let w = self.data[0];
            out.extend(x.iter().map(|v| w * v));
        } else {
            debug_assert_eq!(self.cols, x.len());
            for r in 0..self.rows {
                let row = &self.data[r * self.cols..(r + 1) * self.cols];
                out.push(row.iter().zip(x).map(|(a, b)| a * b).sum());
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        self.apply_into(x, &mut out);
        out
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("parameter {key:?} already exists with shape {existing:?}, requested {requested:?}")]
    ShapeConflict {
        key: String,
        existing: (usize, usize),
        requested: (usize, usize),
    },
}

/// Shared parameter list addressed by edge labels.
///
/// Entry 0 is always the scalar identity weight and is never trainable.
/// Entries may carry a name so that unfolding several samples against the same
/// store reuses one label per named parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightStore {
    value_dim: usize,
    weights: Vec<Tensor>,
    trainable: Vec<bool>,
    names: Vec<Option<String>>,
    by_name: HashMap<String, Label>,
}

impl WeightStore {
    pub fn new(value_dim: usize) -> Self {
        WeightStore {
            value_dim,
            weights: vec![Tensor::scalar(1.0)],
            trainable: vec![false],
            names: vec![None],
            by_name: HashMap::new(),
        }
    }

    /// Identity at 0 followed by trainable scalars `w1, w2, ...`.
    pub fn from_scalars(value_dim: usize, scalars: &[f64]) -> Self {
        let mut s = WeightStore::new(value_dim);
        for &v in scalars {
            s.push(Tensor::scalar(v), true, None);
        }
        s
    }

    pub fn value_dim(&self) -> usize {
        self.value_dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, label: Label) -> Option<&Tensor> {
        self.weights.get(label.0)
    }

    pub fn weights(&self) -> &[Tensor] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Tensor] {
        &mut self.weights
    }

    pub fn is_trainable(&self, label: Label) -> bool {
        self.trainable.get(label.0).copied().unwrap_or(false)
    }

    pub fn trainable_mask(&self) -> &[bool] {
        &self.trainable
    }

    pub fn name(&self, label: Label) -> Option<&str> {
        self.names.get(label.0).and_then(|n| n.as_deref())
    }

    pub fn lookup(&self, name: &str) -> Option<Label> {
        self.by_name.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = (Label, &str)> + '_ {
        self.names
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.as_deref().map(|n| (Label(i), n)))
    }

    /// Appends a tensor; index 0 stays the identity.
    pub fn push(&mut self, tensor: Tensor, trainable: bool, name: Option<String>) -> Label {
        let label = Label(self.weights.len());
        if let Some(n) = &name {
            self.by_name.insert(n.clone(), label);
        }
        self.weights.push(tensor);
        self.trainable.push(trainable);
        self.names.push(name);
        label
    }

    /// Returns the label registered under `name`, creating it if needed.
    ///
    /// New entries are initialised uniformly on [-1, 1] from a generator seeded
    /// by `(seed, name)`, so the value never depends on creation order.
    pub fn param(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        seed: u64,
    ) -> Result<Label, WeightError> {
        if let Some(&l) = self.by_name.get(name) {
            let existing = self.weights[l.0].shape();
            if existing != (rows, cols) {
                return Err(WeightError::ShapeConflict {
                    key: name.to_string(),
                    existing,
                    requested: (rows, cols),
                });
            }
            return Ok(l);
        }
        let mut rng = crate::rng::keyed(seed, name);
        let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Ok(self.push(Tensor::from_rows(rows, cols, data), true, Some(name.to_string())))
    }

    /// Copy with every trainable component redrawn uniformly on [-1, 1].
    pub fn resampled<R: Rng>(&self, rng: &mut R) -> WeightStore {
        let mut out = self.clone();
        for (t, &train) in out.weights.iter_mut().zip(&self.trainable) {
            if train {
                for v in &mut t.data {
                    *v = rng.gen_range(-1.0..=1.0);
                }
            }
        }
        out
    }

    pub(crate) fn from_parts(
        value_dim: usize,
        weights: Vec<Tensor>,
        trainable: Vec<bool>,
        names: Vec<Option<String>>,
    ) -> Self {
        let by_name = names
            .iter()
            .enumerate()
            .filter_map(|(i, n)| n.clone().map(|n| (n, Label(i))))
            .collect();
        WeightStore { value_dim, weights, trainable, names, by_name }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_reserved() {
        let s = WeightStore::new(3);
        assert_eq!(s.len(), 1);
        assert!(!s.is_trainable(Label(0)));
        assert_eq!(s.get(Label(0)).unwrap().apply(&[1.0, -2.0, 3.0]), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn params_are_shared_by_name() {
        let mut s = WeightStore::new(2);
        let a = s.param("w1", 2, 2, 7).unwrap();
        let b = s.param("w2", 2, 2, 7).unwrap();
        assert_ne!(a, b);
        assert_eq!(s.param("w1", 2, 2, 7).unwrap(), a);
        assert!(s.param("w1", 1, 2, 7).is_err());
    }

    #[test]
    fn param_values_ignore_creation_order() {
        let mut s1 = WeightStore::new(2);
        s1.param("a", 2, 2, 3).unwrap();
        s1.param("b", 2, 2, 3).unwrap();
        let mut s2 = WeightStore::new(2);
        s2.param("b", 2, 2, 3).unwrap();
        s2.param("a", 2, 2, 3).unwrap();
        let get = |s: &WeightStore, n| s.get(s.lookup(n).unwrap()).unwrap().clone();
        assert_eq!(get(&s1, "a"), get(&s2, "a"));
        assert_eq!(get(&s1, "b"), get(&s2, "b"));
    }

    #[test]
    fn matrix_apply() {
        let t = Tensor::from_rows(2, 3, vec![1.0, 0.0, 2.0, 0.0, 1.0, -1.0]);
        assert_eq!(t.apply(&[1.0, 2.0, 3.0]), vec![7.0, -1.0]);
        assert_eq!(t.output_len(3), Some(2));
        assert_eq!(t.output_len(2), None);
    }
}
