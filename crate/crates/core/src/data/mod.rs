//! Dataset loading, validation and bundled samples.
//!
//! Graph datasets are JSON lines, one [`InputSample`] per line. Knowledge
//! bases are TSV files with `subject relation object label` columns; blank
//! lines and lines starting with `#` are skipped.

mod synth;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::templates::{InputSample, Triple, TripleStore};

pub use synth::{gen_synthetic, Synthetic};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("line {line}: feature dimension {got} differs from {expected}")]
    DimMismatch { line: usize, expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

/// Either a list of graph samples or one knowledge base.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Graphs(Vec<InputSample>),
    Triples(TripleStore),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Graphs(g) => g.len(),
            Dataset::Triples(kb) => kb.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Vec<f64> {
        match self {
            Dataset::Graphs(g) => g.iter().map(|s| s.label).collect(),
            Dataset::Triples(kb) => kb.triples.iter().map(|t| t.label).collect(),
        }
    }
}

fn read(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

pub fn load_graphs(path: impl AsRef<Path>) -> Result<Vec<InputSample>, DataError> {
    parse_graphs(&read(path.as_ref())?)
}

pub fn parse_graphs(text: &str) -> Result<Vec<InputSample>, DataError> {
    let mut out = Vec::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let sample: InputSample = serde_json::from_str(line)
            .map_err(|e| DataError::ParseError { line: line_no, message: e.to_string() })?;
        let d = sample
            .validate()
            .map_err(|e| DataError::Invalid { line: line_no, message: e.to_string() })?;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(DataError::DimMismatch { line: line_no, expected, got: d })
            }
            _ => {}
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn graphs_to_jsonl(samples: &[InputSample]) -> String {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("samples serialize"));
        out.push('\n');
    }
    out
}

pub fn load_triples(path: impl AsRef<Path>) -> Result<TripleStore, DataError> {
    parse_triples(&read(path.as_ref())?)
}

pub fn parse_triples(text: &str) -> Result<TripleStore, DataError> {
    let mut triples = Vec::new();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(DataError::ParseError {
                line: line_no,
                message: format!("expected 4 tab-separated columns, found {}", cols.len()),
            });
        }
        let label: f64 = cols[3].trim().parse().map_err(|_| DataError::ParseError {
            line: line_no,
            message: format!("label {:?} is not a number", cols[3]),
        })?;
        triples.push(Triple {
            subject: cols[0].to_string(),
            relation: cols[1].to_string(),
            object: cols[2].to_string(),
            label,
        });
    }
    TripleStore::from_triples(triples).map_err(|message| DataError::Invalid { line: last_line, message })
}

pub fn triples_to_tsv(kb: &TripleStore) -> String {
    let mut out = String::from("# subject\trelation\tobject\tlabel\n");
    for t in &kb.triples {
        writeln!(out, "{}\t{}\t{}\t{}", t.subject, t.relation, t.object, t.label).expect("string write");
    }
    out
}

/// Loads a graph dataset, or a knowledge base when the path ends in `.tsv`.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "tsv") {
        load_triples(path).map(Dataset::Triples)
    } else {
        load_graphs(path).map(Dataset::Graphs)
    }
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let text = match dataset {
        Dataset::Graphs(g) => graphs_to_jsonl(g),
        Dataset::Triples(kb) => triples_to_tsv(kb),
    };
    std::fs::write(path.as_ref(), text)
        .map_err(|source| DataError::Io { path: path.as_ref().to_path_buf(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DatasetKind {
    Graphs,
    Triples,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelSummary {
    pub positives: usize,
    pub negatives: usize,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetManifest {
    pub kind: DatasetKind,
    pub path: PathBuf,
    pub sample_count: usize,
    /// `None` for knowledge bases, which carry no features.
    pub feature_dim: Option<usize>,
    pub label_summary: LabelSummary,
}

pub fn manifest(path: impl AsRef<Path>) -> Result<DatasetManifest, DataError> {
    let path = path.as_ref();
    let ds = load_dataset(path)?;
    let labels = ds.labels();
    let positives = labels.iter().filter(|&&l| l >= 0.5).count();
    let (kind, feature_dim) = match &ds {
        Dataset::Graphs(g) => (DatasetKind::Graphs, g.first().and_then(|s| s.nodes.first()).map(|n| n.features.len())),
        Dataset::Triples(_) => (DatasetKind::Triples, None),
    };
    Ok(DatasetManifest {
        kind,
        path: path.to_path_buf(),
        sample_count: ds.len(),
        feature_dim,
        label_summary: LabelSummary {
            positives,
            negatives: labels.len() - positives,
            mean: if labels.is_empty() { 0.0 } else { labels.iter().sum::<f64>() / labels.len() as f64 },
        },
    })
}

/// Atom vocabulary used for molecule features.
pub const ATOM_TYPES: [&str; 4] = ["C", "H", "O", "N"];

/// Feature vector of an atom type: one-hot over [`ATOM_TYPES`], truncated or
/// zero-padded to `dim`.
///
/// With `dim == 1` a one-hot code would erase atom identity, so the scalar is
/// `ln p` for the type's prime `p` (2, 3, 5, 7). Logarithms of distinct primes
/// have no integer relation, so different multisets of atoms never produce
/// the same weighted sum.
pub fn atom_features(kind: &str, dim: usize) -> Vec<f64> {
    const PRIMES: [f64; 4] = [2.0, 3.0, 5.0, 7.0];
    let idx = ATOM_TYPES.iter().position(|&t| t == kind);
    if dim == 1 {
        return vec![idx.map_or(0.0, |i| PRIMES[i].ln())];
    }
    let mut v = vec![0.0; dim];
    if let Some(i) = idx.filter(|&i| i < dim) {
        v[i] = 1.0;
    }
    v
}

/// Replaces every node's features by [`atom_features`] of its type.
pub fn refeaturize(samples: &[InputSample], dim: usize) -> Vec<InputSample> {
    samples
        .iter()
        .map(|s| {
            let mut s = s.clone();
            for n in &mut s.nodes {
                n.features = atom_features(&n.kind, dim);
            }
            s
        })
        .collect()
}

/// Small datasets shipped with the crate.
pub mod bundled {
    use super::*;

    const METHANE: &str = include_str!("../../assets/methane.jsonl");
    const TOY_MOLECULES: &str = include_str!("../../assets/toy_molecules.jsonl");
    const KINSHIPS_SAMPLE: &str = include_str!("../../assets/kinships_sample.tsv");

    /// Methane with explicit hydrogens, features for `dim`.
    pub fn methane(dim: usize) -> InputSample {
        let s = parse_graphs(METHANE).expect("bundled methane parses");
        refeaturize(&s, dim).remove(0)
    }

    /// Ten small organic molecules, labeled 1 when they contain oxygen.
    pub fn toy_molecules(dim: usize) -> Vec<InputSample> {
        refeaturize(&parse_graphs(TOY_MOLECULES).expect("bundled molecules parse"), dim)
    }

    /// Kinship-style knowledge base over 14 people.
    pub fn kinships_sample() -> TripleStore {
        parse_triples(KINSHIPS_SAMPLE).expect("bundled knowledge base parses")
    }

    pub fn kinships_sample_tsv() -> &'static str {
        KINSHIPS_SAMPLE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane_has_five_atoms_and_four_bonds() {
        let m = bundled::methane(3);
        assert_eq!(m.nodes.len(), 5);
        assert_eq!(m.edges.len(), 4);
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        assert!(parse_graphs("").unwrap().is_empty());
        assert!(parse_graphs("\n\n").unwrap().is_empty());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{}\n{{\"id\": \"x\", \"nodes\": [\n", graphs_to_jsonl(&[bundled::methane(3)]).trim());
        match parse_graphs(&text) {
            Err(DataError::ParseError { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mixed_dimensions_are_rejected() {
        let text = graphs_to_jsonl(&[bundled::methane(3), bundled::methane(2)]);
        assert!(matches!(parse_graphs(&text), Err(DataError::DimMismatch { line: 2, .. })));
    }

    #[test]
    fn triples_round_trip_and_reject_duplicates() {
        let kb = bundled::kinships_sample();
        assert_eq!(kb.entities.len(), 14);
        assert_eq!(parse_triples(&triples_to_tsv(&kb)).unwrap(), kb);
        let dup = "a\tr\tb\t1\na\tr\tb\t0\n";
        assert!(matches!(parse_triples(dup), Err(DataError::Invalid { .. })));
        assert!(matches!(parse_triples("a\tr\n"), Err(DataError::ParseError { line: 1, .. })));
    }

    #[test]
    fn atom_feature_encodings() {
        assert_eq!(atom_features("H", 3), vec![0.0, 1.0, 0.0]);
        assert_eq!(atom_features("N", 3), vec![0.0, 0.0, 0.0]);
        assert_eq!(atom_features("N", 5), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(atom_features("C", 1), vec![std::f64::consts::LN_2]);
        assert_eq!(atom_features("O", 1), vec![5f64.ln()]);
    }
}
