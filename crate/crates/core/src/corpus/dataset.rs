//! Labeled sparse datasets and their line-oriented text format.
//!
//! One document per line: `LABEL idx:val idx:val ...` with 0-based indices in
//! strictly increasing order and strictly positive values. Blank lines and
//! lines whose first non-blank character is `#` are skipped. A line holding
//! only a label is an all-zero document.

use std::io::{BufRead, Write};

use indexmap::IndexSet;

use crate::error::{Error, Result};
use crate::state::FeatureVector;

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub label: String,
    pub features: FeatureVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    documents: Vec<Document>,
    classes: IndexSet<String>,
}

impl LabeledDataset {
    pub fn new(dim: usize, documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::InvalidArgument("dataset has no documents".into()));
        }
        let mut classes = IndexSet::new();
        for doc in &documents {
            if doc.label.is_empty() {
                return Err(Error::InvalidArgument("empty class label".into()));
            }
            if doc.features.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: doc.features.dim(),
                });
            }
            classes.insert(doc.label.clone());
        }
        Ok(LabeledDataset {
            dim,
            documents,
            classes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Class labels in order of first appearance.
    pub fn labels(&self) -> Vec<String> {
        self.classes.iter().cloned().collect()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.get_index_of(label)
    }

    /// Documents of class `k` in dataset order.
    pub fn class_documents(&self, k: usize) -> impl Iterator<Item = &FeatureVector> {
        let label = &self.classes[k];
        self.documents
            .iter()
            .filter(move |d| &d.label == label)
            .map(|d| &d.features)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for doc in &self.documents {
            counts[self.classes.get_index_of(&doc.label).expect("indexed")] += 1;
        }
        counts
    }

    /// The same documents in a feature space of size `dim >= self.dim()`.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim,
            });
        }
        let documents = self
            .documents
            .iter()
            .map(|d| {
                Ok(Document {
                    label: d.label.clone(),
                    features: d.features.with_dim(dim)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(LabeledDataset {
            dim,
            documents,
            classes: self.classes.clone(),
        })
    }

    /// Documents at `indices`, in the given order. Class indices are
    /// reassigned by first appearance within the subset.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let docs = indices.iter().map(|&i| self.documents[i].clone()).collect();
        LabeledDataset::new(self.dim, docs)
    }

    /// Writes the dataset in the sparse text format.
    pub fn write_sparse<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for doc in &self.documents {
            out.write_all(doc.label.as_bytes())?;
            for (i, v) in doc.features.entries() {
                write!(out, " {i}:{v}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_sparse_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_sparse(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("labels are UTF-8")
    }
}

/// Parses the sparse text format, inferring `dim` as one past the largest index.
pub fn parse_sparse<R: BufRead>(reader: R) -> Result<LabeledDataset> {
    parse_sparse_with_dim(reader, None)
}

pub fn parse_sparse_str(text: &str) -> Result<LabeledDataset> {
    parse_sparse(text.as_bytes())
}

/// Parses the sparse text format; `dim` overrides the inferred dimension and
/// must cover every index in the file.
pub fn parse_sparse_with_dim<R: BufRead>(reader: R, dim: Option<usize>) -> Result<LabeledDataset> {
    let mut rows: Vec<(String, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index: Option<usize> = None;

    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let label = tokens.next().expect("nonempty line has a token");
        if label.contains(':') {
            return Err(parse_error(
                line_no,
                format!("expected a label, found {label:?}"),
            ));
        }
        let mut features = Vec::new();
        let mut last: Option<usize> = None;
        for token in tokens {
            let (idx, val) = token.split_once(':').ok_or_else(|| {
                parse_error(line_no, format!("expected idx:val, found {token:?}"))
            })?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_error(line_no, format!("bad feature index {idx:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_error(line_no, format!("bad feature value {val:?}")))?;
            if !val.is_finite() || val <= 0.0 {
                return Err(parse_error(
                    line_no,
                    format!("feature value must be positive, got {val}"),
                ));
            }
            if let Some(prev) = last {
                if idx <= prev {
                    return Err(parse_error(
                        line_no,
                        format!("feature indices must strictly increase ({idx} after {prev})"),
                    ));
                }
            }
            if let Some(d) = dim {
                if idx >= d {
                    return Err(parse_error(
                        line_no,
                        format!("feature index {idx} out of range for dimension {d}"),
                    ));
                }
            }
            last = Some(idx);
            features.push((idx, val));
        }
        if let Some(l) = last {
            max_index = Some(max_index.map_or(l, |m| m.max(l)));
        }
        rows.push((label.to_string(), features));
    }

    let dim = match (dim, max_index) {
        (Some(d), _) => d,
        (None, Some(m)) => m + 1,
        (None, None) => {
            return Err(Error::InvalidArgument("dataset has no features".into()));
        }
    };
    let documents = rows
        .into_iter()
        .map(|(label, features)| {
            Ok(Document {
                label,
                features: FeatureVector::new(dim, features)?,
            })
        })
        .collect::<Result<_>>()?;
    LabeledDataset::new(dim, documents)
}

fn parse_error(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_a_line() {
        let ds = parse_sparse_str("sports 0:2 3:1\n").unwrap();
        assert_eq!(ds.dim(), 4);
        let doc = &ds.documents()[0];
        assert_eq!(doc.label, "sports");
        assert_eq!(doc.features.entries(), &[(0, 2.0), (3, 1.0)]);
    }

    #[test]
    fn class_index_by_first_appearance() {
        let ds = parse_sparse_str("a 0:1\nb 1:1\na 1:3\n").unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.class_index("a"), Some(0));
        assert_eq!(ds.class_index("b"), Some(1));
        assert_eq!(ds.class_counts(), vec![2, 1]);
    }

    #[test]
    fn comments_blank_and_label_only_lines() {
        let ds = parse_sparse_str("# header\n\n  a 0:1\nb\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert!(ds.documents()[1].features.is_zero());
    }

    #[test]
    fn rejects_malformed_lines() {
        let cases = [
            ("a 3:1 1:2", 1),
            ("a 0:1\na 1:1 1:2", 2),
            ("a 0:0", 1),
            ("a 0:-1", 1),
            ("a 0:x", 1),
            ("a x:1", 1),
            ("a 0", 1),
            ("\n# c\n0:1", 3),
            ("a 0:inf", 1),
        ];
        for (text, line) in cases {
            match parse_sparse_str(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn dim_override() {
        let ds = parse_sparse_with_dim("a 0:1\n".as_bytes(), Some(5)).unwrap();
        assert_eq!(ds.dim(), 5);
        assert!(parse_sparse_with_dim("a 5:1\n".as_bytes(), Some(5)).is_err());
        assert!(ds.with_dim(3).is_err());
        assert_eq!(ds.with_dim(7).unwrap().dim(), 7);
    }

    #[test]
    fn empty_inputs() {
        assert!(parse_sparse_str("").is_err());
        assert!(parse_sparse_str("a\n").is_err());
    }

    fn arb_dataset() -> impl Strategy<Value = LabeledDataset> {
        let doc = (
            prop::sample::select(vec!["a", "b", "c-1", "x_y"]),
            prop::collection::btree_map(0usize..20, 1e-6f64..1e6, 1..6),
        );
        prop::collection::vec(doc, 1..20).prop_map(|docs| {
            let docs = docs
                .into_iter()
                .map(|(l, f)| Document {
                    label: l.to_string(),
                    features: FeatureVector::new(20, f).unwrap(),
                })
                .collect();
            LabeledDataset::new(20, docs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(ds in arb_dataset()) {
            let text = ds.to_sparse_string();
            let back = parse_sparse_with_dim(text.as_bytes(), Some(ds.dim())).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}
