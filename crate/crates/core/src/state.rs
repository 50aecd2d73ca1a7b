//! Feature vectors, class statistics and the density operators built from them.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{SymMatrix, PSD_REL_TOL};

const TRACE_TOL: f64 = 1e-12;
const UNIT_NORM_TOL: f64 = 1e-12;

/// Sparse nonnegative feature values of one document.
///
/// Entries are kept sorted by index and only strictly positive values are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    /// Builds a vector from `(index, value)` pairs in any order.
    ///
    /// Zero values are dropped. Negative or non-finite values, indices outside
    /// `dim` and repeated indices are rejected.
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "feature dimension must be positive".into(),
            ));
        }
        let mut entries: Vec<(usize, f64)> = entries.into_iter().collect();
        entries.sort_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "duplicate feature index {}",
                    w[0].0
                )));
            }
        }
        for &(i, v) in &entries {
            if i >= dim {
                return Err(Error::InvalidArgument(format!(
                    "feature index {i} out of range for dimension {dim}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "feature {i} has invalid value {v}"
                )));
            }
        }
        entries.retain(|&(_, v)| v > 0.0);
        Ok(FeatureVector { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    /// Same entries in a larger feature space.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        if let Some(&(max, _)) = self.entries.last() {
            if max >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: max + 1,
                });
            }
        }
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "feature dimension must be positive".into(),
            ));
        }
        Ok(FeatureVector {
            dim,
            entries: self.entries.clone(),
        })
    }

    /// Multiplies every value by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0);
        FeatureVector {
            dim: self.dim,
            entries: self.entries.iter().map(|&(i, v)| (i, c * v)).collect(),
        }
    }
}

/// Per-class feature statistics: the document frequency of every feature.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassStatVector {
    label: String,
    values: Vec<f64>,
}

impl ClassStatVector {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let label = label.into();
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "class vector has no components".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "class {label:?} vector has a negative or non-finite component"
            )));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::DegenerateClass { label });
        }
        Ok(ClassStatVector { label, values })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// For every feature, the number of documents in which it is nonzero.
pub fn feature_statistics<'a>(
    label: &str,
    docs: impl IntoIterator<Item = &'a FeatureVector>,
    dim: usize,
) -> Result<ClassStatVector> {
    let mut counts = vec![0.0; dim];
    let mut seen = 0usize;
    for doc in docs {
        check_dim(dim, doc.dim())?;
        for &(i, _) in doc.entries() {
            counts[i] += 1.0;
        }
        seen += 1;
    }
    if seen == 0 {
        return Err(Error::EmptyClass {
            label: label.to_string(),
        });
    }
    ClassStatVector::new(label, counts)
}

/// A unit-norm real vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
}

impl StateVector {
    /// Normalizes `values` to unit length.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument(
                "state vector has no components".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "state vector has a non-finite component".into(),
            ));
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateDocument);
        }
        Ok(StateVector {
            values: values.into_iter().map(|v| v / norm).collect(),
        })
    }

    /// Accepts an already-normalized vector without rescaling it.
    pub fn from_unit(values: Vec<f64>) -> Result<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if values.is_empty() || (norm - 1.0).abs() > UNIT_NORM_TOL {
            return Err(Error::InvalidArgument(format!(
                "state vector norm {norm} is not 1"
            )));
        }
        Ok(StateVector { values })
    }

    /// `(cos theta, sin theta)`
    pub fn at_angle(theta: f64) -> Self {
        StateVector {
            values: vec![theta.cos(), theta.sin()],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, other: &StateVector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }
}

/// Dense L2-normalized copy of a document's raw feature values.
pub fn normalize_document(doc: &FeatureVector) -> Result<StateVector> {
    if doc.is_zero() {
        return Err(Error::DegenerateDocument);
    }
    StateVector::normalized(doc.to_dense())
}

/// Symmetric PSD matrix with unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    matrix: SymMatrix,
    rank_hint: Option<usize>,
}

impl DensityOperator {
    /// `|v><v| / <v|v>`
    pub fn pure(v: &[f64]) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "vector has a non-finite component".into(),
            ));
        }
        let norm2: f64 = v.iter().map(|x| x * x).sum();
        if norm2 == 0.0 {
            return Err(Error::DegenerateClass {
                label: String::new(),
            });
        }
        let n = v.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = v[i] * v[j] / norm2;
            }
        }
        Ok(DensityOperator {
            matrix: SymMatrix::from_row_major(n, data)?,
            rank_hint: Some(1),
        })
    }

    /// Validates an arbitrary (possibly mixed) state.
    pub fn from_matrix(matrix: SymMatrix) -> Result<Self> {
        let tr = matrix.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!(
                "density operator trace {tr} is not 1"
            )));
        }
        let min = matrix.min_eigenvalue()?;
        if min < -PSD_REL_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                max_eigenvalue: f64::NAN,
            });
        }
        Ok(DensityOperator {
            matrix,
            rank_hint: None,
        })
    }

    /// Convex mixture `sum w_k rho_k` with weights summing to one.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::InvalidArgument("empty mixture".into()));
        };
        let mut m = SymMatrix::zeros(first.dim());
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "negative mixture weight {w}"
                )));
            }
            m = m.add_scaled(rho.matrix(), *w)?;
        }
        Self::from_matrix(m)
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Some(1)` for states built from a single vector.
    pub fn rank_hint(&self) -> Option<usize> {
        self.rank_hint
    }
}

/// Rank-one density operator of a class statistics vector.
pub fn density_from_vector(v: &ClassStatVector) -> Result<DensityOperator> {
    DensityOperator::pure(v.values()).map_err(|e| match e {
        Error::DegenerateClass { .. } => Error::DegenerateClass {
            label: v.label().to_string(),
        },
        other => other,
    })
}

/// Rank-one density operator of a unit state.
pub fn density_from_state(v: &StateVector) -> DensityOperator {
    DensityOperator::pure(v.values()).expect("unit vectors are never zero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;
    use proptest::prelude::*;

    fn fv(dim: usize, e: &[(usize, f64)]) -> FeatureVector {
        FeatureVector::new(dim, e.iter().copied()).unwrap()
    }

    #[test]
    fn document_frequency_counts() {
        let docs = [
            fv(5, &[(0, 2.0), (2, 1.0)]),
            fv(5, &[(0, 1.0)]),
            fv(5, &[(2, 4.0), (4, 1.0)]),
        ];
        let s = feature_statistics("a", &docs, 5).unwrap();
        assert_eq!(s.values(), &[2.0, 0.0, 2.0, 0.0, 1.0]);

        let s = feature_statistics("a", &[fv(2, &[(0, 7.0)])], 2).unwrap();
        assert_eq!(s.values(), &[1.0, 0.0]);

        let twin = fv(2, &[(1, 1.0)]);
        let s = feature_statistics("a", [&twin, &twin], 2).unwrap();
        assert_eq!(s.values(), &[0.0, 2.0]);
    }

    #[test]
    fn statistics_errors() {
        let none: [FeatureVector; 0] = [];
        assert_eq!(
            feature_statistics("x", &none, 3).unwrap_err().code(),
            "empty-class"
        );
        let blank = fv(3, &[]);
        assert_eq!(
            feature_statistics("x", [&blank], 3).unwrap_err().code(),
            "degenerate-class"
        );
        let wrong = fv(4, &[(0, 1.0)]);
        assert_eq!(
            feature_statistics("x", [&wrong], 3).unwrap_err().code(),
            "dimension-mismatch"
        );
    }

    #[test]
    fn density_examples() {
        let v = ClassStatVector::new("a", vec![2.0, 0.0, 2.0, 0.0, 1.0]).unwrap();
        let rho = density_from_vector(&v).unwrap();
        let m = rho.matrix();
        let diag: Vec<f64> = (0..5).map(|i| m.get(i, i)).collect();
        let expected = [4.0 / 9.0, 0.0, 4.0 / 9.0, 0.0, 1.0 / 9.0];
        for (a, b) in diag.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((m.get(0, 2) - 4.0 / 9.0).abs() < 1e-15);
        assert!((m.get(0, 4) - 2.0 / 9.0).abs() < 1e-15);
        assert!((m.get(2, 4) - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(rho.rank_hint(), Some(1));

        let e1 = DensityOperator::pure(&[1.0, 0.0]).unwrap();
        assert_eq!(e1.matrix(), &SymMatrix::diagonal(&[1.0, 0.0]));

        let half = DensityOperator::pure(&[1.0, 1.0]).unwrap();
        assert_eq!(
            half.matrix(),
            &SymMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
        );
    }

    #[test]
    fn zero_class_vector_rejected() {
        let err = ClassStatVector::new("z", vec![0.0, 0.0]).unwrap_err();
        assert_eq!(err.code(), "degenerate-class");
    }

    #[test]
    fn normalize_examples() {
        let s = normalize_document(&fv(2, &[(0, 3.0), (1, 4.0)])).unwrap();
        assert!((s.values()[0] - 0.6).abs() < 1e-15 && (s.values()[1] - 0.8).abs() < 1e-15);
        let s = normalize_document(&fv(3, &[(2, 5.0)])).unwrap();
        assert_eq!(s.values(), &[0.0, 0.0, 1.0]);
        let s = normalize_document(&fv(2, &[(0, 1.0), (1, 1.0)])).unwrap();
        assert!((s.values()[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(
            normalize_document(&fv(2, &[])).unwrap_err().code(),
            "degenerate-document"
        );
    }

    #[test]
    fn feature_vector_validation() {
        assert!(FeatureVector::new(2, [(2, 1.0)]).is_err());
        assert!(FeatureVector::new(2, [(0, -1.0)]).is_err());
        assert!(FeatureVector::new(2, [(0, 1.0), (0, 2.0)]).is_err());
        assert_eq!(FeatureVector::new(3, [(1, 0.0)]).unwrap().entries(), &[]);
    }

    #[test]
    fn mixed_state_validation() {
        let a = DensityOperator::pure(&[1.0, 0.0]).unwrap();
        let b = DensityOperator::pure(&[0.0, 1.0]).unwrap();
        let mix = DensityOperator::mixture(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert_eq!(mix.matrix(), &SymMatrix::diagonal(&[0.5, 0.5]));
        assert!(DensityOperator::from_matrix(SymMatrix::diagonal(&[1.5, -0.5])).is_err());
        assert!(DensityOperator::from_matrix(SymMatrix::diagonal(&[0.5, 0.4])).is_err());
    }

    fn arb_docs() -> impl Strategy<Value = Vec<Vec<(usize, f64)>>> {
        prop::collection::vec(
            prop::collection::btree_map(0usize..8, 0.1f64..10.0, 1..5)
                .prop_map(|m| m.into_iter().collect::<Vec<_>>()),
            1..10,
        )
    }

    proptest! {
        #[test]
        fn pure_density_is_unit_trace_rank_one(v in prop::collection::vec(0.0f64..5.0, 1..10)) {
            prop_assume!(v.iter().any(|&x| x > 1e-3));
            let rho = DensityOperator::pure(&v).unwrap();
            prop_assert!((rho.matrix().trace() - 1.0).abs() < 1e-12);
            let es = eigh(rho.matrix()).unwrap();
            prop_assert!((es.eigenvalues[0] - 1.0).abs() < 1e-10);
            prop_assert!(es.eigenvalues[1..].iter().all(|w| w.abs() < 1e-10));
        }

        #[test]
        fn statistics_ignore_order_and_scale(docs in arb_docs(), c in 0.01f64..100.0) {
            let docs: Vec<FeatureVector> = docs.iter().map(|d| fv(8, d)).collect();
            let base = feature_statistics("k", &docs, 8);
            let mut rev = docs.clone();
            rev.reverse();
            let scaled: Vec<FeatureVector> = docs.iter().map(|d| d.scaled(c)).collect();
            let base = base.unwrap();
            prop_assert_eq!(&base, &feature_statistics("k", &rev, 8).unwrap());
            prop_assert_eq!(&base, &feature_statistics("k", &scaled, 8).unwrap());
        }
    }
}
