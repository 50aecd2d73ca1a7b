//! N-hypothesis detection.
//!
//! A [`Measurement`] is a family of PSD operators summing to the identity. Its
//! quality is the Bayes average cost
//! `sum_i sum_j xi_j K[i][j] Tr(rho_j P_i)`, see [`average_cost`].
//!
//! Two constructive strategies are provided:
//!
//! - the pretty-good (square-root) measurement
//!   `mu_k = S^{-1/2} xi_k rho_k S^{-1/2}` with `S = sum_k xi_k rho_k`,
//!   completed by a residual element on the complement of `supp(S)`;
//! - one-vs-rest composition of binary detectors, predicting by the largest
//!   per-class acceptance score.

use crate::binary::{train_binary_labeled, BinaryModel};
use crate::corpus::dataset::LabeledDataset;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{
    apply_sign_convention, eigh, frobenius, inv_sqrt_psd, support_rank, SymMatrix,
};
use crate::state::{
    density_from_state, density_from_vector, feature_statistics, DensityOperator, StateVector,
};

const PRIOR_SUM_TOL: f64 = 1e-12;
const COMPLETENESS_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const PROJECTIVE_TOL: f64 = 1e-10;
const RANK_ONE_RATIO: f64 = 1e-8;

/// Priors and states of the competing hypotheses.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisSet {
    labels: Vec<String>,
    priors: Vec<f64>,
    states: Vec<DensityOperator>,
    pure_vectors: Option<Vec<StateVector>>,
}

impl HypothesisSet {
    pub fn new(
        labels: Vec<String>,
        priors: Vec<f64>,
        states: Vec<DensityOperator>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("no hypotheses".into()));
        }
        if priors.len() != states.len() || labels.len() != states.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels, {} priors and {} states",
                labels.len(),
                priors.len(),
                states.len()
            )));
        }
        if let Some(p) = priors.iter().find(|p| p.is_nan() || **p <= 0.0) {
            return Err(Error::InvalidPrior(*p));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "priors sum to {total}, not 1"
            )));
        }
        let dim = states[0].dim();
        for s in &states {
            check_dim(dim, s.dim())?;
        }
        Ok(HypothesisSet {
            labels,
            priors,
            states,
            pure_vectors: None,
        })
    }

    /// Hypotheses given by unit vectors.
    pub fn from_pure_states(
        labels: Vec<String>,
        priors: Vec<f64>,
        vectors: Vec<StateVector>,
    ) -> Result<Self> {
        let states = vectors.iter().map(density_from_state).collect();
        let mut h = Self::new(labels, priors, states)?;
        h.pure_vectors = Some(vectors);
        Ok(h)
    }

    /// Unlabeled hypotheses `0, 1, ...` for quick experiments.
    pub fn from_pure_unlabeled(priors: Vec<f64>, vectors: Vec<StateVector>) -> Result<Self> {
        let labels = (0..vectors.len()).map(|k| k.to_string()).collect();
        Self::from_pure_states(labels, priors, vectors)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    /// The unit vectors when every hypothesis is a pure state.
    pub fn pure_vectors(&self) -> Option<&[StateVector]> {
        self.pure_vectors.as_deref()
    }
}

/// One rank-one state per class from document frequencies, priors from class sizes.
pub fn build_hypotheses(ds: &LabeledDataset) -> Result<HypothesisSet> {
    let n = ds.n_classes();
    if n < 2 {
        return Err(Error::TooFewClasses { found: n });
    }
    let labels = ds.labels();
    let total = ds.len() as f64;
    let priors = ds
        .class_counts()
        .iter()
        .map(|&c| c as f64 / total)
        .collect();
    let mut states = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for (k, label) in labels.iter().enumerate() {
        let stats = feature_statistics(label, ds.class_documents(k), ds.dim())?;
        states.push(density_from_vector(&stats)?);
        vectors.push(StateVector::normalized(stats.values().to_vec())?);
    }
    let mut h = HypothesisSet::new(labels, priors, states)?;
    h.pure_vectors = Some(vectors);
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementKind {
    /// Orthogonal projectors.
    Projective,
    /// General positive operators.
    Povm,
}

/// A resolution of the identity: one element per hypothesis plus an
/// optional residual element that no hypothesis claims.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    elements: Vec<SymMatrix>,
    residual: Option<SymMatrix>,
    kind: MeasurementKind,
}

impl Measurement {
    /// Validates positivity and completeness and classifies the measurement.
    pub fn new(elements: Vec<SymMatrix>, residual: Option<SymMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidArgument("measurement has no elements".into()));
        };
        let dim = first.dim();
        let mut sum = SymMatrix::zeros(dim);
        for e in elements.iter().chain(residual.as_ref()) {
            check_dim(dim, e.dim())?;
            let min = e.min_eigenvalue()?;
            if min < -PSD_TOL {
                return Err(Error::NotPsd {
                    min_eigenvalue: min,
                    max_eigenvalue: f64::NAN,
                });
            }
            sum = sum.add(e)?;
        }
        let defect = sum.distance(&SymMatrix::identity(dim))?;
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidArgument(format!(
                "measurement elements sum to identity only within {defect:e}"
            )));
        }
        let all: Vec<&SymMatrix> = elements.iter().chain(residual.as_ref()).collect();
        let projective = all.iter().all(|e| e.idempotency_defect() <= PROJECTIVE_TOL)
            && all.iter().enumerate().all(|(i, a)| {
                all[i + 1..]
                    .iter()
                    .all(|b| frobenius(&a.product(b).expect("same dim")) <= PROJECTIVE_TOL)
            });
        Ok(Measurement {
            elements,
            residual,
            kind: if projective {
                MeasurementKind::Projective
            } else {
                MeasurementKind::Povm
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Elements assigned to hypotheses, in hypothesis order.
    pub fn elements(&self) -> &[SymMatrix] {
        &self.elements
    }

    pub fn residual(&self) -> Option<&SymMatrix> {
        self.residual.as_ref()
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    /// Elements followed by the residual, if any.
    pub fn all_elements(&self) -> impl Iterator<Item = &SymMatrix> {
        self.elements.iter().chain(self.residual.as_ref())
    }

    /// `|| sum elements - I ||_F`
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = SymMatrix::zeros(self.dim());
        for e in self.all_elements() {
            sum = sum.add(e).expect("validated dims");
        }
        sum.distance(&SymMatrix::identity(self.dim()))
            .expect("same dim")
    }
}

/// Square-root ("pretty good") measurement of a hypothesis set.
pub fn pgm(h: &HypothesisSet) -> Result<Measurement> {
    let dim = h.dim();
    let mut mixture = SymMatrix::zeros(dim);
    for (p, rho) in h.priors().iter().zip(h.states()) {
        mixture = mixture.add_scaled(rho.matrix(), *p)?;
    }
    let root = inv_sqrt_psd(&mixture)?;

    let elements: Vec<SymMatrix> = match h.pure_vectors() {
        // xi |R psi><R psi| is PSD by construction
        Some(vectors) => vectors
            .iter()
            .zip(h.priors())
            .map(|(psi, p)| {
                let r_psi: Vec<f64> = root
                    .rows()
                    .map(|row| row.iter().zip(psi.values()).map(|(a, b)| a * b).sum())
                    .collect();
                SymMatrix::outer_scaled(&r_psi, *p)
            })
            .collect(),
        None => h
            .states()
            .iter()
            .zip(h.priors())
            .map(|(rho, p)| root.sandwich(&rho.matrix().scale(*p)))
            .collect::<Result<_>>()?,
    };

    // Rounding in S^{-1/2} grows with the condition number of S. A second
    // square-root pass with T = sum mu_k (T ~ projector) restores the
    // completeness relation to working precision; in exact arithmetic it is
    // the identity map.
    let mut total = SymMatrix::zeros(dim);
    for e in &elements {
        total = total.add(e)?;
    }
    let correction = inv_sqrt_psd(&total)?;
    let elements = elements
        .iter()
        .map(|e| correction.sandwich(e))
        .collect::<Result<Vec<_>>>()?;

    let residual = if support_rank(&mixture)? < dim {
        let mut rest = SymMatrix::identity(dim);
        for e in &elements {
            rest = rest.sub(e)?;
        }
        Some(rest)
    } else {
        None
    };
    Measurement::new(elements, residual)
}

/// Rank-one factor of a measurement element: `element = weight |direction><direction|`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementVector {
    pub direction: StateVector,
    pub weight: f64,
}

/// Factorizes every hypothesis element as a weighted projector onto one vector.
pub fn measurement_vectors(m: &Measurement) -> Result<Vec<MeasurementVector>> {
    m.elements()
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let es = eigh(e)?;
            let top = es.eigenvalues[0];
            let second = es.eigenvalues.get(1).copied().unwrap_or(0.0);
            if top.is_nan() || top <= 0.0 {
                return Err(Error::NotRankOne { index, ratio: 0.0 });
            }
            let ratio = second / top;
            if ratio > RANK_ONE_RATIO {
                return Err(Error::NotRankOne { index, ratio });
            }
            let mut v = es.eigenvectors[0].clone();
            apply_sign_convention(&mut v);
            Ok(MeasurementVector {
                direction: StateVector::normalized(v)?,
                weight: e.trace(),
            })
        })
        .collect()
}

/// Costs `K[i][j]` of choosing hypothesis `i` when `j` is true.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidCost("empty cost matrix".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidCost(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|x| !x.is_finite() || **x < 0.0) {
                return Err(Error::InvalidCost(format!(
                    "entry {bad} in row {i} is not a nonnegative number"
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(CostMatrix { n, entries })
    }

    /// `K[i][i] = 0`, `K[i][j] = 1` otherwise.
    pub fn zero_one(n: usize) -> Self {
        let entries = (0..n * n)
            .map(|k| if k / n == k % n { 0.0 } else { 1.0 })
            .collect();
        CostMatrix { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, chosen: usize, truth: usize) -> f64 {
        self.entries[chosen * self.n + truth]
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidCost(format!("scale factor {c}")));
        }
        Ok(CostMatrix {
            n: self.n,
            entries: self.entries.iter().map(|x| c * x).collect(),
        })
    }

    /// Cost charged when the residual outcome occurs under truth `j`:
    /// the worst cost in column `j`.
    pub fn residual_cost(&self, truth: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, truth)).fold(0.0, f64::max)
    }
}

/// Bayes average cost `sum_i sum_j xi_j K[i][j] Tr(rho_j P_i)`.
///
/// The residual element, when present, is charged `max_i K[i][j]`.
pub fn average_cost(m: &Measurement, h: &HypothesisSet, k: &CostMatrix) -> Result<f64> {
    check_dim(h.dim(), m.dim())?;
    check_dim(h.len(), m.elements().len())?;
    check_dim(h.len(), k.n())?;
    let mut total = 0.0;
    for (j, (xi, rho)) in h.priors().iter().zip(h.states()).enumerate() {
        for (i, element) in m.elements().iter().enumerate() {
            total += xi * k.get(i, j) * rho.matrix().trace_product(element)?;
        }
        if let Some(rest) = m.residual() {
            total += xi * k.residual_cost(j) * rho.matrix().trace_product(rest)?;
        }
    }
    Ok(total.max(0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Pgm,
    OneVsRest,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MulticlassDetector {
    Pgm(Measurement),
    OneVsRest(Vec<BinaryModel>),
}

/// A trained multi-class classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct MulticlassModel {
    labels: Vec<String>,
    priors: Vec<f64>,
    detector: MulticlassDetector,
}

impl MulticlassModel {
    pub fn new(
        labels: Vec<String>,
        priors: Vec<f64>,
        detector: MulticlassDetector,
    ) -> Result<Self> {
        let n = match &detector {
            MulticlassDetector::Pgm(m) => m.elements().len(),
            MulticlassDetector::OneVsRest(models) => {
                if let Some(first) = models.first() {
                    for m in models {
                        check_dim(first.dim(), m.dim())?;
                    }
                }
                models.len()
            }
        };
        if n < 2 || labels.len() != n || priors.len() != n {
            return Err(Error::InvalidArgument(format!(
                "model has {n} outcomes, {} labels and {} priors",
                labels.len(),
                priors.len()
            )));
        }
        Ok(MulticlassModel {
            labels,
            priors,
            detector,
        })
    }

    pub fn strategy(&self) -> Strategy {
        match self.detector {
            MulticlassDetector::Pgm(_) => Strategy::Pgm,
            MulticlassDetector::OneVsRest(_) => Strategy::OneVsRest,
        }
    }

    pub fn detector(&self) -> &MulticlassDetector {
        &self.detector
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Class priors seen at training time.
    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn dim(&self) -> usize {
        match &self.detector {
            MulticlassDetector::Pgm(m) => m.dim(),
            MulticlassDetector::OneVsRest(models) => models[0].dim(),
        }
    }

    /// Per-class Born-rule scores.
    pub fn scores(&self, x: &StateVector) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.dim())?;
        match &self.detector {
            MulticlassDetector::Pgm(m) => m
                .elements()
                .iter()
                .map(|e| e.quadratic_form(x.values()))
                .collect(),
            MulticlassDetector::OneVsRest(models) => models.iter().map(|b| b.score(x)).collect(),
        }
    }

    /// Index of the highest-scoring class; ties go to the lowest index.
    pub fn classify(&self, x: &StateVector) -> Result<usize> {
        Ok(argmax(&self.scores(x)?))
    }
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = k;
        }
    }
    best
}

/// Trains the square-root measurement classifier.
pub fn train_pgm(ds: &LabeledDataset) -> Result<MulticlassModel> {
    let h = build_hypotheses(ds)?;
    let m = pgm(&h)?;
    MulticlassModel::new(
        h.labels().to_vec(),
        h.priors().to_vec(),
        MulticlassDetector::Pgm(m),
    )
}

/// One binary detector per class (class vs. all others).
///
/// `prior_negative[k]` overrides the default negative prior of class `k`,
/// which is the fraction of documents outside the class.
pub fn train_one_vs_rest(
    ds: &LabeledDataset,
    prior_negative: Option<&[f64]>,
) -> Result<MulticlassModel> {
    let n = ds.n_classes();
    if n < 2 {
        return Err(Error::TooFewClasses { found: n });
    }
    if let Some(p) = prior_negative {
        check_dim(n, p.len())?;
    }
    let labels = ds.labels();
    let total = ds.len() as f64;
    let counts = ds.class_counts();
    let mut models = Vec::with_capacity(n);
    for (k, label) in labels.iter().enumerate() {
        let xi = prior_negative.map_or((total - counts[k] as f64) / total, |p| p[k]);
        let rest = ds
            .documents()
            .iter()
            .filter(|d| &d.label != label)
            .map(|d| &d.features);
        models.push(train_binary_labeled(
            (label, ds.class_documents(k)),
            ("rest", rest),
            xi,
            ds.dim(),
        )?);
    }
    let priors = counts.iter().map(|&c| c as f64 / total).collect();
    MulticlassModel::new(labels, priors, MulticlassDetector::OneVsRest(models))
}
