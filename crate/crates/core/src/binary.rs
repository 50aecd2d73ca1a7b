//! Two-hypothesis detector.
//!
//! With `rho1` the positive-class state, `rho0` the negative-class state and
//! `xi` the prior of the negative class, the operator
//! `rho1 - lambda * rho0` (`lambda = xi / (1 - xi)`) splits into a positive
//! and a negative eigenspace. Documents are accepted by the projector onto
//! the positive part. That projector minimizes the two-class error
//! probability, which is why [`binary_bayes_cost`] of a trained model matches
//! the trace-norm bound.

use crate::error::{check_dim, Error, Result};
use crate::linalg::{eigh, projector_from_eigenspace, Spectrum, SymMatrix};
use crate::state::{
    density_from_vector, feature_statistics, DensityOperator, FeatureVector, StateVector,
};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Class vectors whose cosine exceeds `1 - PARALLEL_TOL` cannot be separated.
const PARALLEL_TOL: f64 = 1e-12;

const PROJECTOR_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Trained two-class detector.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryModel {
    projector: SymMatrix,
    lambda: f64,
    eta: f64,
    beta: f64,
    threshold: f64,
    prior_negative: f64,
}

impl BinaryModel {
    /// Builds the detector from the two class states and the negative-class prior.
    pub fn from_states(
        positive: &DensityOperator,
        negative: &DensityOperator,
        prior_negative: f64,
    ) -> Result<Self> {
        check_prior(prior_negative)?;
        check_dim(positive.dim(), negative.dim())?;
        let overlap = positive.matrix().trace_product(negative.matrix())?;
        let cosine = overlap.max(0.0).sqrt();
        if positive.rank_hint() == Some(1)
            && negative.rank_hint() == Some(1)
            && cosine > 1.0 - PARALLEL_TOL
        {
            return Err(Error::DegenerateSeparation { cosine });
        }

        let lambda = prior_negative / (1.0 - prior_negative);
        let difference = positive.matrix().add_scaled(negative.matrix(), -lambda)?;
        let es = eigh(&difference)?;
        let n = es.dim();
        let positive_count = (0..n)
            .filter(|&k| es.sign_of(k) == Spectrum::Positive)
            .count();
        let negative_count = (0..n)
            .filter(|&k| es.sign_of(k) == Spectrum::Negative)
            .count();
        if positive_count == 0 || negative_count == 0 {
            return Err(Error::DegenerateSeparation { cosine });
        }
        Ok(BinaryModel {
            projector: projector_from_eigenspace(&es, Spectrum::Positive),
            lambda,
            eta: es.eigenvalues[0],
            beta: es.eigenvalues[n - 1],
            threshold: DEFAULT_THRESHOLD,
            prior_negative,
        })
    }

    /// Reassembles a model from stored fields, re-checking every invariant.
    pub fn from_parts(
        projector: SymMatrix,
        lambda: f64,
        eta: f64,
        beta: f64,
        threshold: f64,
        prior_negative: f64,
    ) -> Result<Self> {
        check_prior(prior_negative)?;
        check_threshold(threshold)?;
        let defect = projector.idempotency_defect();
        if defect > PROJECTOR_TOL {
            return Err(Error::InvalidArgument(format!(
                "projector is not idempotent (defect {defect:e})"
            )));
        }
        if eta.is_nan() || eta <= 0.0 || beta.is_nan() || beta >= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "eigenvalue bounds must satisfy eta > 0 > beta, got eta {eta}, beta {beta}"
            )));
        }
        let expected = prior_negative / (1.0 - prior_negative);
        if (lambda - expected).abs() > 1e-12 * expected.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda {lambda} does not match prior ratio {expected}"
            )));
        }
        Ok(BinaryModel {
            projector,
            lambda,
            eta,
            beta,
            threshold,
            prior_negative,
        })
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        self.threshold = threshold;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.projector.dim()
    }

    /// Projector onto the acceptance subspace.
    pub fn projector(&self) -> &SymMatrix {
        &self.projector
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Largest eigenvalue of `rho1 - lambda rho0`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Smallest eigenvalue of `rho1 - lambda rho0`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn prior_negative(&self) -> f64 {
        self.prior_negative
    }

    /// The detector with the roles of the classes swapped: it carries
    /// `I - P`, prior `1 - xi`, and the eigenvalue bounds of
    /// `rho0 - rho1 / lambda`.
    pub fn complement(&self) -> BinaryModel {
        let identity = SymMatrix::identity(self.dim());
        BinaryModel {
            projector: identity.sub(&self.projector).expect("same dim"),
            lambda: (1.0 - self.prior_negative) / self.prior_negative,
            eta: -self.beta / self.lambda,
            beta: -self.eta / self.lambda,
            threshold: self.threshold,
            prior_negative: 1.0 - self.prior_negative,
        }
    }

    /// Born-rule acceptance probability `<x|P|x>`.
    pub fn score(&self, x: &StateVector) -> Result<f64> {
        self.projector.quadratic_form(x.values())
    }

    /// Accepts when the score reaches the threshold (inclusive).
    pub fn decide(&self, x: &StateVector) -> Result<Decision> {
        Ok(if self.score(x)? >= self.threshold {
            Decision::Accept
        } else {
            Decision::Reject
        })
    }
}

fn check_prior(xi: f64) -> Result<()> {
    if xi > 0.0 && xi < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidPrior(xi))
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "threshold must lie in [0, 1], got {t}"
        )))
    }
}

/// Fraction of negative documents, the default negative-class prior.
pub fn default_prior_negative(positives: usize, negatives: usize) -> f64 {
    negatives as f64 / (positives + negatives) as f64
}

/// Trains a detector from positive and negative training documents.
pub fn train_binary(
    positives: &[FeatureVector],
    negatives: &[FeatureVector],
    prior_negative: f64,
    dim: usize,
) -> Result<BinaryModel> {
    train_binary_labeled(
        ("positive", positives),
        ("negative", negatives),
        prior_negative,
        dim,
    )
}

pub(crate) fn train_binary_labeled<'a, P, N>(
    (pos_label, positives): (&str, P),
    (neg_label, negatives): (&str, N),
    prior_negative: f64,
    dim: usize,
) -> Result<BinaryModel>
where
    P: IntoIterator<Item = &'a FeatureVector>,
    N: IntoIterator<Item = &'a FeatureVector>,
{
    check_prior(prior_negative)?;
    let v1 = feature_statistics(pos_label, positives, dim)?;
    let v0 = feature_statistics(neg_label, negatives, dim)?;

    let dot: f64 = v1
        .values()
        .iter()
        .zip(v0.values())
        .map(|(a, b)| a * b)
        .sum();
    let n1 = v1.values().iter().map(|a| a * a).sum::<f64>().sqrt();
    let n0 = v0.values().iter().map(|a| a * a).sum::<f64>().sqrt();
    let cosine = (dot / (n1 * n0)).abs();
    if cosine > 1.0 - PARALLEL_TOL {
        return Err(Error::DegenerateSeparation { cosine });
    }

    BinaryModel::from_states(
        &density_from_vector(&v1)?,
        &density_from_vector(&v0)?,
        prior_negative,
    )
}

/// Zero-one Bayes cost of the detector:
/// `xi Tr(rho0 P) + (1 - xi) Tr(rho1 (I - P))`.
pub fn binary_bayes_cost(
    model: &BinaryModel,
    positive: &DensityOperator,
    negative: &DensityOperator,
    prior_negative: f64,
) -> Result<f64> {
    check_prior(prior_negative)?;
    check_dim(model.dim(), positive.dim())?;
    check_dim(model.dim(), negative.dim())?;
    let false_accept = negative.matrix().trace_product(model.projector())?;
    let miss = positive.matrix().trace() - positive.matrix().trace_product(model.projector())?;
    Ok(prior_negative * false_accept + (1.0 - prior_negative) * miss)
}
