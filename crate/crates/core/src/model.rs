//! Trained classifiers behind a single type, as stored on disk and used by
//! the command-line tool.

use crate::binary::{default_prior_negative, train_binary_labeled, BinaryModel, Decision};
use crate::corpus::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::multiclass::{argmax, train_one_vs_rest, train_pgm, MulticlassModel, Strategy};
use crate::state::{normalize_document, FeatureVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyName {
    Binary,
    Pgm,
    OneVsRest,
}

impl StrategyName {
    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyName::Binary => "binary",
            StrategyName::Pgm => "pgm",
            StrategyName::OneVsRest => "one_vs_rest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "binary" => Some(StrategyName::Binary),
            "pgm" => Some(StrategyName::Pgm),
            "one_vs_rest" | "ovr" => Some(StrategyName::OneVsRest),
            _ => None,
        }
    }
}

/// A two-class detector with the class names attached.
///
/// The positive class is `labels[0]`; `priors` is `[1 - xi, xi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledBinary {
    labels: [String; 2],
    detector: BinaryModel,
}

impl LabeledBinary {
    pub fn new(positive: String, negative: String, detector: BinaryModel) -> Result<Self> {
        if positive == negative {
            return Err(Error::InvalidArgument(format!(
                "duplicate label {positive:?}"
            )));
        }
        Ok(LabeledBinary {
            labels: [positive, negative],
            detector,
        })
    }

    pub fn detector(&self) -> &BinaryModel {
        &self.detector
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Binary(LabeledBinary),
    Multiclass(MulticlassModel),
}

/// Outcome for one document.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub class: usize,
    pub score: f64,
    /// The document had no nonzero feature and got the fallback class.
    pub degenerate: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainOptions {
    /// Negative-class prior (binary and one-vs-rest detectors).
    pub prior_negative: Option<f64>,
    /// Acceptance threshold (binary only).
    pub threshold: Option<f64>,
}

impl Model {
    pub fn strategy(&self) -> StrategyName {
        match self {
            Model::Binary(_) => StrategyName::Binary,
            Model::Multiclass(m) => match m.strategy() {
                Strategy::Pgm => StrategyName::Pgm,
                Strategy::OneVsRest => StrategyName::OneVsRest,
            },
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            Model::Binary(b) => b.labels.to_vec(),
            Model::Multiclass(m) => m.labels().to_vec(),
        }
    }

    pub fn priors(&self) -> Vec<f64> {
        match self {
            Model::Binary(b) => {
                let xi = b.detector.prior_negative();
                vec![1.0 - xi, xi]
            }
            Model::Multiclass(m) => m.priors().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Binary(b) => b.detector.dim(),
            Model::Multiclass(m) => m.dim(),
        }
    }

    /// Class used for all-zero documents: largest prior, lowest index on ties.
    pub fn fallback_class(&self) -> usize {
        argmax(&self.priors())
    }

    /// Classifies a document whose dimension is at most [`Model::dim`].
    pub fn predict(&self, doc: &FeatureVector) -> Result<Prediction> {
        let doc = doc.with_dim(self.dim())?;
        if doc.is_zero() {
            return Ok(Prediction {
                class: self.fallback_class(),
                score: 0.0,
                degenerate: true,
            });
        }
        let x = normalize_document(&doc)?;
        let (class, score) = match self {
            Model::Binary(b) => {
                let score = b.detector.score(&x)?;
                let class = match b.detector.decide(&x)? {
                    Decision::Accept => 0,
                    Decision::Reject => 1,
                };
                (class, score)
            }
            Model::Multiclass(m) => {
                let scores = m.scores(&x)?;
                let k = argmax(&scores);
                (k, scores[k])
            }
        };
        Ok(Prediction {
            class,
            score,
            degenerate: false,
        })
    }
}

/// Trains a model of the requested kind.
///
/// `binary` needs exactly two classes; the first label in the file is the
/// positive class.
pub fn train(ds: &LabeledDataset, strategy: StrategyName, opts: &TrainOptions) -> Result<Model> {
    let n = ds.n_classes();
    if n < 2 {
        return Err(Error::TooFewClasses { found: n });
    }
    if opts.threshold.is_some() && strategy != StrategyName::Binary {
        return Err(Error::InvalidArgument(
            "a threshold applies only to the binary strategy".into(),
        ));
    }
    match strategy {
        StrategyName::Binary => {
            if n != 2 {
                return Err(Error::InvalidArgument(format!(
                    "binary strategy needs exactly 2 classes, found {n}"
                )));
            }
            let labels = ds.labels();
            let counts = ds.class_counts();
            let xi = opts
                .prior_negative
                .unwrap_or_else(|| default_prior_negative(counts[0], counts[1]));
            let mut detector = train_binary_labeled(
                (&labels[0], ds.class_documents(0)),
                (&labels[1], ds.class_documents(1)),
                xi,
                ds.dim(),
            )?;
            if let Some(t) = opts.threshold {
                detector = detector.with_threshold(t)?;
            }
            let [pos, neg]: [String; 2] = labels.try_into().expect("two labels");
            Ok(Model::Binary(LabeledBinary::new(pos, neg, detector)?))
        }
        StrategyName::Pgm => {
            if opts.prior_negative.is_some() {
                return Err(Error::InvalidArgument(
                    "the pgm strategy takes its priors from class sizes".into(),
                ));
            }
            Ok(Model::Multiclass(train_pgm(ds)?))
        }
        StrategyName::OneVsRest => {
            let priors = opts.prior_negative.map(|xi| vec![xi; n]);
            Ok(Model::Multiclass(train_one_vs_rest(ds, priors.as_deref())?))
        }
    }
}
