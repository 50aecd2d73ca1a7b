//! Batch prediction and evaluation reports.

use std::io::Write;

use serde::Serialize;

use crate::corpus::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{Model, Prediction};
use crate::multiclass::CostMatrix;

/// `counts[i][j]`: documents of true class `i` predicted as `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(n: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = counts.len();
        if n == 0 || counts.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(
                "confusion matrix must be square and nonempty".into(),
            ));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn n(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n()).map(|k| self.counts[k][k]).sum()
    }

    fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Test documents of this class.
    pub support: u64,
    /// Nothing was predicted as this class; precision reported as 0.
    pub precision_undefined: bool,
    /// The class has no test documents; recall reported as 0.
    pub recall_undefined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_documents: u64,
    pub labels: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub accuracy: f64,
    pub empirical_cost: f64,
    pub confusion_matrix: ConfusionMatrix,
    /// All-zero documents that were assigned the fallback class.
    pub degenerate_documents: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    /// Metrics of a confusion matrix whose classes are `labels`.
    pub fn from_confusion(
        labels: Vec<String>,
        confusion: ConfusionMatrix,
        costs: &CostMatrix,
        degenerate_documents: u64,
    ) -> Result<Self> {
        let n = confusion.n();
        if labels.len() != n || costs.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if labels.len() != n {
                    labels.len()
                } else {
                    costs.n()
                },
            });
        }
        let total = confusion.total();
        if total == 0 {
            return Err(Error::InvalidArgument("no documents to evaluate".into()));
        }

        let mut per_class = Vec::with_capacity(n);
        for (k, label) in labels.iter().enumerate() {
            let tp = confusion.get(k, k);
            let predicted = confusion.col_sum(k);
            let support = confusion.row_sum(k);
            // 2TP / (2TP + FP + FN), the harmonic mean of precision and recall
            let f1_den = predicted + support;
            per_class.push(ClassMetrics {
                label: label.clone(),
                precision: ratio(tp, predicted),
                recall: ratio(tp, support),
                f1: ratio(2 * tp, f1_den),
                support,
                precision_undefined: predicted == 0,
                recall_undefined: support == 0,
            });
        }

        let present: Vec<&ClassMetrics> = per_class.iter().filter(|c| c.support > 0).collect();
        let mean = |f: fn(&ClassMetrics) -> f64| {
            present.iter().map(|c| f(c)).sum::<f64>() / present.len() as f64
        };

        let correct = confusion.correct();
        // Single-label: every document is one TP or one (FP, FN) pair.
        let micro_precision = ratio(correct, total);
        let micro_recall = ratio(correct, total);
        let micro_f1 = ratio(2 * correct, 2 * total);

        let mut cost_sum = 0.0;
        for truth in 0..n {
            for chosen in 0..n {
                let c = confusion.get(truth, chosen);
                if c > 0 {
                    cost_sum += costs.get(chosen, truth) * c as f64;
                }
            }
        }

        let report = EvalReport {
            n_documents: total,
            labels,
            macro_precision: mean(|c| c.precision),
            macro_recall: mean(|c| c.recall),
            macro_f1: mean(|c| c.f1),
            per_class,
            micro_precision,
            micro_recall,
            micro_f1,
            accuracy: ratio(correct, total),
            empirical_cost: cost_sum / total as f64,
            confusion_matrix: confusion,
            degenerate_documents,
        };
        let problems = report.invariant_violations();
        assert!(problems.is_empty(), "inconsistent report: {problems:?}");
        Ok(report)
    }

    /// Broken report invariants, empty when the report is consistent.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let rates = self
            .per_class
            .iter()
            .flat_map(|c| [c.precision, c.recall, c.f1])
            .chain([
                self.macro_precision,
                self.macro_recall,
                self.macro_f1,
                self.micro_precision,
                self.micro_recall,
                self.micro_f1,
                self.accuracy,
            ]);
        if rates.clone().any(|r| !(0.0..=1.0).contains(&r)) {
            out.push("rate outside [0, 1]".to_string());
        }
        if self.micro_f1 != self.accuracy {
            out.push(format!(
                "micro F1 {} differs from accuracy {}",
                self.micro_f1, self.accuracy
            ));
        }
        if self.confusion_matrix.total() != self.n_documents {
            out.push("confusion matrix total differs from document count".to_string());
        }
        out
    }
}

/// Predictions for every document, in dataset order.
pub fn predict_dataset(model: &Model, ds: &LabeledDataset) -> Result<Vec<Prediction>> {
    if ds.dim() > model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: ds.dim(),
        });
    }
    ds.documents()
        .iter()
        .map(|d| model.predict(&d.features))
        .collect()
}

/// Writes `doc_index<TAB>label<TAB>score` lines.
pub fn write_predictions<W: Write>(
    model: &Model,
    predictions: &[Prediction],
    mut out: W,
) -> Result<()> {
    let labels = model.labels();
    for (i, p) in predictions.iter().enumerate() {
        writeln!(out, "{i}\t{}\t{}", labels[p.class], p.score)?;
    }
    Ok(())
}

/// Evaluates `model` on `test` under the cost matrix `costs` (indexed in
/// model label order).
pub fn evaluate(model: &Model, test: &LabeledDataset, costs: &CostMatrix) -> Result<EvalReport> {
    let labels = model.labels();
    if costs.n() != labels.len() {
        return Err(Error::InvalidCost(format!(
            "cost matrix is {0}x{0} but the model has {1} classes",
            costs.n(),
            labels.len()
        )));
    }
    let unknown: Vec<String> = test
        .labels()
        .into_iter()
        .filter(|l| !labels.contains(l))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownLabels(unknown));
    }
    let predictions = predict_dataset(model, test)?;
    let mut confusion = ConfusionMatrix::new(labels.len());
    let mut degenerate = 0;
    for (doc, p) in test.documents().iter().zip(&predictions) {
        let truth = labels
            .iter()
            .position(|l| *l == doc.label)
            .expect("checked above");
        confusion.record(truth, p.class);
        degenerate += u64::from(p.degenerate);
    }
    EvalReport::from_confusion(labels, confusion, costs, degenerate)
}

/// Parses a cost matrix: one row per line, whitespace-separated, `#` comments.
/// Row `i` holds the costs of choosing class `i`.
pub fn parse_cost_matrix(text: &str) -> Result<CostMatrix> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::InvalidCost(format!("line {}: bad number {t:?}", n + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    CostMatrix::new(&rows)
}

pub fn write_report<W: Write>(report: &EvalReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, report).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}
