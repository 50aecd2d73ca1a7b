//! Model files.
//!
//! A model is one JSON object:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "strategy": "binary" | "pgm" | "one_vs_rest",
//!   "dim": D,
//!   "labels": [...],
//!   "priors": [...],
//!   "thresholds": [...],          // one per detector, empty for pgm
//!   "detectors": [               // binary (1 entry) and one_vs_rest (1 per class)
//!     {"projector": [[...]], "lambda": .., "eta": .., "beta": .., "prior_negative": ..}
//!   ],
//!   "elements": [[[...]]],       // pgm only, one matrix per class
//!   "residual": [[...]] | null   // pgm only
//! }
//! ```
//!
//! Matrices are arrays of rows. Every number is written with 17 significant
//! digits so that loading restores the exact `f64` values.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::Deserializer;
use serde::ser::{Error as _, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::binary::BinaryModel;
use crate::error::{Error, Result};
use crate::linalg::SymMatrix;
use crate::model::{LabeledBinary, Model, StrategyName};
use crate::multiclass::{Measurement, MulticlassDetector, MulticlassModel};

pub const FORMAT_VERSION: u64 = 1;

/// An `f64` serialized as `{:.16e}`.
#[derive(Clone, Copy, PartialEq)]
struct Num(f64);

impl fmt::Debug for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("non-finite number {}", self.0)));
        }
        let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(S::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(Num)
    }
}

type Rows = Vec<Vec<Num>>;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorFile {
    projector: Rows,
    lambda: Num,
    eta: Num,
    beta: Num,
    prior_negative: Num,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u64,
    strategy: String,
    dim: usize,
    labels: Vec<String>,
    priors: Vec<Num>,
    thresholds: Vec<Num>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    detectors: Option<Vec<DetectorFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elements: Option<Vec<Rows>>,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        deserialize_with = "present"
    )]
    residual: Option<Option<Rows>>,
}

/// Keeps an explicit `null` apart from a missing field.
fn present<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Option<Rows>>, D::Error> {
    Option::<Rows>::deserialize(d).map(Some)
}

fn to_rows(m: &SymMatrix) -> Rows {
    m.rows()
        .map(|r| r.iter().map(|&v| Num(v)).collect())
        .collect()
}

fn from_rows(rows: &Rows, dim: usize, what: &str) -> Result<SymMatrix> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Format(format!(
            "{what} must be a {dim}x{dim} matrix"
        )));
    }
    let data: Vec<f64> = rows.iter().flatten().map(|n| n.0).collect();
    for i in 0..dim {
        for j in 0..i {
            if data[i * dim + j] != data[j * dim + i] {
                return Err(Error::Format(format!(
                    "{what} is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    SymMatrix::from_row_major(dim, data).map_err(|e| Error::Format(format!("{what}: {e}")))
}

fn detector_file(b: &BinaryModel) -> DetectorFile {
    DetectorFile {
        projector: to_rows(b.projector()),
        lambda: Num(b.lambda()),
        eta: Num(b.eta()),
        beta: Num(b.beta()),
        prior_negative: Num(b.prior_negative()),
    }
}

fn detector_from_file(
    d: &DetectorFile,
    threshold: f64,
    dim: usize,
    k: usize,
) -> Result<BinaryModel> {
    let projector = from_rows(&d.projector, dim, &format!("detectors[{k}].projector"))?;
    BinaryModel::from_parts(
        projector,
        d.lambda.0,
        d.eta.0,
        d.beta.0,
        threshold,
        d.prior_negative.0,
    )
    .map_err(|e| Error::Format(format!("detectors[{k}]: {e}")))
}

fn to_file(model: &Model) -> ModelFile {
    let mut file = ModelFile {
        format_version: FORMAT_VERSION,
        strategy: model.strategy().as_str().to_string(),
        dim: model.dim(),
        labels: model.labels(),
        priors: model.priors().into_iter().map(Num).collect(),
        thresholds: Vec::new(),
        detectors: None,
        elements: None,
        residual: None,
    };
    let binaries: Vec<&BinaryModel> = match model {
        Model::Binary(b) => vec![b.detector()],
        Model::Multiclass(m) => match m.detector() {
            MulticlassDetector::OneVsRest(models) => models.iter().collect(),
            MulticlassDetector::Pgm(meas) => {
                file.elements = Some(meas.elements().iter().map(to_rows).collect());
                file.residual = Some(meas.residual().map(to_rows));
                Vec::new()
            }
        },
    };
    if !binaries.is_empty() {
        file.thresholds = binaries.iter().map(|b| Num(b.threshold())).collect();
        file.detectors = Some(binaries.into_iter().map(detector_file).collect());
    }
    file
}

fn from_file(file: ModelFile) -> Result<Model> {
    let strategy = StrategyName::parse(&file.strategy)
        .filter(|s| s.as_str() == file.strategy)
        .ok_or_else(|| Error::Format(format!("unknown strategy {:?}", file.strategy)))?;
    let dim = file.dim;
    if dim == 0 {
        return Err(Error::Format("dim must be positive".into()));
    }
    let priors: Vec<f64> = file.priors.iter().map(|n| n.0).collect();
    let n = file.labels.len();
    if priors.len() != n {
        return Err(Error::Format(format!(
            "{n} labels but {} priors",
            priors.len()
        )));
    }
    let forbid = |present: bool, field: &str| {
        if present {
            Err(Error::Format(format!(
                "field {field:?} is not used by strategy {}",
                file.strategy
            )))
        } else {
            Ok(())
        }
    };
    let model = match strategy {
        StrategyName::Binary | StrategyName::OneVsRest => {
            forbid(file.elements.is_some(), "elements")?;
            forbid(file.residual.is_some(), "residual")?;
            let detectors = file
                .detectors
                .as_ref()
                .ok_or_else(|| Error::Format("missing field \"detectors\"".into()))?;
            if detectors.len() != file.thresholds.len() {
                return Err(Error::Format(format!(
                    "{} detectors but {} thresholds",
                    detectors.len(),
                    file.thresholds.len()
                )));
            }
            let models = detectors
                .iter()
                .zip(&file.thresholds)
                .enumerate()
                .map(|(k, (d, t))| detector_from_file(d, t.0, dim, k))
                .collect::<Result<Vec<_>>>()?;
            if strategy == StrategyName::Binary {
                let [detector]: [BinaryModel; 1] = models
                    .try_into()
                    .map_err(|_| Error::Format("binary model needs exactly 1 detector".into()))?;
                let [pos, neg]: [String; 2] = file
                    .labels
                    .try_into()
                    .map_err(|_| Error::Format("binary model needs exactly 2 labels".into()))?;
                let xi = detector.prior_negative();
                if priors != [1.0 - xi, xi] {
                    return Err(Error::Format(
                        "priors disagree with the detector prior".into(),
                    ));
                }
                Model::Binary(LabeledBinary::new(pos, neg, detector).map_err(format_err)?)
            } else {
                let m = MulticlassModel::new(
                    file.labels,
                    priors,
                    MulticlassDetector::OneVsRest(models),
                );
                Model::Multiclass(m.map_err(format_err)?)
            }
        }
        StrategyName::Pgm => {
            forbid(file.detectors.is_some(), "detectors")?;
            forbid(!file.thresholds.is_empty(), "thresholds")?;
            let elements = file
                .elements
                .as_ref()
                .ok_or_else(|| Error::Format("missing field \"elements\"".into()))?
                .iter()
                .enumerate()
                .map(|(k, rows)| from_rows(rows, dim, &format!("elements[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            let residual = match &file.residual {
                None => return Err(Error::Format("missing field \"residual\"".into())),
                Some(None) => None,
                Some(Some(rows)) => Some(from_rows(rows, dim, "residual")?),
            };
            let meas = Measurement::new(elements, residual).map_err(format_err)?;
            let m = MulticlassModel::new(file.labels, priors, MulticlassDetector::Pgm(meas));
            Model::Multiclass(m.map_err(format_err)?)
        }
    };
    Ok(model)
}

fn format_err(e: Error) -> Error {
    match e {
        Error::Format(_) => e,
        other => Error::Format(other.to_string()),
    }
}

/// Writes the model as pretty-printed JSON followed by a newline.
pub fn write_model<W: Write>(model: &Model, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &to_file(model))
        .map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn model_to_string(model: &Model) -> String {
    let mut buf = Vec::new();
    write_model(model, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn read_model<R: Read>(mut input: R) -> Result<Model> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    model_from_str(&text)
}

pub fn model_from_str(text: &str) -> Result<Model> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let version = value
        .get("format_version")
        .ok_or_else(|| Error::Format("missing field \"format_version\"".into()))?;
    let version = version.as_u64().ok_or_else(|| {
        Error::Format(format!("format_version must be an integer, got {version}"))
    })?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let file: ModelFile =
        serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
    from_file(file)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_model(model, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    read_model(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::dataset::parse_sparse_str;
    use crate::model::{train, TrainOptions};
    use proptest::prelude::*;

    fn corpus() -> crate::corpus::LabeledDataset {
        parse_sparse_str("a 0:1 1:2\na 0:3\nb 1:1 2:1\nb 2:4 3:1\nc 3:2 4:1\nc 0:0.5 4:1\n")
            .unwrap()
    }

    fn binary_corpus() -> crate::corpus::LabeledDataset {
        parse_sparse_str("pos 0:1\npos 0:2 2:1\nneg 1:1\nneg 1:1 2:3\nneg 1:2\n").unwrap()
    }

    fn all_models() -> Vec<Model> {
        let opts = TrainOptions::default();
        let full_support = parse_sparse_str("x 0:1\ny 1:1\n").unwrap();
        vec![
            train(&full_support, StrategyName::Pgm, &opts).unwrap(),
            train(
                &binary_corpus(),
                StrategyName::Binary,
                &TrainOptions {
                    threshold: Some(0.3),
                    ..opts.clone()
                },
            )
            .unwrap(),
            train(&corpus(), StrategyName::Pgm, &opts).unwrap(),
            train(&corpus(), StrategyName::OneVsRest, &opts).unwrap(),
        ]
    }

    fn bits(m: &SymMatrix) -> Vec<u64> {
        m.as_row_major().iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn every_model_type_round_trips_bit_identically() {
        for m in all_models() {
            let text = model_to_string(&m);
            let back = model_from_str(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(model_to_string(&back), text);
            match (&m, &back) {
                (Model::Binary(a), Model::Binary(b)) => {
                    assert_eq!(
                        bits(a.detector().projector()),
                        bits(b.detector().projector())
                    );
                    assert_eq!(a.detector().eta().to_bits(), b.detector().eta().to_bits());
                }
                (Model::Multiclass(a), Model::Multiclass(b)) => {
                    assert_eq!(a.detector(), b.detector());
                }
                _ => panic!("kind changed"),
            }
        }
    }

    #[test]
    fn orthogonal_binary_model_round_trips() {
        let ds = parse_sparse_str("x 0:1\ny 1:1\n").unwrap();
        let m = train(&ds, StrategyName::Binary, &TrainOptions::default()).unwrap();
        let Model::Binary(b) = model_from_str(&model_to_string(&m)).unwrap() else {
            panic!()
        };
        assert_eq!(b.detector().projector(), &SymMatrix::diagonal(&[1.0, 0.0]));
        assert_eq!(b.detector().lambda(), 1.0);
        assert_eq!(b.detector().eta(), 1.0);
        assert_eq!(b.detector().beta(), -1.0);
    }

    #[test]
    fn numbers_have_17_significant_digits() {
        let text = model_to_string(&all_models()[1]);
        assert!(text.contains("\"format_version\": 1,"));
        assert!(text.contains("\"strategy\": \"binary\""));
        assert!(
            text.contains("\"thresholds\": [\n    2.9999999999999999e-1\n  ]"),
            "{text}"
        );
    }

    #[test]
    fn version_and_format_errors() {
        let text = model_to_string(&all_models()[2]);
        let v99 = text.replacen("\"format_version\": 1", "\"format_version\": 99", 1);
        assert_eq!(
            model_from_str(&v99).unwrap_err().code(),
            "unsupported-version"
        );
        assert_eq!(
            model_from_str(&text[..text.len() / 2]).unwrap_err().code(),
            "format"
        );

        let bad = [
            text.replacen("\"strategy\": \"pgm\"", "\"strategy\": \"svm\"", 1),
            text.replacen("\"dim\"", "\"dims\"", 1),
            text.replacen("\"format_version\": 1", "\"format_version\": \"1\"", 1),
            text.replacen("\"format_version\": 1,", "", 1),
            text.replacen("\"strategy\": \"pgm\"", "\"strategy\": \"one_vs_rest\"", 1),
            "[]".to_string(),
        ];
        for b in bad {
            assert_eq!(model_from_str(&b).unwrap_err().code(), "format", "{b}");
        }
    }

    #[test]
    fn tampered_matrices_are_rejected() {
        let ds = parse_sparse_str("x 0:1\ny 1:1\n").unwrap();
        let text =
            model_to_string(&train(&ds, StrategyName::Binary, &TrainOptions::default()).unwrap());
        let tampered = text.replacen("1.0000000000000000e0", "7.0000000000000000e-1", 1);
        assert_eq!(model_from_str(&tampered).unwrap_err().code(), "format");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        for m in all_models() {
            save_model(&m, &path).unwrap();
            assert_eq!(load_model(&path).unwrap(), m);
        }
        assert_eq!(
            load_model(&dir.path().join("missing.json"))
                .unwrap_err()
                .code(),
            "io"
        );
    }

    proptest! {
        #[test]
        fn num_format_is_exact(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            let text = serde_json::to_string(&Num(v)).unwrap();
            let back: f64 = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
