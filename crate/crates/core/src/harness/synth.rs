//! Seeded synthetic corpora with known class geometry.
//!
//! Features are grouped into blocks. Each class draws its documents from
//! the union of its own blocks:
//!
//! - `Orthogonal`: one private block per class.
//! - `Overlap { angle_deg }`: a block shared by all classes plus one private
//!   block per class; the shared block holds `round(B cos angle)` of each
//!   class's `B` features, so class vectors meet at roughly `angle`.
//! - `TrineLike`: three blocks, class `k` uses blocks `k` and `k + 1 (mod 3)`.
//!
//! With probability `noise`, a drawn feature is replaced by a random feature
//! of a block the class does not use.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::dataset::{Document, LabeledDataset};
use crate::error::{Error, Result};
use crate::state::FeatureVector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SynthKind {
    Orthogonal,
    Overlap { angle_deg: f64 },
    TrineLike,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub kind: SynthKind,
    /// Ignored for `TrineLike`, which always has 3 classes.
    pub n_classes: usize,
    pub docs_per_class: usize,
    /// Features per class (`B`).
    pub block_size: usize,
    /// Distinct features drawn per document.
    pub features_per_doc: usize,
    pub noise: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(
        kind: SynthKind,
        n_classes: usize,
        docs_per_class: usize,
        noise: f64,
        seed: u64,
    ) -> Self {
        SynthSpec {
            kind,
            n_classes,
            docs_per_class,
            block_size: 8,
            features_per_doc: 4,
            noise,
            seed,
        }
    }
}

struct Layout {
    blocks: Vec<Range<usize>>,
    class_blocks: Vec<Vec<usize>>,
    dim: usize,
}

fn layout(spec: &SynthSpec) -> Result<Layout> {
    let b = spec.block_size;
    let (blocks, class_blocks): (Vec<Range<usize>>, Vec<Vec<usize>>) = match spec.kind {
        SynthKind::Orthogonal => (
            (0..spec.n_classes).map(|k| k * b..(k + 1) * b).collect(),
            (0..spec.n_classes).map(|k| vec![k]).collect(),
        ),
        SynthKind::Overlap { angle_deg } => {
            if !(angle_deg > 0.0 && angle_deg <= 90.0) {
                return Err(Error::InvalidArgument(format!(
                    "overlap angle must lie in (0, 90] degrees, got {angle_deg}"
                )));
            }
            let shared = (b as f64 * angle_deg.to_radians().cos()).round() as usize;
            if shared >= b {
                return Err(Error::InvalidArgument(format!(
                    "angle {angle_deg} is too small for block size {b}"
                )));
            }
            let private = b - shared;
            let blocks = std::iter::once(0..shared)
                .chain(
                    (0..spec.n_classes).map(|k| shared + k * private..shared + (k + 1) * private),
                )
                .collect();
            let class_blocks = (0..spec.n_classes)
                .map(|k| {
                    if shared > 0 {
                        vec![0, k + 1]
                    } else {
                        vec![k + 1]
                    }
                })
                .collect();
            (blocks, class_blocks)
        }
        SynthKind::TrineLike => (
            (0..3).map(|k| k * b..(k + 1) * b).collect(),
            (0..3).map(|k| vec![k, (k + 1) % 3]).collect(),
        ),
    };
    let dim = blocks.iter().map(|r| r.end).max().unwrap_or(0);
    Ok(Layout {
        blocks,
        class_blocks,
        dim,
    })
}

fn validate(spec: &SynthSpec) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidArgument(m));
    if spec.kind != SynthKind::TrineLike && spec.n_classes < 2 {
        return bad(format!("need at least 2 classes, got {}", spec.n_classes));
    }
    if spec.docs_per_class < 2 {
        return bad(format!(
            "need at least 2 documents per class, got {}",
            spec.docs_per_class
        ));
    }
    if spec.block_size == 0 {
        return bad("block size must be positive".into());
    }
    if spec.features_per_doc == 0 || spec.features_per_doc > spec.block_size {
        return bad(format!(
            "features per document must lie in 1..={}, got {}",
            spec.block_size, spec.features_per_doc
        ));
    }
    if !(0.0..1.0).contains(&spec.noise) {
        return bad(format!("noise rate must lie in [0, 1), got {}", spec.noise));
    }
    Ok(())
}

/// Generates the corpus; the same spec always yields the same documents.
pub fn synth_corpus(spec: &SynthSpec) -> Result<LabeledDataset> {
    validate(spec)?;
    let layout = layout(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut documents = Vec::new();
    for (k, own) in layout.class_blocks.iter().enumerate() {
        let support: Vec<usize> = own.iter().flat_map(|&b| layout.blocks[b].clone()).collect();
        let foreign: Vec<usize> = (0..layout.blocks.len())
            .filter(|b| !own.contains(b) && !layout.blocks[*b].is_empty())
            .collect();
        for _ in 0..spec.docs_per_class {
            let mut features = BTreeMap::new();
            for &f in support.choose_multiple(&mut rng, spec.features_per_doc) {
                let value = f64::from(rng.gen_range(1u8..=3));
                let f = if !foreign.is_empty() && rng.gen_bool(spec.noise) {
                    let block = &layout.blocks[*foreign.choose(&mut rng).expect("nonempty")];
                    rng.gen_range(block.clone())
                } else {
                    f
                };
                *features.entry(f).or_insert(0.0) += value;
            }
            documents.push(Document {
                label: format!("c{k}"),
                features: FeatureVector::new(layout.dim, features)?,
            });
        }
    }
    LabeledDataset::new(layout.dim, documents)
}
