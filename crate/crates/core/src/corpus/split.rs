//! Seeded train/test splits.
//!
//! Shuffling uses `ChaCha8Rng::seed_from_u64(seed)` from `rand_chacha` with a
//! Fisher-Yates pass (`SliceRandom::shuffle`). Both are value-stable and
//! platform independent, so a seed names the same split everywhere. Both
//! halves keep the documents in their original dataset order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64, stratified: bool) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie strictly between 0 and 1, got {train_fraction}"
            )));
        }
        Ok(SplitSpec {
            train_fraction,
            seed,
            stratified,
        })
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Indices of the training documents, ascending.
pub fn split_indices(ds: &LabeledDataset, spec: &SplitSpec) -> Result<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    if spec.stratified {
        let labels = ds.labels();
        for (k, label) in labels.iter().enumerate() {
            let mut members: Vec<usize> = ds
                .documents()
                .iter()
                .enumerate()
                .filter(|(_, d)| ds.class_index(&d.label) == Some(k))
                .map(|(i, _)| i)
                .collect();
            if members.len() < 2 {
                return Err(Error::ClassTooSmall {
                    label: label.clone(),
                    count: members.len(),
                });
            }
            let take = round_half_up(spec.train_fraction * members.len() as f64)
                .clamp(1, members.len() - 1);
            members.shuffle(&mut rng);
            train.extend_from_slice(&members[..take]);
        }
    } else {
        let n = ds.len();
        let take = round_half_up(spec.train_fraction * n as f64);
        if take == 0 {
            return Err(Error::EmptySplit { side: "train" });
        }
        if take >= n {
            return Err(Error::EmptySplit { side: "test" });
        }
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        train.extend_from_slice(&all[..take]);
    }
    train.sort_unstable();
    Ok(train)
}

/// Splits into `(train, test)`.
pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let train = split_indices(ds, spec)?;
    let mut in_train = vec![false; ds.len()];
    for &i in &train {
        in_train[i] = true;
    }
    let test: Vec<usize> = (0..ds.len()).filter(|&i| !in_train[i]).collect();
    Ok((ds.subset(&train)?, ds.subset(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::dataset::parse_sparse_str;
    use proptest::prelude::*;

    fn corpus(counts: &[(&str, usize)]) -> LabeledDataset {
        let mut text = String::new();
        let mut f = 0;
        for (label, n) in counts {
            for _ in 0..*n {
                text.push_str(&format!("{label} {}:1\n", f % 7));
                f += 1;
            }
        }
        parse_sparse_str(&text).unwrap()
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let ds = corpus(&[("a", 5), ("b", 5)]);
        let spec = SplitSpec::new(0.8, 42, false).unwrap();
        let (train, test) = split(&ds, &spec).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        for _ in 0..3 {
            let (t2, s2) = split(&ds, &spec).unwrap();
            assert_eq!(t2, train);
            assert_eq!(s2, test);
        }
        assert_eq!(
            split_indices(&ds, &spec).unwrap(),
            vec![0, 1, 3, 4, 5, 7, 8, 9]
        );
    }

    #[test]
    fn stratified_rounding() {
        let ds = corpus(&[("a", 6), ("b", 4)]);
        let (train, test) = split(&ds, &SplitSpec::new(0.5, 1, true).unwrap()).unwrap();
        assert_eq!(train.class_counts(), vec![3, 2]);
        assert_eq!(test.len(), 5);

        // 5 * 0.5 = 2.5 rounds up on the train side
        let ds = corpus(&[("a", 5), ("b", 3)]);
        let (train, _) = split(&ds, &SplitSpec::new(0.5, 1, true).unwrap()).unwrap();
        assert_eq!(train.class_counts(), vec![3, 2]);
    }

    #[test]
    fn split_errors() {
        let ds = corpus(&[("a", 1), ("b", 1)]);
        let err = split(&ds, &SplitSpec::new(0.99, 0, false).unwrap()).unwrap_err();
        assert_eq!(err.code(), "empty-split");
        let err = split(&ds, &SplitSpec::new(0.01, 0, false).unwrap()).unwrap_err();
        assert_eq!(err.code(), "empty-split");
        let err = split(
            &corpus(&[("a", 3), ("b", 1)]),
            &SplitSpec::new(0.5, 0, true).unwrap(),
        )
        .unwrap_err();
        assert_eq!(err.code(), "class-too-small");
        assert!(SplitSpec::new(1.0, 0, false).is_err());
        assert!(SplitSpec::new(0.0, 0, false).is_err());
    }

    proptest! {
        #[test]
        fn halves_partition_the_dataset(n in 2usize..40, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let ds = corpus(&[("a", n), ("b", n)]);
            let spec = SplitSpec::new(frac, seed, seed % 2 == 0).unwrap();
            let Ok(train) = split_indices(&ds, &spec) else { return Ok(()); };
            let (tr, te) = split(&ds, &spec).unwrap();
            prop_assert_eq!(tr.len() + te.len(), ds.len());
            prop_assert!(train.windows(2).all(|w| w[0] < w[1]));
            let mut seen: Vec<usize> = train.clone();
            let test: Vec<usize> = (0..ds.len()).filter(|i| !train.contains(i)).collect();
            seen.extend(&test);
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..ds.len()).collect::<Vec<_>>());
        }
    }
}
