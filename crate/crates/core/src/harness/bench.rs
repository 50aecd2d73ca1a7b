//! Self-checking benchmark suites run by `qdetect bench`.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binary::{binary_bayes_cost, BinaryModel};
use crate::corpus::split::{split, SplitSpec};
use crate::error::Result;
use crate::harness::metrics::evaluate;
use crate::harness::synth::{synth_corpus, SynthKind, SynthSpec};
use crate::model::{train, StrategyName, TrainOptions};
use crate::multiclass::{average_cost, pgm, CostMatrix, HypothesisSet};
use crate::oracle::{grid_oracle_dim2, helstrom_oracle};
use crate::state::{density_from_state, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    AtMost,
    AtLeast,
    Below,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchCheck {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub bound: f64,
}

impl BenchCheck {
    fn new(name: impl Into<String>, value: f64, comparison: Comparison, bound: f64) -> Self {
        BenchCheck {
            name: name.into(),
            value,
            comparison,
            bound,
        }
    }

    pub fn passed(&self) -> bool {
        match self.comparison {
            Comparison::AtMost => self.value <= self.bound,
            Comparison::AtLeast => self.value >= self.bound,
            Comparison::Below => self.value < self.bound,
        }
    }
}

impl fmt::Display for BenchCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Below => "<",
        };
        write!(
            f,
            "{:<44} {:>14.6e} {:>2} {:<12.3e} {}",
            self.name,
            self.value,
            op,
            self.bound,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Helstrom,
    Trine,
    Synthetic,
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<BenchCheck>> {
    match suite {
        Suite::Helstrom => helstrom_suite(seed),
        Suite::Trine => trine_suite(),
        Suite::Synthetic => synthetic_suite(seed),
    }
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> Result<StateVector> {
    StateVector::normalized((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// Detector cost against the trace-norm bound and the pure-state closed form
/// `(1 - sqrt(1 - 4 xi (1 - xi) <a|b>^2)) / 2`.
fn helstrom_suite(seed: u64) -> Result<Vec<BenchCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for dim in [2, 4, 8, 16] {
        let mut vs_trace_norm: f64 = 0.0;
        let mut vs_closed_form: f64 = 0.0;
        for _ in 0..200 {
            let (a, b) = (random_state(&mut rng, dim)?, random_state(&mut rng, dim)?);
            let xi = rng.gen_range(0.05..0.95);
            let (rho1, rho0) = (density_from_state(&a), density_from_state(&b));
            let model = BinaryModel::from_states(&rho1, &rho0, xi)?;
            let cost = binary_bayes_cost(&model, &rho1, &rho0, xi)?;
            let overlap = a.dot(&b)?;
            let closed = 0.5 * (1.0 - (1.0 - 4.0 * xi * (1.0 - xi) * overlap * overlap).sqrt());
            vs_trace_norm =
                vs_trace_norm.max((cost - helstrom_oracle(&rho1, &rho0, 1.0 - xi, xi)?).abs());
            vs_closed_form = vs_closed_form.max((cost - closed).abs());
        }
        checks.push(BenchCheck::new(
            format!("dim {dim}: |cost - trace-norm bound|"),
            vs_trace_norm,
            Comparison::AtMost,
            1e-9,
        ));
        checks.push(BenchCheck::new(
            format!("dim {dim}: |cost - pure closed form|"),
            vs_closed_form,
            Comparison::AtMost,
            1e-9,
        ));
    }

    let (e1, d45) = (StateVector::at_angle(0.0), StateVector::at_angle(PI / 4.0));
    let (rho1, rho0) = (density_from_state(&d45), density_from_state(&e1));
    let model = BinaryModel::from_states(&rho1, &rho0, 0.5)?;
    let cost = binary_bayes_cost(&model, &rho1, &rho0, 0.5)?;
    let expected = 0.5 * (1.0 - 0.5f64.sqrt());
    checks.push(BenchCheck::new(
        "45 deg pair: |cost - (1 - sqrt(1/2))/2|",
        (cost - expected).abs(),
        Comparison::AtMost,
        1e-9,
    ));
    let h = HypothesisSet::from_pure_unlabeled(vec![0.5, 0.5], vec![d45, e1])?;
    let grid = grid_oracle_dim2(&h, &CostMatrix::zero_one(2), 100_000)?;
    checks.push(BenchCheck::new(
        "45 deg pair: |grid optimum - cost|",
        (grid.cost - cost).abs(),
        Comparison::AtMost,
        1e-4,
    ));
    Ok(checks)
}

fn trine_suite() -> Result<Vec<BenchCheck>> {
    let states = (0..3)
        .map(|k| StateVector::at_angle(2.0 * PI * k as f64 / 3.0))
        .collect();
    let h = HypothesisSet::from_pure_unlabeled(vec![1.0 / 3.0; 3], states)?;
    let k = CostMatrix::zero_one(3);
    let m = pgm(&h)?;
    let cost = average_cost(&m, &h, &k)?;
    let grid = grid_oracle_dim2(&h, &k, 10_000)?;
    Ok(vec![
        BenchCheck::new(
            "trine: |PGM cost - 1/3|",
            (cost - 1.0 / 3.0).abs(),
            Comparison::AtMost,
            1e-9,
        ),
        BenchCheck::new(
            "trine: PGM completeness defect",
            m.completeness_defect(),
            Comparison::AtMost,
            1e-10,
        ),
        BenchCheck::new(
            "trine: grid optimum",
            grid.cost,
            Comparison::AtLeast,
            1.0 / 3.0 - 1e-3,
        ),
    ])
}

fn synthetic_suite(seed: u64) -> Result<Vec<BenchCheck>> {
    let mut checks = Vec::new();
    for noise in [0.0, 0.2] {
        let ds = synth_corpus(&SynthSpec::new(SynthKind::Orthogonal, 4, 25, noise, seed))?;
        let (train_ds, test_ds) = split(&ds, &SplitSpec::new(0.6, seed, true)?)?;
        for strategy in [StrategyName::Pgm, StrategyName::OneVsRest] {
            let model = train(&train_ds, strategy, &TrainOptions::default())?;
            let report = evaluate(&model, &test_ds, &CostMatrix::zero_one(4))?;
            let name = strategy.as_str();
            checks.push(if noise == 0.0 {
                BenchCheck::new(
                    format!("orthogonal, noise 0: {name} accuracy"),
                    report.accuracy,
                    Comparison::AtLeast,
                    1.0,
                )
            } else {
                BenchCheck::new(
                    format!("orthogonal, noise 0.2: {name} 0-1 cost"),
                    report.empirical_cost,
                    Comparison::Below,
                    0.75,
                )
            });
        }
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        for suite in [Suite::Helstrom, Suite::Trine, Suite::Synthetic] {
            for check in run_suite(suite, 7).unwrap() {
                assert!(check.passed(), "{check}");
            }
        }
    }

    #[test]
    fn comparison_semantics() {
        assert!(BenchCheck::new("x", 1.0, Comparison::AtMost, 1.0).passed());
        assert!(!BenchCheck::new("x", 1.0, Comparison::Below, 1.0).passed());
        assert!(BenchCheck::new("x", 1.0, Comparison::AtLeast, 1.0).passed());
        assert!(!BenchCheck::new("x", f64::NAN, Comparison::AtLeast, 1.0).passed());
    }
}
