//! Evaluation, synthetic data and benchmark suites.

pub mod bench;
pub mod metrics;
pub mod synth;
