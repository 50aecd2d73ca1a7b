//! Independent reference values for the detectors.
//!
//! [`helstrom_oracle`] is the closed-form two-state minimum error
//! `(1 - ||xi1 rho1 - xi0 rho0||_1) / 2`. [`grid_oracle_dim2`] searches
//! two-dimensional measurements exhaustively and evaluates the Bayes cost
//! with its own quadratic forms, sharing no code with
//! [`crate::multiclass::average_cost`].

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{eigh, trace_norm, SymMatrix};
use crate::multiclass::{CostMatrix, HypothesisSet, MeasurementKind};
use crate::state::DensityOperator;

pub const MIN_RESOLUTION: usize = 1000;

/// Angle steps per axis of the three-outcome POVM grid (at most).
pub const POVM_GRID_MAX: usize = 120;

const WEIGHT_TOL: f64 = 1e-12;
const COMPLETENESS_TOL: f64 = 1e-6;
const REFINE_MIN_STEP: f64 = 1e-9;

/// Minimum two-hypothesis error probability.
pub fn helstrom_oracle(
    rho1: &DensityOperator,
    rho0: &DensityOperator,
    prior1: f64,
    prior0: f64,
) -> Result<f64> {
    check_dim(rho1.dim(), rho0.dim())?;
    if !(prior1 > 0.0 && prior0 > 0.0) || (prior1 + prior0 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "priors {prior1} and {prior0} must be positive and sum to 1"
        )));
    }
    let diff = rho1
        .matrix()
        .scale(prior1)
        .add_scaled(rho0.matrix(), -prior0)?;
    Ok(0.5 * (1.0 - trace_norm(&diff)?))
}

/// Best measurement found by the grid search; `elements[k]` is assigned to hypothesis `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridOptimum {
    pub cost: f64,
    pub elements: Vec<SymMatrix>,
    pub kind: MeasurementKind,
}

impl GridOptimum {
    /// Direction angle in `[0, pi)` of element `k` when it is rank one.
    pub fn angle(&self, k: usize) -> Option<f64> {
        let e = &self.elements[k];
        let es = eigh(e).ok()?;
        if es.eigenvalues[0] <= 0.0 || es.eigenvalues[1] > 1e-12 * es.eigenvalues[0] {
            return None;
        }
        let v = &es.eigenvectors[0];
        let t = v[1].atan2(v[0]).rem_euclid(PI);
        Some(if PI - t < 1e-9 { 0.0 } else { t })
    }
}

fn rank_one(weight: f64, t: f64) -> SymMatrix {
    SymMatrix::outer_scaled(&[t.cos(), t.sin()], weight)
}

struct Dim2Problem {
    n: usize,
    /// `rho_j` entries `(a, b, d)` of `[[a, b], [b, d]]`.
    states: Vec<(f64, f64, f64)>,
    priors: Vec<f64>,
    costs: Vec<Vec<f64>>,
}

impl Dim2Problem {
    /// `sum_j xi_j K[i][j] <u|rho_j|u>` for hypothesis `i` and direction angle `t`.
    fn outcome_cost(&self, i: usize, t: f64) -> f64 {
        let (c, s) = (t.cos(), t.sin());
        (0..self.n)
            .map(|j| {
                let (a, b, d) = self.states[j];
                self.priors[j] * self.costs[i][j] * (a * c * c + 2.0 * b * c * s + d * s * s)
            })
            .sum()
    }

    fn povm_cost(&self, angles: &[f64; 3]) -> Option<(f64, [f64; 3])> {
        let w = povm_weights(angles)?;
        let cost = (0..3).map(|k| w[k] * self.outcome_cost(k, angles[k])).sum();
        Some((cost, w))
    }
}

/// Weights making `sum_k w_k |u_k><u_k| = I`, if they exist and are nonnegative.
fn povm_weights(angles: &[f64; 3]) -> Option<[f64; 3]> {
    let cols: Vec<[f64; 3]> = angles
        .iter()
        .map(|t| {
            let (c, s) = (t.cos(), t.sin());
            [c * c, c * s, s * s]
        })
        .collect();
    let det3 = |a: [f64; 3], b: [f64; 3], c: [f64; 3]| {
        a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1])
            + c[0] * (a[1] * b[2] - a[2] * b[1])
    };
    let det = det3(cols[0], cols[1], cols[2]);
    if det.abs() < 1e-12 {
        return None;
    }
    let rhs = [1.0, 0.0, 1.0];
    let mut w = [
        det3(rhs, cols[1], cols[2]) / det,
        det3(cols[0], rhs, cols[2]) / det,
        det3(cols[0], cols[1], rhs) / det,
    ];
    if w.iter().any(|x| *x < -WEIGHT_TOL || !x.is_finite()) {
        return None;
    }
    w.iter_mut().for_each(|x| *x = x.max(0.0));
    let mut sum = [0.0; 3];
    for (k, col) in cols.iter().enumerate() {
        for r in 0..3 {
            sum[r] += w[k] * col[r];
        }
    }
    let defect = ((sum[0] - 1.0).powi(2) + 2.0 * sum[1].powi(2) + (sum[2] - 1.0).powi(2)).sqrt();
    (defect <= COMPLETENESS_TOL).then_some(w)
}

/// Exhaustive search for the cheapest measurement on a qubit-sized space.
///
/// - `N = 2`: projective measurements `{|u><u|, I - |u><u|}` with the angle of
///   `u` swept over `[0, pi)` at `resolution` steps.
/// - `N = 3`: every assignment of an orthonormal pair (or the identity) to the
///   hypotheses at `resolution` steps, then rank-one three-outcome POVMs on a
///   `min(resolution, POVM_GRID_MAX)`-step grid per angle with weights solved
///   from the completeness relation, then a local pattern search around the
///   best grid point.
pub fn grid_oracle_dim2(
    h: &HypothesisSet,
    k: &CostMatrix,
    resolution: usize,
) -> Result<GridOptimum> {
    check_dim(2, h.dim())?;
    check_dim(h.len(), k.n())?;
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "grid resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    let n = h.len();
    let problem = Dim2Problem {
        n,
        states: h
            .states()
            .iter()
            .map(|s| {
                let m = s.matrix();
                (m.get(0, 0), m.get(0, 1), m.get(1, 1))
            })
            .collect(),
        priors: h.priors().to_vec(),
        costs: (0..n)
            .map(|i| (0..n).map(|j| k.get(i, j)).collect())
            .collect(),
    };
    match n {
        2 => Ok(sweep_two(&problem, resolution)),
        3 => Ok(sweep_three(&problem, resolution)),
        _ => Err(Error::InvalidArgument(format!(
            "grid oracle supports 2 or 3 hypotheses, got {n}"
        ))),
    }
}

fn sweep_two(p: &Dim2Problem, resolution: usize) -> GridOptimum {
    let mut best = (f64::INFINITY, 0.0);
    for step in 0..resolution {
        let t = PI * step as f64 / resolution as f64;
        let cost = p.outcome_cost(0, t) + p.outcome_cost(1, t + FRAC_PI_2);
        if cost < best.0 {
            best = (cost, t);
        }
    }
    GridOptimum {
        cost: best.0,
        elements: vec![rank_one(1.0, best.1), rank_one(1.0, best.1 + FRAC_PI_2)],
        kind: MeasurementKind::Projective,
    }
}

fn sweep_three(p: &Dim2Problem, resolution: usize) -> GridOptimum {
    // Projective: u to hypothesis a, u_perp to b; a == b is the identity.
    let mut best_pair = (f64::INFINITY, 0.0, 0, 0);
    for step in 0..resolution {
        let t = PI * step as f64 / resolution as f64;
        for a in 0..3 {
            for b in 0..3 {
                let cost = p.outcome_cost(a, t) + p.outcome_cost(b, t + FRAC_PI_2);
                if cost < best_pair.0 {
                    best_pair = (cost, t, a, b);
                }
            }
        }
    }
    let (cost, t, a, b) = best_pair;
    let mut elements = vec![SymMatrix::zeros(2); 3];
    elements[a] = rank_one(1.0, t);
    elements[b] = elements[b].add(&rank_one(1.0, t + FRAC_PI_2)).expect("2x2");
    let mut best = GridOptimum {
        cost,
        elements,
        kind: MeasurementKind::Projective,
    };

    // Rank-one POVMs on a coarser grid.
    let m = resolution.min(POVM_GRID_MAX);
    let grid: Vec<f64> = (0..m).map(|s| PI * s as f64 / m as f64).collect();
    let table: Vec<Vec<f64>> = (0..3)
        .map(|i| grid.iter().map(|&t| p.outcome_cost(i, t)).collect())
        .collect();
    let mut best_povm: Option<(f64, [f64; 3], [f64; 3])> = None;
    for s1 in 0..m {
        for s2 in 0..m {
            if s2 == s1 {
                continue;
            }
            for s3 in 0..m {
                if s3 == s1 || s3 == s2 {
                    continue;
                }
                let angles = [grid[s1], grid[s2], grid[s3]];
                let Some(w) = povm_weights(&angles) else {
                    continue;
                };
                let cost = w[0] * table[0][s1] + w[1] * table[1][s2] + w[2] * table[2][s3];
                if best_povm.is_none_or(|(c, _, _)| cost < c) {
                    best_povm = Some((cost, angles, w));
                }
            }
        }
    }

    if let Some((mut cost, mut angles, mut weights)) = best_povm {
        let mut step = PI / m as f64;
        while step > REFINE_MIN_STEP {
            let mut improved = false;
            for axis in 0..3 {
                for dir in [-1.0, 1.0] {
                    let mut trial = angles;
                    trial[axis] += dir * step;
                    if let Some((c, w)) = p.povm_cost(&trial) {
                        if c < cost {
                            cost = c;
                            angles = trial;
                            weights = w;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if cost < best.cost {
            best = GridOptimum {
                cost,
                elements: (0..3).map(|k| rank_one(weights[k], angles[k])).collect(),
                kind: MeasurementKind::Povm,
            };
        }
    }
    best
}
