//! Evaluation criteria for priority vectors on incomplete matrices.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ordinal::{evaluate_objective, ordinal_from_weights};
use crate::pcm::{IncompletePcm, PriorityVector};

pub const WEIGHT_EQUALITY_TOL: f64 = 1e-9;

/// Relative equality used wherever two weights are compared for a tie.
pub fn weights_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= WEIGHT_EQUALITY_TOL * a.abs().max(b.abs())
}

fn check_positive(w: &PriorityVector) -> Result<()> {
    match w.weights().iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        Some(k) => Err(Error::NonPositiveWeights(k)),
        None => Ok(()),
    }
}

fn check_len(pcm: &IncompletePcm, w: &PriorityVector) -> Result<()> {
    if w.len() != pcm.n() {
        return Err(Error::DimensionMismatch {
            expected: pcm.n(),
            got: w.len(),
        });
    }
    Ok(())
}

/// Ordinal violations over ordered compared pairs; ties count one half.
pub fn compute_mvs(pcm: &IncompletePcm, w: &PriorityVector) -> Result<f64> {
    check_len(pcm, w)?;
    check_positive(w)?;
    let w = w.weights();
    let n = pcm.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j || !pcm.is_present(i, j) {
                continue;
            }
            let a = pcm.get(i, j);
            let tie_w = weights_equal(w[i], w[j]);
            let tie_a = a == 1.0;
            total += if !tie_w && w[i] > w[j] && a < 1.0 {
                1.0
            } else if tie_w != tie_a {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(total)
}

/// `Σ (a_ij − w_i/w_j)²` over ordered compared pairs.
pub fn compute_tds(pcm: &IncompletePcm, w: &PriorityVector) -> Result<f64> {
    check_len(pcm, w)?;
    check_positive(w)?;
    let w = w.weights();
    let n = pcm.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && pcm.is_present(i, j) {
                let d = pcm.get(i, j) - w[i] / w[j];
                total += d * d;
            }
        }
    }
    Ok(total)
}

/// `|a_i/a_j − b_i/b_j|` on compared pairs, zero elsewhere.
pub fn compute_delta(pcm: &IncompletePcm, a: &PriorityVector, b: &PriorityVector) -> Result<DMatrix<f64>> {
    for w in [a, b] {
        check_len(pcm, w)?;
        check_positive(w)?;
    }
    let (a, b) = (a.weights(), b.weights());
    let n = pcm.n();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i != j && pcm.is_present(i, j) {
            (a[i] / a[j] - b[i] / b[j]).abs()
        } else {
            0.0
        }
    }))
}

/// Largest `k` entries of a deviation matrix as `(i, j, value)`, ties broken
/// row-major.
pub fn largest_entries(delta: &DMatrix<f64>, k: usize) -> Vec<(usize, usize, f64)> {
    let mut all: Vec<_> = (0..delta.nrows())
        .flat_map(|i| (0..delta.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, delta[(i, j)]))
        .collect();
    all.sort_by(|x, y| y.2.total_cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    all.truncate(k);
    all
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub sigma: f64,
    pub tau: f64,
    pub mvs: f64,
    pub tds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<Vec<f64>>>,
}

impl MetricsReport {
    /// σ and τ are those of the order induced by `w`.
    pub fn compute(pcm: &IncompletePcm, w: &PriorityVector, delta: f64) -> Result<Self> {
        let mvs = compute_mvs(pcm, w)?;
        let tds = compute_tds(pcm, w)?;
        let x = ordinal_from_weights(pcm, w)?;
        let obj = evaluate_objective(pcm, &x, delta);
        Ok(Self {
            sigma: obj.sigma,
            tau: obj.tau,
            mvs,
            tds,
            delta: None,
        })
    }

    pub fn with_delta(mut self, delta: &DMatrix<f64>) -> Self {
        self.delta = Some(
            (0..delta.nrows())
                .map(|i| delta.row(i).iter().copied().collect())
                .collect(),
        );
        self
    }
}
