//! Reference prioritization methods: eigenvector, distance least squares and
//! weighted least squares on incomplete matrices.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::cardinal::{ills_log_weights, solve_ills};
use crate::error::{Error, Result};
use crate::graph::ComparisonGraph;
use crate::metrics::compute_tds;
use crate::pcm::{IncompletePcm, Normalization, PriorityVector};
use crate::pipeline::Method;

pub const EV_MAX_ITERATIONS: usize = 100_000;
pub const EV_RESIDUAL_TOL: f64 = 1e-12;
pub const IDLS_DEFAULT_RESTARTS: usize = 50;
pub const IDLS_GRADIENT_TOL: f64 = 1e-8;
const IDLS_MAX_ITERATIONS: usize = 20_000;
const IDLS_NEWTON_SWITCH: f64 = 1e-3;
const IDLS_JITTER_STD: f64 = 0.5;
const IDLS_SEED: u64 = 0x1d15_5eed;

#[derive(Debug, Clone, Serialize)]
pub struct BaselineResult {
    pub method: Method,
    /// Sum-one weights as produced by the method; may contain nonpositive
    /// entries for IWLS.
    pub raw_weights: Vec<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl BaselineResult {
    pub fn is_positive(&self) -> bool {
        self.raw_weights.iter().all(|&w| w > 0.0)
    }

    /// Fails with `NonPositiveWeights` when the method produced a
    /// nonpositive component.
    pub fn priority_vector(&self) -> Result<PriorityVector> {
        PriorityVector::from_weights(&self.raw_weights, Normalization::SumOne)
    }
}

fn connected_graph(pcm: &IncompletePcm) -> Result<ComparisonGraph> {
    let g = ComparisonGraph::from_pcm(pcm);
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    Ok(g)
}

pub fn solve_ills_baseline(pcm: &IncompletePcm) -> Result<BaselineResult> {
    let g = connected_graph(pcm)?;
    let w = solve_ills(&g)?;
    let y = ills_log_weights(&g, g.n() - 1)?;
    let residual = (g.laplacian() * &y - g.log_row_sums()).amax();
    Ok(BaselineResult {
        method: Method::Ills,
        raw_weights: w.weights().to_vec(),
        diagnostics: BTreeMap::from([("laplacian_residual".to_string(), residual)]),
    })
}

/// `D⁻¹(A − I)`, where `D` holds the comparison counts.
pub fn eigen_matrix(pcm: &IncompletePcm, g: &ComparisonGraph) -> DMatrix<f64> {
    let n = pcm.n();
    DMatrix::from_fn(n, n, |i, j| {
        if i != j && pcm.is_present(i, j) {
            pcm.get(i, j) / g.degree(i) as f64
        } else {
            0.0
        }
    })
}

/// Power iteration on `M + I`, which has the same Perron vector as `M` but
/// no other eigenvalue of equal modulus.
pub fn solve_ev(pcm: &IncompletePcm) -> Result<BaselineResult> {
    let g = connected_graph(pcm)?;
    let m = eigen_matrix(pcm, &g);
    let n = pcm.n();
    let shifted = &m + DMatrix::identity(n, n);
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for iteration in 1..=EV_MAX_ITERATIONS {
        let mut next = &shifted * &v;
        next /= next.sum();
        v = next;
        let mv = &m * &v;
        let lambda = mv.sum() / v.sum();
        let residual = (&mv - &v * lambda).amax();
        if residual <= EV_RESIDUAL_TOL {
            return Ok(BaselineResult {
                method: Method::Ev,
                raw_weights: v.iter().copied().collect(),
                diagnostics: BTreeMap::from([
                    ("iterations".to_string(), iteration as f64),
                    ("eigenvalue".to_string(), lambda),
                    ("residual".to_string(), residual),
                ]),
            });
        }
    }
    Err(Error::NoConvergence(EV_MAX_ITERATIONS))
}

/// `Σ (a_ij − e^{u_i−u_j})²` over ordered compared pairs, and its gradient.
fn idls_value_and_gradient(pcm: &IncompletePcm, edges: &[(usize, usize)], u: &[f64]) -> (f64, Vec<f64>) {
    let mut f = 0.0;
    let mut grad = vec![0.0; u.len()];
    for &(i, j) in edges {
        for (p, q) in [(i, j), (j, i)] {
            let e = (u[p] - u[q]).exp();
            let r = pcm.get(p, q) - e;
            f += r * r;
            let g = -2.0 * r * e;
            grad[p] += g;
            grad[q] -= g;
        }
    }
    (f, grad)
}

struct LocalRun {
    u: Vec<f64>,
    value: f64,
    gradient_norm: f64,
    iterations: usize,
}

fn inf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Hessian of the log-space objective. It annihilates the all-ones vector.
fn idls_hessian(pcm: &IncompletePcm, edges: &[(usize, usize)], u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for &(i, j) in edges {
        for (p, q) in [(i, j), (j, i)] {
            let e = (u[p] - u[q]).exp();
            let c = 2.0 * e * (2.0 * e - pcm.get(p, q));
            h[(p, p)] += c;
            h[(q, q)] += c;
            h[(p, q)] -= c;
            h[(q, p)] -= c;
        }
    }
    h
}

/// Solves `(H + 11ᵀ/n + μI) d = −g`, raising `μ` until the matrix is
/// positive definite. `g` is orthogonal to the all-ones null direction of `H`.
fn newton_direction(h: DMatrix<f64>, g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    let scale = h.amax().max(1.0);
    let base = h + DMatrix::from_element(n, n, scale / n as f64);
    let rhs = -DVector::from_column_slice(g);
    let mut mu = 0.0;
    for _ in 0..40 {
        let shifted = &base + DMatrix::identity(n, n) * mu;
        if let Some(c) = shifted.cholesky() {
            return Some(c.solve(&rhs).iter().copied().collect());
        }
        mu = if mu == 0.0 { 1e-10 * scale } else { mu * 10.0 };
    }
    None
}

/// Armijo backtracking along `dir`; `None` when no decrease is found. Once
/// the decrease falls below rounding, a step that keeps `f` flat and shrinks
/// the gradient is accepted too.
#[allow(clippy::too_many_arguments)]
fn backtrack(
    pcm: &IncompletePcm,
    edges: &[(usize, usize)],
    u: &[f64],
    f: f64,
    grad_norm: f64,
    slope: f64,
    dir: &[f64],
    mut t: f64,
) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let flat = 1e-13 * f.abs().max(1.0);
    while t > 1e-20 {
        let cand: Vec<f64> = u.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        let (fc, gc) = idls_value_and_gradient(pcm, edges, &cand);
        if fc <= f + 1e-4 * t * slope || (fc <= f + flat && inf_norm(&gc) < grad_norm) {
            return Some((cand, fc, gc));
        }
        t *= 0.5;
    }
    None
}

/// Gradient descent in log-space with Barzilai-Borwein steps and Armijo
/// backtracking, followed by Newton steps once the gradient is small.
fn idls_descent(pcm: &IncompletePcm, edges: &[(usize, usize)], mut u: Vec<f64>) -> LocalRun {
    let (mut f, mut g) = idls_value_and_gradient(pcm, edges, &u);
    let mut step = 1.0 / (1.0 + inf_norm(&g));
    let mut iterations = 0;
    while iterations < IDLS_MAX_ITERATIONS && inf_norm(&g) > IDLS_GRADIENT_TOL {
        iterations += 1;
        let gg: f64 = g.iter().map(|v| v * v).sum();
        let newton = if inf_norm(&g) <= IDLS_NEWTON_SWITCH {
            newton_direction(idls_hessian(pcm, edges, &u), &g)
        } else {
            None
        };
        let accepted = match &newton {
            Some(d) => {
                let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
                if slope < 0.0 {
                    backtrack(pcm, edges, &u, f, inf_norm(&g), slope, d, 1.0)
                } else {
                    None
                }
            }
            None => None,
        };
        let (u_new, f_new, g_new) = match accepted {
            Some(found) => found,
            None => {
                let dir: Vec<f64> = g.iter().map(|v| -v).collect();
                match backtrack(pcm, edges, &u, f, inf_norm(&g), -gg, &dir, step) {
                    Some(found) => found,
                    None => break,
                }
            }
        };
        let s: Vec<f64> = u_new.iter().zip(&u).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yk).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        step = if sy > 0.0 {
            (ss / sy).clamp(1e-12, 1e12)
        } else {
            step * 2.0
        };
        u = u_new;
        f = f_new;
        g = g_new;
    }
    LocalRun {
        gradient_norm: inf_norm(&g),
        u,
        value: f,
        iterations,
    }
}

/// Multi-start local minimization of the total squared ratio deviation.
/// Restart 0 starts from the logarithmic least-squares solution; the rest
/// add Gaussian jitter to its logarithm. Global optimality is not claimed.
pub fn solve_idls(pcm: &IncompletePcm, restarts: usize) -> Result<BaselineResult> {
    if restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    let g = connected_graph(pcm)?;
    let edges = g.edges().to_vec();
    let start = ills_log_weights(&g, g.n() - 1)?;
    let start_value = idls_value_and_gradient(pcm, &edges, start.as_slice()).0;
    let normal = Normal::new(0.0, IDLS_JITTER_STD).expect("valid std");
    let runs: Vec<LocalRun> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut u: Vec<f64> = start.iter().copied().collect();
            if k > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(IDLS_SEED);
                rng.set_stream(k as u64);
                u.iter_mut().for_each(|v| *v += normal.sample(&mut rng));
            }
            idls_descent(pcm, &edges, u)
        })
        .collect();
    // best converged run; values equal up to rounding fall back to the
    // lexicographically smallest weight vector
    let candidates: Vec<(usize, &LocalRun, PriorityVector)> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.gradient_norm <= IDLS_GRADIENT_TOL)
        .map(|(k, r)| Ok((k, r, PriorityVector::from_log_weights(&r.u, Normalization::SumOne)?)))
        .collect::<Result<_>>()?;
    let Some(min_value) = candidates.iter().map(|c| c.1.value).min_by(f64::total_cmp) else {
        let iterations = runs.iter().map(|r| r.iterations).max().unwrap_or(0);
        return Err(Error::NoConvergence(iterations));
    };
    let tie = 1e-12 * min_value.abs().max(1.0);
    let (index, run, w) = candidates
        .into_iter()
        .filter(|c| c.1.value <= min_value + tie)
        .min_by(|a, b| {
            a.2.weights()
                .iter()
                .zip(b.2.weights())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one candidate");
    let converged = runs.iter().filter(|r| r.gradient_norm <= IDLS_GRADIENT_TOL).count();
    Ok(BaselineResult {
        method: Method::Idls,
        raw_weights: w.weights().to_vec(),
        diagnostics: BTreeMap::from([
            ("objective".to_string(), run.value),
            ("start_objective".to_string(), start_value),
            ("gradient_norm".to_string(), run.gradient_norm),
            ("iterations".to_string(), run.iterations as f64),
            ("restarts".to_string(), restarts as f64),
            ("converged_restarts".to_string(), converged as f64),
            ("best_restart".to_string(), index as f64),
        ]),
    })
}

/// `Q` with `wᵀQw = Σ (a_ij w_j − w_i)²` over ordered compared pairs.
pub fn iwls_quadratic_form(pcm: &IncompletePcm) -> DMatrix<f64> {
    let n = pcm.n();
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && pcm.is_present(i, j) {
                let a = pcm.get(i, j);
                q[(i, i)] += 1.0;
                q[(j, j)] += a * a;
                q[(i, j)] -= a;
                q[(j, i)] -= a;
            }
        }
    }
    q
}

/// Exact solution of `min wᵀQw` subject to `Σ w = 1` through its linear KKT
/// system. Nonpositive components are reported, not repaired.
pub fn solve_iwls(pcm: &IncompletePcm) -> Result<BaselineResult> {
    connected_graph(pcm)?;
    let n = pcm.n();
    let q = iwls_quadratic_form(pcm);
    let mut kkt = DMatrix::zeros(n + 1, n + 1);
    kkt.view_mut((0, 0), (n, n)).copy_from(&(&q * 2.0));
    for k in 0..n {
        kkt[(k, n)] = 1.0;
        kkt[(n, k)] = 1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let sol = kkt.clone().lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    let residual = (&kkt * &sol - &rhs).amax();
    let w: Vec<f64> = sol.rows(0, n).iter().copied().collect();
    let wv = DVector::from_column_slice(&w);
    let objective = (wv.transpose() * &q * &wv)[(0, 0)];
    let nonpositive = w.iter().filter(|&&v| v <= 0.0).count();
    if nonpositive > 0 {
        log::warn!("IWLS produced {nonpositive} nonpositive weight(s)");
    }
    Ok(BaselineResult {
        method: Method::Iwls,
        raw_weights: w,
        diagnostics: BTreeMap::from([
            ("objective".to_string(), objective),
            ("kkt_residual".to_string(), residual),
            ("nonpositive_weights".to_string(), nonpositive as f64),
        ]),
    })
}

/// TDs of a baseline's weights, or `NonPositiveWeights`.
pub fn baseline_tds(pcm: &IncompletePcm, r: &BaselineResult) -> Result<f64> {
    compute_tds(pcm, &r.priority_vector()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn complete_consistent(w: &[f64]) -> IncompletePcm {
        let n = w.len();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((i, j, w[i] / w[j]));
            }
        }
        IncompletePcm::from_pairs(n, &pairs).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn two_by_two_closed_forms() {
        let ev = solve_ev(&IncompletePcm::from_pairs(2, &[(0, 1, 4.0)]).unwrap()).unwrap();
        assert!(close(&ev.raw_weights, &[0.8, 0.2], 1e-12));
        let iwls = solve_iwls(&IncompletePcm::from_pairs(2, &[(0, 1, 3.0)]).unwrap()).unwrap();
        assert!(close(&iwls.raw_weights, &[0.75, 0.25], 1e-12));
        let idls = solve_idls(&IncompletePcm::from_pairs(2, &[(0, 1, 2.0)]).unwrap(), 5).unwrap();
        assert!(close(&idls.raw_weights, &[2.0 / 3.0, 1.0 / 3.0], 1e-9));
        assert!(idls.diagnostics["objective"] < 1e-18);
    }

    #[test]
    fn consistent_complete_matrices_agree() {
        let w = [0.4, 0.25, 0.2, 0.1, 0.05];
        let pcm = complete_consistent(&w);
        for r in [
            solve_ills_baseline(&pcm).unwrap(),
            solve_ev(&pcm).unwrap(),
            solve_idls(&pcm, 3).unwrap(),
            solve_iwls(&pcm).unwrap(),
        ] {
            assert!(close(&r.raw_weights, &w, 1e-9), "{:?}", r.method);
        }
    }

    #[test]
    fn idls_is_tds_optimal_against_other_methods() {
        let pcm = fixtures::reversal_example();
        let idls = solve_idls(&pcm, IDLS_DEFAULT_RESTARTS).unwrap();
        let best = idls.diagnostics["objective"];
        assert!(best <= idls.diagnostics["start_objective"]);
        for r in [
            solve_ills_baseline(&pcm).unwrap(),
            solve_ev(&pcm).unwrap(),
            solve_iwls(&pcm).unwrap(),
        ] {
            if let Ok(t) = baseline_tds(&pcm, &r) {
                assert!(best <= t + 1e-9, "{:?}", r.method);
            }
        }
    }

    #[test]
    fn iwls_kkt_residual() {
        let r = solve_iwls(&fixtures::reversal_example()).unwrap();
        assert!(r.diagnostics["kkt_residual"] <= 1e-10);
        assert!((r.raw_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_input_is_rejected() {
        let pcm = IncompletePcm::from_pairs(4, &[(0, 1, 2.0), (2, 3, 3.0)]).unwrap();
        assert!(matches!(solve_ev(&pcm), Err(Error::Disconnected)));
        assert!(matches!(solve_iwls(&pcm), Err(Error::Disconnected)));
        assert!(matches!(solve_idls(&pcm, 1), Err(Error::Disconnected)));
    }

    #[test]
    fn idls_is_deterministic() {
        let pcm = fixtures::tie_cycle();
        let a = solve_idls(&pcm, 10).unwrap();
        let b = solve_idls(&pcm, 10).unwrap();
        assert_eq!(a.raw_weights, b.raw_weights);
    }
}
