//! Logarithmic least squares, with and without ordinal separation constraints.
//!
//! In log-space `y = ln w` the objective is
//! `F(y) = Σ_{compared i<j} (ln a_ij − y_i + y_j)²`, whose gradient is
//! `2(L y − r)` with `L` the Laplacian of the comparison graph and
//! `r = P·1`. Without constraints the minimizer solves `L y = r`; with
//! constraints `y_i ≥ y_j + ε` the optimum is characterized by
//! `L y = ½(Λ − Λᵀ)1 + r`, complementary slackness, and `Λ ≥ 0`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::ComparisonGraph;
use crate::ordinal::OrdinalPreferenceMatrix;
use crate::pcm::{Normalization, PriorityVector};

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const KKT_TOL: f64 = 1e-8;
const MAX_ACTIVE_SET_ITERATIONS: usize = 10_000;

/// `Σ_{compared i<j} (ln a_ij − y_i + y_j)²`. Gauge invariant.
pub fn log_ls_objective(graph: &ComparisonGraph, y: &[f64]) -> f64 {
    let p = graph.log_matrix();
    graph
        .edges()
        .iter()
        .map(|&(i, j)| {
            let d = p[(i, j)] - y[i] + y[j];
            d * d
        })
        .sum()
}

/// `2(L y − r)`.
pub fn log_ls_gradient(graph: &ComparisonGraph, y: &[f64]) -> DVector<f64> {
    let y = DVector::from_column_slice(y);
    (graph.laplacian() * y - graph.log_row_sums()) * 2.0
}

/// Solves `L y = r` with `y[gauge] = 0` through the reduced positive-definite
/// system.
pub fn ills_log_weights(graph: &ComparisonGraph, gauge: usize) -> Result<DVector<f64>> {
    let n = graph.n();
    if gauge >= n {
        return Err(Error::InvalidParameter(format!("gauge index {gauge} out of range")));
    }
    if !graph.is_connected() {
        return Err(Error::Disconnected);
    }
    let keep: Vec<usize> = (0..n).filter(|&k| k != gauge).collect();
    let l = graph.laplacian();
    let r = graph.log_row_sums();
    let reduced = DMatrix::from_fn(n - 1, n - 1, |a, b| l[(keep[a], keep[b])]);
    let rhs = DVector::from_fn(n - 1, |a, _| r[keep[a]]);
    let chol = reduced.cholesky().ok_or(Error::Disconnected)?;
    let sol = chol.solve(&rhs);
    let mut y = DVector::zeros(n);
    for (a, &k) in keep.iter().enumerate() {
        y[k] = sol[a];
    }
    Ok(y)
}

/// Unconstrained incomplete logarithmic least squares, normalized sum-one.
pub fn solve_ills(graph: &ComparisonGraph) -> Result<PriorityVector> {
    let y = ills_log_weights(graph, graph.n() - 1)?;
    PriorityVector::from_log_weights(y.as_slice(), Normalization::SumOne)
}

/// Log-least-squares problem with separation constraints `y_i ≥ y_j + ε`.
#[derive(Debug, Clone)]
pub struct LogLsProblem {
    pub graph: ComparisonGraph,
    pub constraints: Vec<(usize, usize)>,
    pub epsilon: f64,
    pub gauge: usize,
}

impl LogLsProblem {
    pub fn new(graph: ComparisonGraph, constraints: Vec<(usize, usize)>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let n = graph.n();
        if constraints.iter().any(|&(i, j)| i >= n || j >= n || i == j) {
            return Err(Error::InvalidParameter("constraint index out of range".into()));
        }
        Ok(Self {
            gauge: n - 1,
            graph,
            constraints,
            epsilon,
        })
    }

    /// One constraint per `x_ij = 1`.
    pub fn from_ordinal(graph: ComparisonGraph, x: &OrdinalPreferenceMatrix, epsilon: f64) -> Result<Self> {
        if x.n() != graph.n() {
            return Err(Error::DimensionMismatch {
                expected: graph.n(),
                got: x.n(),
            });
        }
        Self::new(graph, x.preferred_pairs(), epsilon)
    }

    pub fn with_gauge(mut self, gauge: usize) -> Self {
        self.gauge = gauge;
        self
    }

    fn constraint_order(&self) -> Result<Vec<usize>> {
        // Kahn's algorithm, dominated nodes first
        let n = self.graph.n();
        let mut remaining_below = vec![0usize; n];
        let mut above: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(i, j) in &self.constraints {
            remaining_below[i] += 1;
            above[j].push(i);
        }
        let mut ready: Vec<usize> = (0..n).filter(|&k| remaining_below[k] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(k) = ready.pop() {
            order.push(k);
            for &i in &above[k] {
                remaining_below[i] -= 1;
                if remaining_below[i] == 0 {
                    ready.push(i);
                }
            }
        }
        if order.len() != n {
            return Err(Error::Infeasible);
        }
        Ok(order)
    }
}

#[derive(Debug, Clone)]
pub struct KktCertificate {
    /// `Λ_ij` for each constraint `y_i ≥ y_j + ε`, zero elsewhere.
    pub lambda: DMatrix<f64>,
    /// `‖L y − ½(Λ − Λᵀ)1 − r‖∞`.
    pub stationarity: f64,
    /// `max |Λ_ij (y_j − y_i + ε)|` over constraints.
    pub complementarity: f64,
    /// `max(0, y_j − y_i + ε)` over constraints.
    pub primal_feasibility: f64,
    /// `max(0, −Λ_ij)`.
    pub dual_feasibility: f64,
}

impl KktCertificate {
    pub fn max_residual(&self) -> f64 {
        self.stationarity
            .max(self.complementarity)
            .max(self.primal_feasibility)
            .max(self.dual_feasibility)
    }

    pub fn is_accepted(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

pub fn verify_kkt(problem: &LogLsProblem, y: &[f64], lambda: &DMatrix<f64>) -> KktCertificate {
    let g = &problem.graph;
    let n = g.n();
    let yv = DVector::from_column_slice(y);
    let ones = DVector::from_element(n, 1.0);
    let skew = (lambda - lambda.transpose()) * ones * 0.5;
    let stationarity = (g.laplacian() * &yv - skew - g.log_row_sums()).amax();
    let mut complementarity: f64 = 0.0;
    let mut primal: f64 = 0.0;
    for &(i, j) in &problem.constraints {
        let slack = y[j] - y[i] + problem.epsilon;
        complementarity = complementarity.max((lambda[(i, j)] * slack).abs());
        primal = primal.max(slack);
    }
    let dual = lambda.iter().fold(0.0f64, |m, &v| m.max(-v));
    KktCertificate {
        lambda: lambda.clone(),
        stationarity,
        complementarity,
        primal_feasibility: primal,
        dual_feasibility: dual,
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedSolution {
    pub weights: PriorityVector,
    /// Log-weights with `y[gauge] = 0`.
    pub log_weights: Vec<f64>,
    pub objective: f64,
    pub certificate: KktCertificate,
    pub active: Vec<(usize, usize)>,
    pub iterations: usize,
}

/// Primal active-set method. The starting point lifts the unconstrained
/// optimum just enough to satisfy every constraint.
pub fn solve_constrained(problem: &LogLsProblem) -> Result<ConstrainedSolution> {
    let graph = &problem.graph;
    let n = graph.n();
    let eps = problem.epsilon;
    let order = problem.constraint_order()?;
    let unconstrained = ills_log_weights(graph, problem.gauge)?;

    let mut below: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &problem.constraints {
        below[i].push(j);
    }
    let mut y = unconstrained.clone();
    for &k in &order {
        for &j in &below[k] {
            y[k] = y[k].max(y[j] + eps);
        }
    }
    let shift = y[problem.gauge];
    y.add_scalar_mut(-shift);

    let hessian = graph.laplacian() * 2.0;
    let r2 = graph.log_row_sums() * 2.0;
    let cons = &problem.constraints;
    let mut working: Vec<usize> = Vec::new();
    let mut in_working = vec![false; cons.len()];
    let mut multipliers: Vec<f64> = Vec::new();

    for iteration in 0..MAX_ACTIVE_SET_ITERATIONS {
        let grad = &hessian * &y - &r2;
        let (step, mu) = solve_eqp(&hessian, &grad, cons, &working, problem.gauge)?;
        let scale = 1.0 + y.amax();
        if step.amax() <= 1e-13 * scale {
            let most_negative = mu
                .iter()
                .enumerate()
                .filter(|(_, &m)| m < -1e-12)
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)));
            match most_negative {
                None => {
                    multipliers = mu;
                    return finish(problem, y, &working, &multipliers, iteration + 1);
                }
                Some((pos, _)) => {
                    in_working[working[pos]] = false;
                    working.remove(pos);
                    continue;
                }
            }
        }
        let mut alpha = 1.0;
        let mut blocking = None;
        for (c, &(i, j)) in cons.iter().enumerate() {
            if in_working[c] {
                continue;
            }
            let ap = step[i] - step[j];
            if ap < -1e-15 * scale {
                let slack = (y[i] - y[j] - eps).max(0.0);
                let t = slack / -ap;
                if t < alpha {
                    alpha = t;
                    blocking = Some(c);
                }
            }
        }
        y += step * alpha;
        if let Some(c) = blocking {
            in_working[c] = true;
            working.push(c);
        }
        multipliers.clear();
    }
    Err(Error::MaxIterations(MAX_ACTIVE_SET_ITERATIONS))
}

/// Equality-constrained step: minimize `½pᵀHp + gᵀp` with `a_c·p = 0` for
/// the working constraints and `p[gauge] = 0`. Returns the step and the
/// multipliers of the working constraints (`g + Hp = Σ μ_c a_c`).
fn solve_eqp(
    hessian: &DMatrix<f64>,
    grad: &DVector<f64>,
    cons: &[(usize, usize)],
    working: &[usize],
    gauge: usize,
) -> Result<(DVector<f64>, Vec<f64>)> {
    let n = hessian.nrows();
    let m = working.len() + 1;
    let mut kkt = DMatrix::zeros(n + m, n + m);
    kkt.view_mut((0, 0), (n, n)).copy_from(hessian);
    for (row, &c) in working.iter().enumerate() {
        let (i, j) = cons[c];
        for (col, v) in [(i, 1.0), (j, -1.0)] {
            kkt[(n + row, col)] = v;
            kkt[(col, n + row)] = -v;
        }
    }
    kkt[(n + m - 1, gauge)] = 1.0;
    kkt[(gauge, n + m - 1)] = -1.0;
    let mut rhs = DVector::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&(-grad));
    let sol = kkt.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    let step = sol.rows(0, n).into_owned();
    let mu = sol.rows(n, working.len()).iter().copied().collect();
    Ok((step, mu))
}

fn finish(
    problem: &LogLsProblem,
    y: DVector<f64>,
    working: &[usize],
    multipliers: &[f64],
    iterations: usize,
) -> Result<ConstrainedSolution> {
    let n = problem.graph.n();
    let mut lambda = DMatrix::zeros(n, n);
    // F carries the factor of the squared residuals; the stationarity
    // condition `L y = ½(Λ − Λᵀ)1 + r` uses the same scaling
    for (&c, &mu) in working.iter().zip(multipliers) {
        let (i, j) = problem.constraints[c];
        lambda[(i, j)] = mu.max(0.0);
    }
    let certificate = verify_kkt(problem, y.as_slice(), &lambda);
    let objective = log_ls_objective(&problem.graph, y.as_slice());
    let weights = PriorityVector::from_log_weights(y.as_slice(), Normalization::SumOne)?;
    Ok(ConstrainedSolution {
        weights,
        log_weights: y.iter().copied().collect(),
        objective,
        certificate,
        active: working.iter().map(|&c| problem.constraints[c]).collect(),
        iterations,
    })
}
