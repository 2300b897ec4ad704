//! Weighted ordinal ranking.
//!
//! Finds a strict partial order `X` over the alternatives maximizing
//! `σ + τ`, where `σ = Σ_{compared i<j} ln(a_ij)(x_ij − x_ji)` rewards
//! agreement with the stated preferences (weighted by their log-strength) and
//! `τ = −δ · #{tie pairs with a preference set}` discourages breaking ties.
//!
//! Two solvers are provided. [`solve_exact_ilp`] is a depth-first
//! branch-and-bound over the compared pairs and is always applicable.
//! [`solve_fast_path`] breaks each cycle of the dominance graph at its unique
//! weakest edge and closes transitively; it is only valid when all cycles are
//! non-ambiguous and pairwise edge-disjoint.
//!
//! Solutions are canonical: pairs that were never compared are set only when
//! transitivity forces them. Two optima are distinct when their canonical
//! matrices differ.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{check_uniqueness_conditions, ComparisonGraph, DominanceGraph, UniquenessCheck};
use crate::metrics::weights_equal;
use crate::pcm::{IncompletePcm, PriorityVector};

pub const DEFAULT_DELTA: f64 = 1e-4;
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(10);
/// Objective values closer than this are treated as equal optima.
pub const OBJECTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    FastPath,
    ExactIlp,
    FromWeights,
}

/// Strict partial order over `n <= 64` alternatives, stored as row bitsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalPreferenceMatrix {
    n: usize,
    rows: Vec<u64>,
    provenance: Provenance,
    unique: bool,
    optimum_count: Option<usize>,
    maximal_optimum_count: Option<usize>,
}

impl OrdinalPreferenceMatrix {
    pub fn from_bool_rows(x: &[Vec<bool>], provenance: Provenance) -> Result<Self> {
        let n = x.len();
        if n > 64 {
            return Err(Error::TooLarge(n));
        }
        let mut rows = vec![0u64; n];
        for (i, r) in x.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NonSquare {
                    row: i,
                    len: r.len(),
                    expected: n,
                });
            }
            for (j, &b) in r.iter().enumerate() {
                if b {
                    rows[i] |= 1 << j;
                }
            }
        }
        Ok(Self {
            n,
            rows,
            provenance,
            unique: false,
            optimum_count: None,
            maximal_optimum_count: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i] >> j & 1 == 1
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// True when the solver proved no other canonical optimum exists.
    pub fn uniqueness_certificate(&self) -> bool {
        self.unique
    }

    /// Number of distinct canonical optima found by the exact solver.
    pub fn optimum_count(&self) -> Option<usize> {
        self.optimum_count
    }

    /// Optima not strictly contained in another optimum, when the exact
    /// solver kept them all.
    pub fn maximal_optimum_count(&self) -> Option<usize> {
        self.maximal_optimum_count
    }

    pub fn to_bool_rows(&self) -> Vec<Vec<bool>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Ordered pairs `(i, j)` with `x_ij = 1`, row-major.
    pub fn preferred_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.n).all(|i| !self.get(i, i))
    }

    pub fn is_asymmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| !(self.get(i, j) && self.get(j, i))))
    }

    pub fn is_transitive(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|k| !self.get(i, k) || (self.rows[k] & !self.rows[i] & !(1u64 << i)) == 0))
    }

    pub fn satisfies_invariants(&self) -> bool {
        self.is_irreflexive() && self.is_asymmetric() && self.is_transitive()
    }

    /// Row-major lexicographic comparison of the 0/1 bit strings.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        lex_cmp_rows(&self.rows, &other.rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<&str> = (0..self.n).map(|j| if self.get(i, j) { "1" } else { "0" }).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let x: Vec<Vec<u8>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) as u8).collect())
            .collect();
        serde_json::json!({
            "n": self.n,
            "provenance": self.provenance,
            "unique": self.unique,
            "optimum_count": self.optimum_count,
            "maximal_optimum_count": self.maximal_optimum_count,
            "x": x,
        })
    }
}

fn lex_cmp_rows(a: &[u64], b: &[u64]) -> std::cmp::Ordering {
    for (ra, rb) in a.iter().zip(b) {
        let diff = ra ^ rb;
        if diff != 0 {
            let first = diff.trailing_zeros();
            return if ra >> first & 1 == 0 {
                std::cmp::Ordering::Less
            } else {
                std::cmp::Ordering::Greater
            };
        }
    }
    std::cmp::Ordering::Equal
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrdinalObjective {
    pub sigma: f64,
    pub tau: f64,
    pub delta: f64,
}

impl OrdinalObjective {
    pub fn total(&self) -> f64 {
        self.sigma + self.tau
    }
}

pub fn evaluate_objective(pcm: &IncompletePcm, x: &OrdinalPreferenceMatrix, delta: f64) -> OrdinalObjective {
    let mut sigma = 0.0;
    let mut ties = 0usize;
    for (i, j) in pcm.pairs() {
        let a = pcm.get(i, j);
        let diff = x.get(i, j) as i32 - x.get(j, i) as i32;
        if a == 1.0 {
            ties += x.get(i, j) as usize + x.get(j, i) as usize;
        } else {
            sigma += a.ln() * diff as f64;
        }
    }
    OrdinalObjective {
        sigma,
        tau: -delta * ties as f64,
        delta,
    }
}

/// Sufficient bound `min_{a_ij > 1} ln(a_ij) / |E|` under which the tie
/// penalty cannot outweigh any stated preference.
pub fn delta_upper_bound(pcm: &IncompletePcm) -> Option<f64> {
    let pairs = pcm.pairs();
    pairs
        .iter()
        .map(|&(i, j)| pcm.get(i, j).ln().abs())
        .filter(|&l| l > 0.0)
        .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.min(l))))
        .map(|m| m / pairs.len() as f64)
}

fn check_delta(pcm: &IncompletePcm, delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if let Some(bound) = delta_upper_bound(pcm) {
        if delta >= bound {
            log::warn!("delta = {delta} is not below the negligibility bound {bound:.3e}");
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    pub delta: f64,
    pub budget: Duration,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Strict partial order with both successor and predecessor bitsets so that
/// adding `i ≻ j` closes transitively in `O(n)`.
#[derive(Clone)]
struct Relation {
    succ: Vec<u64>,
    pred: Vec<u64>,
}

impl Relation {
    fn new(n: usize) -> Self {
        Self {
            succ: vec![0; n],
            pred: vec![0; n],
        }
    }

    #[inline]
    fn has(&self, i: usize, j: usize) -> bool {
        self.succ[i] >> j & 1 == 1
    }

    /// Requires `j ⊁ i`; the closure then stays acyclic.
    fn add(&mut self, i: usize, j: usize) {
        let above = self.pred[i] | 1 << i;
        let below = self.succ[j] | 1 << j;
        for a in bits(above) {
            self.succ[a] |= below;
        }
        for b in bits(below) {
            self.pred[b] |= above;
        }
    }
}

const MAX_STORED_OPTIMA: usize = 4096;

fn contains(big: &[u64], small: &[u64]) -> bool {
    big.iter().zip(small).all(|(b, s)| s & !b == 0)
}

fn maximal_count(optima: &[Vec<u64>]) -> usize {
    optima
        .iter()
        .filter(|x| !optima.iter().any(|y| y != *x && contains(y, x)))
        .count()
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let b = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(b)
        }
    })
}

struct PairVar {
    /// Dominance orientation: `a_hi,lo >= 1`.
    hi: usize,
    lo: usize,
    reward: f64,
    tie: bool,
}

struct BranchAndBound<'a> {
    vars: &'a [PairVar],
    delta: f64,
    excluded: Vec<bool>,
    best_value: f64,
    best: Option<Vec<u64>>,
    count: usize,
    optima: Vec<Vec<u64>>,
    started: Instant,
    budget: Duration,
    nodes: u64,
    timed_out: bool,
}

impl BranchAndBound<'_> {
    fn value_and_bound(&self, rel: &Relation) -> f64 {
        let mut v = 0.0;
        for (k, p) in self.vars.iter().enumerate() {
            if rel.has(p.hi, p.lo) {
                v += if p.tie { -self.delta } else { p.reward };
            } else if rel.has(p.lo, p.hi) {
                v -= if p.tie { self.delta } else { p.reward };
            } else if !self.excluded[k] && !p.tie {
                v += p.reward;
            }
        }
        v
    }

    fn violates_exclusions(&self, rel: &Relation) -> bool {
        self.vars
            .iter()
            .zip(&self.excluded)
            .any(|(p, &ex)| ex && (rel.has(p.hi, p.lo) || rel.has(p.lo, p.hi)))
    }

    fn search(&mut self, depth: usize, rel: &Relation) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(1024) && self.started.elapsed() > self.budget {
            self.timed_out = true;
            return;
        }
        let bound = self.value_and_bound(rel);
        if self.best.is_some() && bound < self.best_value - OBJECTIVE_TOL {
            return;
        }
        if depth == self.vars.len() {
            self.record_leaf(bound, rel);
            return;
        }
        let p = &self.vars[depth];
        if rel.has(p.hi, p.lo) || rel.has(p.lo, p.hi) {
            self.search(depth + 1, rel);
            return;
        }
        let (hi, lo) = (p.hi, p.lo);
        // agree, leave unrelated, reverse: the first dive yields a good incumbent
        let mut agree = rel.clone();
        agree.add(hi, lo);
        if !self.violates_exclusions(&agree) {
            self.search(depth + 1, &agree);
        }
        self.excluded[depth] = true;
        self.search(depth + 1, rel);
        self.excluded[depth] = false;
        let mut reverse = rel.clone();
        reverse.add(lo, hi);
        if !self.violates_exclusions(&reverse) {
            self.search(depth + 1, &reverse);
        }
    }

    fn record_leaf(&mut self, value: f64, rel: &Relation) {
        match &self.best {
            None => {
                self.best = Some(rel.succ.clone());
                self.best_value = value;
                self.count = 1;
                self.optima = vec![rel.succ.clone()];
            }
            Some(best) => {
                if value > self.best_value + OBJECTIVE_TOL {
                    self.best = Some(rel.succ.clone());
                    self.best_value = value;
                    self.count = 1;
                    self.optima = vec![rel.succ.clone()];
                } else if value >= self.best_value - OBJECTIVE_TOL {
                    self.count += 1;
                    if self.optima.len() < MAX_STORED_OPTIMA {
                        self.optima.push(rel.succ.clone());
                    }
                    if lex_cmp_rows(&rel.succ, best) == std::cmp::Ordering::Less {
                        self.best = Some(rel.succ.clone());
                    }
                    self.best_value = self.best_value.max(value);
                }
            }
        }
    }
}

/// Exact maximizer of `σ + τ` over strict partial orders.
///
/// Among several optima the row-major lexicographically smallest matrix is
/// returned, with the uniqueness certificate cleared.
pub fn solve_exact_ilp(pcm: &IncompletePcm, options: &ExactOptions) -> Result<OrdinalPreferenceMatrix> {
    let n = pcm.n();
    if n > 64 {
        return Err(Error::TooLarge(n));
    }
    if !ComparisonGraph::from_pcm(pcm).is_connected() {
        return Err(Error::Disconnected);
    }
    check_delta(pcm, options.delta)?;
    let gd = DominanceGraph::from_pcm(pcm);
    let mut vars: Vec<PairVar> = gd
        .edges()
        .iter()
        .map(|e| PairVar {
            hi: e.from,
            lo: e.to,
            reward: e.weight.ln(),
            tie: e.tie,
        })
        .collect();
    vars.sort_by(|a, b| {
        b.reward
            .total_cmp(&a.reward)
            .then(a.hi.cmp(&b.hi))
            .then(a.lo.cmp(&b.lo))
    });
    let mut bb = BranchAndBound {
        vars: &vars,
        delta: options.delta,
        excluded: vec![false; vars.len()],
        best_value: f64::NEG_INFINITY,
        best: None,
        count: 0,
        optima: Vec::new(),
        started: Instant::now(),
        budget: options.budget,
        nodes: 0,
        timed_out: false,
    };
    bb.search(0, &Relation::new(n));
    let rows = bb.best.take().expect("the empty relation is always feasible");
    let matrix = OrdinalPreferenceMatrix {
        n,
        rows,
        provenance: Provenance::ExactIlp,
        unique: !bb.timed_out && bb.count == 1,
        optimum_count: (!bb.timed_out).then_some(bb.count),
        maximal_optimum_count: (!bb.timed_out && bb.optima.len() == bb.count).then(|| maximal_count(&bb.optima)),
    };
    if bb.timed_out {
        return Err(Error::Timeout {
            budget_ms: options.budget.as_millis(),
            incumbent: Box::new(matrix),
        });
    }
    log::debug!("branch-and-bound explored {} nodes", bb.nodes);
    Ok(matrix)
}

/// Breaks every cycle at its unique weakest edge, keeps the remaining strict
/// preferences, and closes transitively by iterating `sign(Adj + Adj²)`.
pub fn solve_fast_path(
    gd: &DominanceGraph,
    pcm: &IncompletePcm,
    delta: f64,
    cycle_cap: usize,
) -> Result<OrdinalPreferenceMatrix> {
    let n = gd.n();
    if n > 64 {
        return Err(Error::TooLarge(n));
    }
    check_delta(pcm, delta)?;
    let cycles = match check_uniqueness_conditions(gd, cycle_cap)? {
        UniquenessCheck::FastPathEligible { cycles } => cycles,
        UniquenessCheck::NotEligible { reasons, .. } => {
            return Err(Error::NotEligible(reasons.iter().map(ToString::to_string).collect()));
        }
    };
    let mut adj = DMatrix::<f64>::zeros(n, n);
    let mut broken = Vec::new();
    for c in &cycles {
        let (i, j) = c.min_edge(gd).expect("eligible cycles have a unique minimum");
        adj[(j, i)] = 1.0;
        broken.push((i, j));
    }
    for e in gd.edges() {
        if e.weight > 1.0 && !broken.contains(&(e.from, e.to)) {
            adj[(e.from, e.to)] = 1.0;
        }
    }
    for _ in 1..n {
        let sq = &adj * &adj;
        adj = (&adj + sq).map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    }
    let rows: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| adj[(i, j)] > 0.0).collect()).collect();
    let mut x = OrdinalPreferenceMatrix::from_bool_rows(&rows, Provenance::FastPath)?;
    if !x.satisfies_invariants() {
        return Err(Error::Infeasible);
    }
    x.unique = true;
    x.optimum_count = Some(1);
    x.maximal_optimum_count = Some(1);
    Ok(x)
}

/// `x_ij = 1` iff `w_i > w_j`; weights equal within relative `1e-9` leave the
/// pair unrelated.
pub fn ordinal_from_weights(pcm: &IncompletePcm, w: &PriorityVector) -> Result<OrdinalPreferenceMatrix> {
    let n = pcm.n();
    if w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.len(),
        });
    }
    let w = w.weights();
    let rows: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && w[i] > w[j] && !weights_equal(w[i], w[j]))
                .collect()
        })
        .collect();
    OrdinalPreferenceMatrix::from_bool_rows(&rows, Provenance::FromWeights)
}
