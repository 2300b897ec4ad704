//! Availability graph `G`, dominance graph `G_d`, and cycle analysis.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::pcm::IncompletePcm;

pub const DEFAULT_CYCLE_CAP: usize = 100_000;

/// Undirected graph of compared pairs with its Laplacian and log-ratio matrix.
#[derive(Debug, Clone)]
pub struct ComparisonGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    laplacian: DMatrix<f64>,
    log_matrix: DMatrix<f64>,
}

impl ComparisonGraph {
    pub fn from_pcm(pcm: &IncompletePcm) -> Self {
        let n = pcm.n();
        let edges = pcm.pairs();
        let mut neighbors = vec![Vec::new(); n];
        let mut laplacian = DMatrix::zeros(n, n);
        let mut log_matrix = DMatrix::zeros(n, n);
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
            laplacian[(i, j)] = -1.0;
            laplacian[(j, i)] = -1.0;
            laplacian[(i, i)] += 1.0;
            laplacian[(j, j)] += 1.0;
            let p = pcm.get(i, j).ln();
            log_matrix[(i, j)] = p;
            log_matrix[(j, i)] = -p;
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Self {
            n,
            edges,
            neighbors,
            laplacian,
            log_matrix,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Unordered edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// `P` with `P_ij = ln a_ij` on present pairs, else zero.
    pub fn log_matrix(&self) -> &DMatrix<f64> {
        &self.log_matrix
    }

    /// `r = P·1`, i.e. `r_i = Σ_{j ∈ N_i} ln a_ij`.
    pub fn log_row_sums(&self) -> DVector<f64> {
        let ones = DVector::from_element(self.n, 1.0);
        &self.log_matrix * ones
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// `2|E| / (n(n-1))`.
    pub fn density(&self) -> f64 {
        2.0 * self.edges.len() as f64 / (self.n * (self.n - 1)) as f64
    }

    /// Laplacian eigenvalues in ascending order.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.laplacian.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn to_dot(&self, pcm: &IncompletePcm) -> String {
        let mut out = String::from("graph G {\n");
        for i in 0..self.n {
            let _ = writeln!(out, "  v{} [label=\"{}\"];", i + 1, node_label(pcm, i));
        }
        for &(i, j) in &self.edges {
            let _ = writeln!(
                out,
                "  v{} -- v{} [label=\"{}\"];",
                i + 1,
                j + 1,
                crate::pcm::fmt12(pcm.get(i, j))
            );
        }
        out.push_str("}\n");
        out
    }
}

fn node_label(pcm: &IncompletePcm, i: usize) -> String {
    pcm.labels()
        .map(|l| l[i].clone())
        .unwrap_or_else(|| format!("v{}", i + 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceEdge {
    pub from: usize,
    pub to: usize,
    /// `a_from,to >= 1`.
    pub weight: f64,
    pub tie: bool,
}

/// Directed graph with one edge per compared pair, pointing from the weakly
/// preferred alternative. Tie pairs are oriented low index to high index.
#[derive(Debug, Clone)]
pub struct DominanceGraph {
    n: usize,
    edges: Vec<DominanceEdge>,
    out: Vec<Vec<usize>>,
}

impl DominanceGraph {
    pub fn from_pcm(pcm: &IncompletePcm) -> Self {
        let n = pcm.n();
        let mut edges = Vec::new();
        for (i, j) in pcm.pairs() {
            let a = pcm.get(i, j);
            let edge = if a >= 1.0 {
                DominanceEdge {
                    from: i,
                    to: j,
                    weight: a,
                    tie: a == 1.0,
                }
            } else {
                DominanceEdge {
                    from: j,
                    to: i,
                    weight: pcm.get(j, i),
                    tie: false,
                }
            };
            edges.push(edge);
        }
        let mut out = vec![Vec::new(); n];
        for e in &edges {
            out[e.from].push(e.to);
        }
        for o in &mut out {
            o.sort_unstable();
        }
        Self { n, edges, out }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[DominanceEdge] {
        &self.edges
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&DominanceEdge> {
        self.edges.iter().find(|e| e.from == from && e.to == to)
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph Gd {\n");
        for i in 0..self.n {
            let _ = writeln!(out, "  v{};", i + 1);
        }
        for e in &self.edges {
            let style = if e.tie { ", style=dashed" } else { "" };
            let _ = writeln!(
                out,
                "  v{} -> v{} [label=\"{}\"{style}];",
                e.from + 1,
                e.to + 1,
                crate::pcm::fmt12(e.weight)
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Elementary directed cycle of `G_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    /// Node sequence starting at the smallest node; closes back on `nodes[0]`.
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub min_weight: f64,
    pub min_multiplicity: usize,
    pub ambiguous: bool,
}

impl Cycle {
    fn from_nodes(gd: &DominanceGraph, nodes: Vec<usize>) -> Self {
        let len = nodes.len();
        let edges: Vec<(usize, usize)> = (0..len).map(|k| (nodes[k], nodes[(k + 1) % len])).collect();
        let weights: Vec<f64> = edges
            .iter()
            .map(|&(a, b)| gd.edge(a, b).expect("cycle edge exists").weight)
            .collect();
        let min_weight = weights.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_multiplicity = weights.iter().filter(|&&w| w == min_weight).count();
        Self {
            nodes,
            edges,
            min_weight,
            min_multiplicity,
            ambiguous: min_multiplicity > 1,
        }
    }

    /// The unique minimum-weight edge, if there is exactly one.
    pub fn min_edge(&self, gd: &DominanceGraph) -> Option<(usize, usize)> {
        if self.ambiguous {
            return None;
        }
        self.edges
            .iter()
            .copied()
            .find(|&(a, b)| gd.edge(a, b).map(|e| e.weight) == Some(self.min_weight))
    }

    pub fn sorted_nodes(&self) -> Vec<usize> {
        let mut s = self.nodes.clone();
        s.sort_unstable();
        s
    }

    pub fn shares_edge_with(&self, other: &Cycle) -> Option<(usize, usize)> {
        let mine: BTreeSet<_> = self.edges.iter().collect();
        other.edges.iter().find(|e| mine.contains(e)).copied()
    }
}

pub fn build_graphs(pcm: &IncompletePcm) -> (ComparisonGraph, DominanceGraph) {
    (ComparisonGraph::from_pcm(pcm), DominanceGraph::from_pcm(pcm))
}

/// All elementary cycles of `G_d` (Johnson's algorithm), sorted by node set.
pub fn enumerate_cycles(gd: &DominanceGraph, cap: usize) -> Result<Vec<Cycle>> {
    let n = gd.n;
    let mut raw: Vec<Vec<usize>> = Vec::new();
    for s in 0..n {
        let component = scc_containing(gd, s);
        if component.iter().filter(|&&c| c).count() < 2 {
            continue;
        }
        let mut search = CircuitSearch {
            gd,
            start: s,
            allowed: component,
            blocked: vec![false; n],
            block_map: vec![BTreeSet::new(); n],
            stack: Vec::new(),
            found: &mut raw,
            cap,
        };
        search.circuit(s)?;
    }
    let mut cycles: Vec<Cycle> = raw.into_iter().map(|nodes| Cycle::from_nodes(gd, nodes)).collect();
    cycles.sort_by(|a, b| {
        a.sorted_nodes()
            .cmp(&b.sorted_nodes())
            .then_with(|| a.nodes.cmp(&b.nodes))
    });
    Ok(cycles)
}

/// Nodes `>= s` in the strongly connected component of `s` within the
/// subgraph induced by `{s, s+1, ..}`.
fn scc_containing(gd: &DominanceGraph, s: usize) -> Vec<bool> {
    let n = gd.n;
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for e in &gd.edges {
                let (a, b) = if forward { (e.from, e.to) } else { (e.to, e.from) };
                if a == u && b >= s && !seen[b] {
                    seen[b] = true;
                    queue.push_back(b);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    let bwd = reach(false);
    fwd.iter().zip(&bwd).map(|(a, b)| *a && *b).collect()
}

struct CircuitSearch<'a> {
    gd: &'a DominanceGraph,
    start: usize,
    allowed: Vec<bool>,
    blocked: Vec<bool>,
    block_map: Vec<BTreeSet<usize>>,
    stack: Vec<usize>,
    found: &'a mut Vec<Vec<usize>>,
    cap: usize,
}

impl CircuitSearch<'_> {
    fn circuit(&mut self, v: usize) -> Result<bool> {
        let mut closed = false;
        self.stack.push(v);
        self.blocked[v] = true;
        for &w in self.gd.successors(v) {
            if !self.allowed[w] {
                continue;
            }
            if w == self.start {
                if self.found.len() >= self.cap {
                    return Err(Error::CycleExplosion { cap: self.cap });
                }
                self.found.push(self.stack.clone());
                closed = true;
            } else if !self.blocked[w] && self.circuit(w)? {
                closed = true;
            }
        }
        if closed {
            self.unblock(v);
        } else {
            for &w in self.gd.successors(v) {
                if self.allowed[w] {
                    self.block_map[w].insert(v);
                }
            }
        }
        self.stack.pop();
        Ok(closed)
    }

    fn unblock(&mut self, u: usize) {
        let mut pending = vec![u];
        while let Some(x) = pending.pop() {
            if !self.blocked[x] {
                continue;
            }
            self.blocked[x] = false;
            let waiting = std::mem::take(&mut self.block_map[x]);
            pending.extend(waiting);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UniquenessViolation {
    AmbiguousCycle {
        cycle: usize,
    },
    SharedEdge {
        first: usize,
        second: usize,
        edge: (usize, usize),
    },
}

impl std::fmt::Display for UniquenessViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UniquenessViolation::AmbiguousCycle { cycle } => write!(f, "cycle {cycle} is ambiguous"),
            UniquenessViolation::SharedEdge { first, second, edge } => write!(
                f,
                "cycles {first} and {second} share edge ({}, {})",
                edge.0 + 1,
                edge.1 + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UniquenessCheck {
    FastPathEligible {
        cycles: Vec<Cycle>,
    },
    NotEligible {
        cycles: Vec<Cycle>,
        reasons: Vec<UniquenessViolation>,
    },
}

impl UniquenessCheck {
    pub fn is_eligible(&self) -> bool {
        matches!(self, UniquenessCheck::FastPathEligible { .. })
    }

    pub fn cycles(&self) -> &[Cycle] {
        match self {
            UniquenessCheck::FastPathEligible { cycles } => cycles,
            UniquenessCheck::NotEligible { cycles, .. } => cycles,
        }
    }
}

/// Sufficient condition for a unique ordinal optimum: no ambiguous cycle and
/// pairwise edge-disjoint cycles.
pub fn check_uniqueness_conditions(gd: &DominanceGraph, cap: usize) -> Result<UniquenessCheck> {
    let cycles = enumerate_cycles(gd, cap)?;
    let mut reasons = Vec::new();
    for (k, c) in cycles.iter().enumerate() {
        if c.ambiguous {
            reasons.push(UniquenessViolation::AmbiguousCycle { cycle: k });
        }
    }
    for a in 0..cycles.len() {
        for b in (a + 1)..cycles.len() {
            if let Some(edge) = cycles[a].shares_edge_with(&cycles[b]) {
                reasons.push(UniquenessViolation::SharedEdge {
                    first: a,
                    second: b,
                    edge,
                });
            }
        }
    }
    Ok(if reasons.is_empty() {
        UniquenessCheck::FastPathEligible { cycles }
    } else {
        UniquenessCheck::NotEligible { cycles, reasons }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn reversal_graph_structure() {
        let pcm = fixtures::reversal_example();
        let (g, gd) = build_graphs(&pcm);
        assert_eq!(g.edges().len(), 11);
        assert!(g.is_connected());
        assert!((g.density() - 11.0 / 21.0).abs() < 1e-15);
        assert_eq!(gd.edges().len(), 11);
        assert!(enumerate_cycles(&gd, DEFAULT_CYCLE_CAP).unwrap().is_empty());
        assert!(check_uniqueness_conditions(&gd, DEFAULT_CYCLE_CAP)
            .unwrap()
            .is_eligible());
    }

    #[test]
    fn laplacian_rows_sum_to_zero_and_log_matrix_is_antisymmetric() {
        let pcm = fixtures::reversal_example();
        let g = ComparisonGraph::from_pcm(&pcm);
        let l = g.laplacian();
        for i in 0..g.n() {
            assert_eq!(l.row(i).sum(), 0.0);
            assert_eq!(l[(i, i)], g.degree(i) as f64);
            for j in 0..g.n() {
                assert_eq!(g.log_matrix()[(i, j)], -g.log_matrix()[(j, i)]);
            }
        }
    }

    #[test]
    fn consistent_triangle_is_acyclic() {
        let w = [1.0, 2.0, 4.0];
        let pcm =
            IncompletePcm::from_pairs(3, &[(0, 1, w[0] / w[1]), (0, 2, w[0] / w[2]), (1, 2, w[1] / w[2])]).unwrap();
        let gd = DominanceGraph::from_pcm(&pcm);
        assert_eq!(gd.edges().len(), 3);
        assert!(enumerate_cycles(&gd, 10).unwrap().is_empty());
    }

    #[test]
    fn ambiguous_five_cycle() {
        let gd = DominanceGraph::from_pcm(&fixtures::ambiguous_cycle());
        let cycles = enumerate_cycles(&gd, 10).unwrap();
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].nodes.len(), 5);
        assert_eq!(cycles[0].min_weight, 2.0);
        assert_eq!(cycles[0].min_multiplicity, 2);
        assert!(cycles[0].ambiguous);
        match check_uniqueness_conditions(&gd, 10).unwrap() {
            UniquenessCheck::NotEligible { reasons, .. } => {
                assert_eq!(reasons, vec![UniquenessViolation::AmbiguousCycle { cycle: 0 }]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shared_edge_cycles() {
        let gd = DominanceGraph::from_pcm(&fixtures::shared_edge_cycles());
        let cycles = enumerate_cycles(&gd, 10).unwrap();
        let sets: Vec<Vec<usize>> = cycles.iter().map(Cycle::sorted_nodes).collect();
        assert_eq!(sets, vec![vec![0, 1, 2], vec![1, 2, 3]]);
        match check_uniqueness_conditions(&gd, 10).unwrap() {
            UniquenessCheck::NotEligible { reasons, .. } => {
                assert!(reasons.contains(&UniquenessViolation::AmbiguousCycle { cycle: 0 }));
                assert!(reasons.contains(&UniquenessViolation::SharedEdge {
                    first: 0,
                    second: 1,
                    edge: (1, 2)
                }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tie_cycle_is_eligible() {
        let gd = DominanceGraph::from_pcm(&fixtures::tie_cycle());
        let check = check_uniqueness_conditions(&gd, 10).unwrap();
        assert!(check.is_eligible());
        let c = &check.cycles()[0];
        assert_eq!(c.min_weight, 1.0);
        assert_eq!(c.min_edge(&gd), Some((0, 1)));
    }

    #[test]
    fn connectivity_examples() {
        let two_pairs = IncompletePcm::from_pairs(4, &[(0, 1, 2.0), (2, 3, 3.0)]).unwrap();
        let g = ComparisonGraph::from_pcm(&two_pairs);
        assert!(!g.is_connected());
        let spectrum = g.laplacian_spectrum();
        assert!(spectrum[1].abs() < 1e-9);

        let star = IncompletePcm::from_pairs(6, &(1..6).map(|k| (0, k, 2.0)).collect::<Vec<_>>()).unwrap();
        let g = ComparisonGraph::from_pcm(&star);
        assert!(g.is_connected());
        assert!(g.laplacian_spectrum()[1] > 1e-9);
        assert!((g.density() - 5.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn complete_and_tree_density() {
        let mut pairs = Vec::new();
        for i in 0..7 {
            for j in (i + 1)..7 {
                pairs.push((i, j, 2.0));
            }
        }
        let g = ComparisonGraph::from_pcm(&IncompletePcm::from_pairs(7, &pairs).unwrap());
        assert_eq!(g.density(), 1.0);
        let path: Vec<_> = (0..6).map(|i| (i, i + 1, 2.0)).collect();
        let g = ComparisonGraph::from_pcm(&IncompletePcm::from_pairs(7, &path).unwrap());
        assert!((g.density() - 6.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn cycle_cap_signals_explosion() {
        // two cycles, cap of one
        let gd = DominanceGraph::from_pcm(&fixtures::shared_edge_cycles());
        assert!(matches!(
            enumerate_cycles(&gd, 1),
            Err(Error::CycleExplosion { cap: 1 })
        ));
    }

    #[test]
    fn dot_output_lists_edges() {
        let pcm = fixtures::ambiguous_cycle();
        let (g, gd) = build_graphs(&pcm);
        assert_eq!(g.to_dot(&pcm).matches(" -- ").count(), 5);
        assert!(gd.to_dot().contains("v5 -> v1 [label=\"7\"]"));
    }
}
