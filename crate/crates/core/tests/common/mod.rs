//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use ahp_rank_core::pcm::IncompletePcm;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every strict partial order on `n <= 5` elements as row bitsets, found by
/// trying all `3^(n(n-1)/2)` orientations of the unordered pairs.
pub fn strict_partial_orders(n: usize) -> Vec<Vec<u64>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut rows = vec![0u64; n];
        let mut c = code;
        for &(i, j) in &pairs {
            match c % 3 {
                1 => rows[i] |= 1 << j,
                2 => rows[j] |= 1 << i,
                _ => {}
            }
            c /= 3;
        }
        let transitive = (0..n).all(|i| {
            (0..n)
                .filter(|&k| rows[i] >> k & 1 == 1)
                .all(|k| rows[k] & !rows[i] == 0)
        });
        if transitive {
            out.push(rows);
        }
    }
    out
}

/// `σ + τ` straight from the definitions.
pub fn ordinal_value(pcm: &IncompletePcm, rows: &[u64], delta: f64) -> f64 {
    let n = pcm.n();
    let x = |i: usize, j: usize| (rows[i] >> j & 1) as f64;
    let mut v = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if !pcm.is_present(i, j) {
                continue;
            }
            let a = pcm.get(i, j);
            if a == 1.0 {
                v -= delta * (x(i, j) + x(j, i));
            } else {
                v += a.ln() * (x(i, j) - x(j, i));
            }
        }
    }
    v
}

pub fn brute_force_ordinal_optimum(pcm: &IncompletePcm, orders: &[Vec<u64>], delta: f64) -> f64 {
    orders
        .iter()
        .map(|r| ordinal_value(pcm, r, delta))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Mean over all spanning trees of the log-vector each tree determines
/// exactly, with the last component fixed at zero.
pub fn spanning_tree_mean(pcm: &IncompletePcm) -> Vec<f64> {
    let n = pcm.n();
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| pcm.is_present(i, j))
        .collect();
    let m = edges.len();
    let mut sum = vec![0.0; n];
    let mut trees = 0usize;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..m).filter(|&k| mask >> k & 1 == 1).map(|k| edges[k]).collect();
        let mut y = vec![f64::NAN; n];
        y[n - 1] = 0.0;
        let mut changed = true;
        while changed {
            changed = false;
            for &(i, j) in &chosen {
                let p = pcm.get(i, j).ln();
                if y[i].is_nan() && !y[j].is_nan() {
                    y[i] = y[j] + p;
                    changed = true;
                } else if y[j].is_nan() && !y[i].is_nan() {
                    y[j] = y[i] - p;
                    changed = true;
                }
            }
        }
        if y.iter().any(|v| v.is_nan()) {
            continue;
        }
        trees += 1;
        for (s, v) in sum.iter_mut().zip(&y) {
            *s += v;
        }
    }
    sum.iter().map(|s| s / trees as f64).collect()
}

/// `Σ_{compared i<j} (ln a_ij − y_i + y_j)²`, written out independently.
pub fn log_objective(pcm: &IncompletePcm, y: &[f64]) -> f64 {
    let n = pcm.n();
    let mut f = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if pcm.is_present(i, j) {
                let d = pcm.get(i, j).ln() - y[i] + y[j];
                f += d * d;
            }
        }
    }
    f
}

/// Optimal value of the separation-constrained log least-squares problem via
/// accelerated projected-gradient ascent on its dual `λ >= 0`, from
/// `restarts` random starting multipliers. Returns the best dual value, a
/// lower bound that is tight at convergence.
pub fn dual_oracle_objective(
    pcm: &IncompletePcm,
    constraints: &[(usize, usize)],
    epsilon: f64,
    restarts: usize,
    seed: u64,
) -> f64 {
    let n = pcm.n();
    let mut lap = DMatrix::<f64>::zeros(n, n);
    let mut r = DVector::<f64>::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && pcm.is_present(i, j) {
                lap[(i, j)] = -1.0;
                lap[(i, i)] += 1.0;
                r[i] += pcm.get(i, j).ln();
            }
        }
    }
    let ones = DMatrix::from_element(n, n, 1.0 / n as f64);
    let pinv = (&lap + &ones).try_inverse().expect("connected graph") - &ones;
    let y0 = &pinv * &r;
    let m = constraints.len();
    if m == 0 {
        return log_objective(pcm, y0.as_slice());
    }
    let a = DMatrix::from_fn(m, n, |c, k| {
        let (i, j) = constraints[c];
        if k == i {
            1.0
        } else if k == j {
            -1.0
        } else {
            0.0
        }
    });
    let q = &a * &pinv * a.transpose() * 0.5;
    let b = DVector::from_element(m, epsilon) - &a * &y0;
    let lip = q.clone().symmetric_eigenvalues().amax().max(1e-12);
    let step = 1.0 / lip;
    let dual = |lam: &DVector<f64>| -> f64 {
        let y = &y0 + &pinv * a.transpose() * lam * 0.5;
        let slack = &a * &y - DVector::from_element(m, epsilon);
        log_objective(pcm, y.as_slice()) - lam.dot(&slack)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..restarts {
        let mut lam = DVector::from_fn(m, |_, _| rng.random::<f64>() * 2.0);
        let mut prev = lam.clone();
        let mut t = 1.0f64;
        for _ in 0..200_000 {
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let z = &lam + (&lam - &prev) * ((t - 1.0) / t_next);
            let grad = &b - &q * &z;
            let next = (&z + grad * step).map(|v| v.max(0.0));
            // adaptive restart when the momentum points uphill in the dual
            if (&next - &lam).dot(&(&b - &q * &lam)) < 0.0 {
                t = 1.0;
            } else {
                t = t_next;
            }
            prev = lam;
            lam = next;
            let pg = (&b - &q * &lam)
                .iter()
                .zip(lam.iter())
                .map(|(g, l)| if *l > 0.0 { g.abs() } else { g.max(0.0) })
                .fold(0.0f64, f64::max);
            if pg <= 1e-13 {
                break;
            }
        }
        best = best.max(dual(&lam));
    }
    best
}

/// Random connected instance with judgments drawn from the integer scale
/// `{1, ..., 9}` and random orientation, so ties and repeated weights (and
/// hence ambiguous cycles) are common.
pub fn judgment_instance(n: usize, rho: f64, seed: u64) -> IncompletePcm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // raise the density to the spanning-tree minimum when needed
    let tree = (n - 1) as f64 / (n * (n - 1) / 2) as f64;
    let rho = rho.max(tree);
    let (pattern, _) = ahp_rank_core::experiments::generate_instance(n, rho, 0.0, &mut rng).expect("feasible density");
    let pairs: Vec<(usize, usize, f64)> = pattern
        .pairs()
        .into_iter()
        .map(|(i, j)| {
            let v = rng.random_range(1..=9) as f64;
            (i, j, if rng.random::<bool>() { v } else { 1.0 / v })
        })
        .collect();
    IncompletePcm::from_pairs(n, &pairs).expect("valid instance")
}

/// Every elementary cycle of the digraph with successor lists `succ`, as node
/// sequences starting at their smallest node, by plain depth-first search.
pub fn brute_force_cycles(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    fn dfs(succ: &[Vec<usize>], start: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        for &next in &succ[last] {
            if next == start {
                out.push(path.clone());
            } else if next > start && !path.contains(&next) {
                path.push(next);
                dfs(succ, start, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for s in 0..succ.len() {
        dfs(succ, s, &mut vec![s], &mut out);
    }
    out.sort();
    out
}
