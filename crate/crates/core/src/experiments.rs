//! Seeded random instances and the Monte-Carlo comparison harness.
//!
//! Every trial draws from `ChaCha8Rng::seed_from_u64(seed)` with its own
//! stream, `(cell << 32) | trial`, so outputs are independent of worker
//! count and scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::graph::{build_graphs, check_uniqueness_conditions, ComparisonGraph};
use crate::metrics::{compute_delta, compute_mvs, compute_tds, largest_entries, MetricsReport};
use crate::ordinal::{
    evaluate_objective, ordinal_from_weights, solve_exact_ilp, solve_fast_path, ExactOptions, Provenance,
};
use crate::pcm::{fmt12, IncompletePcm, Normalization, PriorityVector};
use crate::pipeline::{run_method, Method, RankOptions};
use crate::{cardinal, graph};

pub const THREADS_ENV: &str = "AHP_RANK_THREADS";

/// Smallest edge count giving density `rho`, guarded against rounding.
pub fn target_edges(n: usize, rho: f64) -> usize {
    let total = n * (n - 1) / 2;
    ((rho * total as f64 - 1e-9).ceil().max(0.0) as usize).min(total)
}

/// Random connected instance: a uniform spanning tree from a Prüfer
/// sequence plus uniformly chosen extra edges, nominal weights log-uniform on
/// `[1, 9]`, and ratios `(w_i/w_j)·e^η` with `η ~ N(0, γ²)` for `i < j`.
pub fn generate_instance(
    n: usize,
    rho: f64,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(IncompletePcm, PriorityVector)> {
    if n < 2 {
        return Err(Error::TooSmall(n));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }
    let m = target_edges(n, rho);
    if !(rho > 0.0 && rho <= 1.0) || m < n - 1 {
        return Err(Error::InfeasibleDensity {
            rho,
            n,
            min_edges: n - 1,
        });
    }
    let mut present = vec![vec![false; n]; n];
    for (i, j) in random_tree(n, rng) {
        present[i][j] = true;
        present[j][i] = true;
    }
    let mut spare: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !present[i][j])
        .collect();
    let extra = m - (n - 1);
    let (chosen, _) = spare.partial_shuffle(rng, extra);
    for &(i, j) in chosen.iter() {
        present[i][j] = true;
        present[j][i] = true;
    }
    let ln9 = 9f64.ln();
    let logs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * ln9).collect();
    let noise = Normal::new(0.0, gamma).expect("gamma checked");
    let mut pairs = Vec::with_capacity(m);
    for i in 0..n {
        for j in i + 1..n {
            if present[i][j] {
                let eta = noise.sample(rng);
                pairs.push((i, j, (logs[i] - logs[j] + eta).exp()));
            }
        }
    }
    let pcm = IncompletePcm::from_pairs(n, &pairs)?;
    let truth = PriorityVector::from_log_weights(&logs, Normalization::SumOne)?;
    Ok((pcm, truth))
}

fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    if n == 2 {
        return vec![(0, 1)];
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &c in &code {
        degree[c] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &c in &code {
        let leaf = (0..n).find(|&k| degree[k] == 1).expect("a leaf exists");
        edges.push((leaf.min(c), leaf.max(c)));
        degree[leaf] -= 1;
        degree[c] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&k| degree[k] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Generator for trial `trial` of cell `cell`.
pub fn trial_rng(seed: u64, cell: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cell as u64) << 32) | trial as u64);
    rng
}

fn default_n() -> usize {
    7
}
fn default_densities() -> Vec<f64> {
    vec![0.3, 0.5, 0.7]
}
fn default_gammas() -> Vec<f64> {
    vec![0.1, 0.2, 0.5]
}
fn default_trials() -> usize {
    100
}
fn default_epsilon() -> f64 {
    cardinal::DEFAULT_EPSILON
}
fn default_delta() -> f64 {
    crate::ordinal::DEFAULT_DELTA
}
fn default_seed() -> u64 {
    42
}
fn default_methods() -> Vec<String> {
    Method::ALL.iter().map(|m| m.name().to_string()).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_densities")]
    pub densities: Vec<f64>,
    #[serde(default = "default_gammas")]
    pub gammas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    /// Worker cap; falls back to `AHP_RANK_THREADS`, then to all cores.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn parsed_methods(&self) -> Result<Vec<Method>> {
        let mut out: Vec<Method> = self.methods.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::TooSmall(self.n));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.densities.is_empty() || self.gammas.is_empty() {
            return Err(Error::InvalidParameter(
                "density and gamma lists must be nonempty".into(),
            ));
        }
        for &rho in &self.densities {
            if !(rho > 0.0 && rho <= 1.0) || target_edges(self.n, rho) < self.n - 1 {
                return Err(Error::InfeasibleDensity {
                    rho,
                    n: self.n,
                    min_edges: self.n - 1,
                });
            }
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be nonnegative, got {g}")));
        }
        if !(self.epsilon > 0.0) || !(self.delta > 0.0) {
            return Err(Error::InvalidParameter("epsilon and delta must be positive".into()));
        }
        self.parsed_methods().map(|_| ())
    }

    pub fn rank_options(&self) -> RankOptions {
        RankOptions {
            epsilon: self.epsilon,
            delta: self.delta,
            ..RankOptions::default()
        }
    }

    fn worker_count(&self) -> Option<usize> {
        self.workers
            .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
            .filter(|&w| w > 0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodRecord {
    pub method: Method,
    pub metrics: Option<MetricsReport>,
    pub provenance: Option<Provenance>,
    pub note: Option<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub rho: f64,
    pub gamma: f64,
    pub trial: usize,
    pub ground_truth: Vec<f64>,
    pub results: Vec<MethodRecord>,
}

/// Runs each method and scores it; failures become notes.
pub fn evaluate_methods(pcm: &IncompletePcm, methods: &[Method], options: &RankOptions) -> Vec<MethodRecord> {
    methods
        .iter()
        .map(|&method| {
            let started = Instant::now();
            let outcome = run_method(pcm, method, options);
            let seconds = started.elapsed().as_secs_f64();
            let (metrics, provenance, note) = match outcome {
                Ok(out) => {
                    let provenance = out.mwov.as_ref().map(|r| r.ordinal.matrix.provenance());
                    let mut note = out
                        .mwov
                        .as_ref()
                        .filter(|r| r.ordinal.timed_out)
                        .map(|_| "ordinal stage timed out; incumbent used".to_string());
                    let metrics = PriorityVector::from_weights(&out.weights, Normalization::SumOne)
                        .and_then(|w| MetricsReport::compute(pcm, &w, options.delta));
                    let metrics = match metrics {
                        Ok(m) => Some(m),
                        Err(e) => {
                            note = Some(e.to_string());
                            None
                        }
                    };
                    (metrics, provenance, note)
                }
                Err(e) => (None, None, Some(e.to_string())),
            };
            MethodRecord {
                method,
                metrics,
                provenance,
                note,
                seconds,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub rho: f64,
    pub gamma: f64,
    pub method: Method,
    pub count: usize,
    pub failures: usize,
    pub sigma_mean: f64,
    pub sigma_std: f64,
    pub mvs_mean: f64,
    pub mvs_std: f64,
    pub tds_mean: f64,
    pub tds_std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParetoRow {
    pub rho: f64,
    pub gamma: f64,
    pub method: Method,
    pub mvs_mean: f64,
    pub tds_mean: f64,
    pub nondominated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub pareto: Vec<ParetoRow>,
}

impl SweepResult {
    pub fn cell(&self, rho: f64, gamma: f64) -> Vec<&SummaryRow> {
        self.summary
            .iter()
            .filter(|r| r.rho == rho && r.gamma == gamma)
            .collect()
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn with_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let methods = config.parsed_methods()?;
    let options = config.rank_options();
    let mut jobs = Vec::new();
    for (ri, &rho) in config.densities.iter().enumerate() {
        for (gi, &gamma) in config.gammas.iter().enumerate() {
            let cell = ri * config.gammas.len() + gi;
            for trial in 0..config.trials {
                jobs.push((cell, rho, gamma, trial));
            }
        }
    }
    let mut records = with_pool(config.worker_count(), || {
        jobs.par_iter()
            .map(|&(cell, rho, gamma, trial)| {
                let mut rng = trial_rng(config.seed, cell, trial);
                let (pcm, truth) = generate_instance(config.n, rho, gamma, &mut rng)?;
                Ok(TrialRecord {
                    trial_id: ((cell as u64) << 32) | trial as u64,
                    rho,
                    gamma,
                    trial,
                    ground_truth: truth.weights().to_vec(),
                    results: evaluate_methods(&pcm, &methods, &options),
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    records.sort_by_key(|r| r.trial_id);
    let summary = summarize(config, &methods, &records);
    let pareto = pareto_rows(&summary);
    Ok(SweepResult {
        records,
        summary,
        pareto,
    })
}

fn summarize(config: &ExperimentConfig, methods: &[Method], records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for &rho in &config.densities {
        for &gamma in &config.gammas {
            for &method in methods {
                let mut sigma = Vec::new();
                let mut mvs = Vec::new();
                let mut tds = Vec::new();
                let mut failures = 0;
                for rec in records.iter().filter(|r| r.rho == rho && r.gamma == gamma) {
                    match rec
                        .results
                        .iter()
                        .find(|m| m.method == method)
                        .and_then(|m| m.metrics.as_ref())
                    {
                        Some(m) => {
                            sigma.push(m.sigma);
                            mvs.push(m.mvs);
                            tds.push(m.tds);
                        }
                        None => failures += 1,
                    }
                }
                let (sigma_mean, sigma_std) = mean_std(&sigma);
                let (mvs_mean, mvs_std) = mean_std(&mvs);
                let (tds_mean, tds_std) = mean_std(&tds);
                rows.push(SummaryRow {
                    rho,
                    gamma,
                    method,
                    count: sigma.len(),
                    failures,
                    sigma_mean,
                    sigma_std,
                    mvs_mean,
                    mvs_std,
                    tds_mean,
                    tds_std,
                });
            }
        }
    }
    rows
}

fn pareto_rows(summary: &[SummaryRow]) -> Vec<ParetoRow> {
    summary
        .iter()
        .map(|r| {
            let dominated = summary.iter().any(|o| {
                o.rho == r.rho
                    && o.gamma == r.gamma
                    && o.mvs_mean <= r.mvs_mean
                    && o.tds_mean <= r.tds_mean
                    && (o.mvs_mean < r.mvs_mean || o.tds_mean < r.tds_mean)
            });
            ParetoRow {
                rho: r.rho,
                gamma: r.gamma,
                method: r.method,
                mvs_mean: r.mvs_mean,
                tds_mean: r.tds_mean,
                nondominated: !dominated,
            }
        })
        .collect()
}

fn opt12(v: Option<f64>) -> String {
    v.map(fmt12).unwrap_or_default()
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
}

/// Long format, one row per trial and method. Timings are kept out so the
/// file is byte-reproducible.
pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut w = csv_writer();
    w.write_record([
        "trial_id",
        "rho",
        "gamma",
        "trial",
        "method",
        "status",
        "provenance",
        "sigma",
        "tau",
        "mvs",
        "tds",
        "note",
    ])
    .expect("in-memory write");
    for rec in records {
        for m in &rec.results {
            let provenance = m.provenance.map(|p| format!("{p:?}")).unwrap_or_default();
            let status = if m.metrics.is_some() { "ok" } else { "failed" };
            w.write_record([
                rec.trial_id.to_string(),
                fmt12(rec.rho),
                fmt12(rec.gamma),
                rec.trial.to_string(),
                m.method.name().to_string(),
                status.to_string(),
                provenance,
                opt12(m.metrics.as_ref().map(|x| x.sigma)),
                opt12(m.metrics.as_ref().map(|x| x.tau)),
                opt12(m.metrics.as_ref().map(|x| x.mvs)),
                opt12(m.metrics.as_ref().map(|x| x.tds)),
                m.note.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
    }
    finish_csv(w)
}

pub fn timings_csv(records: &[TrialRecord]) -> String {
    let mut w = csv_writer();
    w.write_record(["trial_id", "method", "seconds"])
        .expect("in-memory write");
    for rec in records {
        for m in &rec.results {
            w.write_record([rec.trial_id.to_string(), m.method.name().to_string(), fmt12(m.seconds)])
                .expect("in-memory write");
        }
    }
    finish_csv(w)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv_writer();
    w.write_record([
        "rho",
        "gamma",
        "method",
        "count",
        "failures",
        "sigma_mean",
        "sigma_std",
        "mvs_mean",
        "mvs_std",
        "tds_mean",
        "tds_std",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            fmt12(r.rho),
            fmt12(r.gamma),
            r.method.name().to_string(),
            r.count.to_string(),
            r.failures.to_string(),
            fmt12(r.sigma_mean),
            fmt12(r.sigma_std),
            fmt12(r.mvs_mean),
            fmt12(r.mvs_std),
            fmt12(r.tds_mean),
            fmt12(r.tds_std),
        ])
        .expect("in-memory write");
    }
    finish_csv(w)
}

pub fn pareto_csv(rows: &[ParetoRow]) -> String {
    let mut w = csv_writer();
    w.write_record(["rho", "gamma", "method", "mvs_mean", "tds_mean", "nondominated"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            fmt12(r.rho),
            fmt12(r.gamma),
            r.method.name().to_string(),
            fmt12(r.mvs_mean),
            fmt12(r.tds_mean),
            r.nondominated.to_string(),
        ])
        .expect("in-memory write");
    }
    finish_csv(w)
}

/// Mean TDs against mean MVs, one panel per cell.
pub fn pareto_svg(rows: &[ParetoRow]) -> String {
    const PANEL: f64 = 260.0;
    const PAD: f64 = 40.0;
    let colors = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut cells: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        if !cells.contains(&(r.rho, r.gamma)) {
            cells.push((r.rho, r.gamma));
        }
    }
    let width = PANEL * cells.len().max(1) as f64;
    let height = PANEL + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    for (k, &(rho, gamma)) in cells.iter().enumerate() {
        let x0 = k as f64 * PANEL;
        let pts: Vec<&ParetoRow> = rows.iter().filter(|r| r.rho == rho && r.gamma == gamma).collect();
        let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
        let max_mvs = pts.iter().map(|r| finite(r.mvs_mean)).fold(0.0, f64::max).max(1e-12);
        let max_tds = pts.iter().map(|r| finite(r.tds_mean)).fold(0.0, f64::max).max(1e-12);
        let inner = PANEL - 2.0 * PAD;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{PAD}" width="{inner}" height="{inner}" fill="none" stroke="grey"/>"#,
            x0 + PAD
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20">rho={} gamma={}</text>"#,
            x0 + PAD,
            fmt12(rho),
            fmt12(gamma)
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">MVs</text>"#, x0 + PANEL / 2.0, PANEL - 8.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">TDs</text>"#, x0 + 4.0, PAD - 6.0);
        for r in pts {
            let ci = Method::ALL.iter().position(|&m| m == r.method).unwrap_or(0);
            let cx = x0 + PAD + finite(r.mvs_mean) / max_mvs * inner;
            let cy = PAD + inner - finite(r.tds_mean) / max_tds * inner;
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="4" fill="{}"/>"#, colors[ci]);
        }
    }
    for (ci, m) in Method::ALL.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{}">{}</text>"#,
            PAD + ci as f64 * 90.0,
            height - 10.0,
            colors[ci],
            m.name()
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `trials.csv`, `summary.csv`, `pareto.csv`, `timings.csv` and
/// optionally `pareto.svg` into `dir`.
pub fn write_outputs(result: &SweepResult, dir: &Path, svg: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let files = [
        ("trials.csv", trials_csv(&result.records)),
        ("summary.csv", summary_csv(&result.summary)),
        ("pareto.csv", pareto_csv(&result.pareto)),
        ("timings.csv", timings_csv(&result.records)),
    ];
    for (name, body) in files {
        std::fs::File::create(dir.join(name))?.write_all(body.as_bytes())?;
    }
    if svg {
        std::fs::write(dir.join("pareto.svg"), pareto_svg(&result.pareto))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct AmbiguousTrial {
    pub first: usize,
    pub second: usize,
    pub results: Vec<MethodRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodMeans {
    pub method: Method,
    pub count: usize,
    pub mvs_mean: f64,
    pub tds_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AmbiguousSuiteReport {
    pub trials: Vec<AmbiguousTrial>,
    pub means: Vec<MethodMeans>,
}

/// Every placement of the two weight-2 edges on a 7-cycle.
pub fn run_ambiguous_cycle_suite(options: &RankOptions) -> AmbiguousSuiteReport {
    let placements: Vec<(usize, usize)> = (0..7).flat_map(|a| (a + 1..7).map(move |b| (a, b))).collect();
    let trials: Vec<AmbiguousTrial> = placements
        .par_iter()
        .map(|&(first, second)| AmbiguousTrial {
            first,
            second,
            results: evaluate_methods(&fixtures::ambiguous_seven_cycle(first, second), &Method::ALL, options),
        })
        .collect();
    let means = Method::ALL
        .iter()
        .map(|&method| {
            let ms: Vec<&MetricsReport> = trials
                .iter()
                .filter_map(|t| t.results.iter().find(|r| r.method == method)?.metrics.as_ref())
                .collect();
            let mvs: Vec<f64> = ms.iter().map(|m| m.mvs).collect();
            let tds: Vec<f64> = ms.iter().map(|m| m.tds).collect();
            MethodMeans {
                method,
                count: ms.len(),
                mvs_mean: mean_std(&mvs).0,
                tds_mean: mean_std(&tds).0,
            }
        })
        .collect();
    AmbiguousSuiteReport { trials, means }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureCheck {
    pub name: String,
    pub expected: String,
    pub measured: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureReport {
    pub checks: Vec<FixtureCheck>,
}

impl FixtureReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn near(name: &str, measured: f64, expected: f64, tol: f64) -> FixtureCheck {
    FixtureCheck {
        name: name.to_string(),
        expected: format!("{} ± {}", fmt12(expected), fmt12(tol)),
        measured: fmt12(measured),
        pass: (measured - expected).abs() <= tol,
    }
}

fn flag(name: &str, expected: &str, measured: String, pass: bool) -> FixtureCheck {
    FixtureCheck {
        name: name.to_string(),
        expected: expected.to_string(),
        measured,
        pass,
    }
}

fn fixture_checks(out: &mut Vec<FixtureCheck>) -> Result<()> {
    let ln2 = 2f64.ln();
    let pcm = fixtures::reversal_example();
    let (g, gd) = build_graphs(&pcm);
    let exact = solve_exact_ilp(&pcm, &ExactOptions::default())?;
    let fast = solve_fast_path(&gd, &pcm, crate::ordinal::DEFAULT_DELTA, graph::DEFAULT_CYCLE_CAP)?;
    let expected = fixtures::reversal_expected_order();
    out.push(flag(
        "reversal example: ordinal solution",
        "reference order, unique",
        format!(
            "exact={} fast={}",
            exact.to_bool_rows() == expected,
            fast.to_bool_rows() == expected
        ),
        exact.to_bool_rows() == expected
            && fast.to_bool_rows() == expected
            && exact.uniqueness_certificate()
            && fast.uniqueness_certificate(),
    ));
    let sigma = evaluate_objective(&pcm, &exact, crate::ordinal::DEFAULT_DELTA).sigma;
    out.push(near("reversal example: sigma*", sigma, 7.6246, 1e-3));
    let ills = cardinal::solve_ills(&g)?;
    let ills_sigma = evaluate_objective(&pcm, &ordinal_from_weights(&pcm, &ills)?, crate::ordinal::DEFAULT_DELTA).sigma;
    out.push(near(
        "reversal example: sigma of ILLS order",
        ills_sigma,
        10.0 * ln2,
        1e-9,
    ));
    let ills_obj = cardinal::log_ls_objective(&g, ills.log_weights());
    out.push(near("reversal example: ILLS objective", ills_obj, 1.6963, 1e-3));
    let problem = cardinal::LogLsProblem::from_ordinal(g.clone(), &exact, 0.1)?;
    let sol = cardinal::solve_constrained(&problem)?;
    out.push(near(
        "reversal example: constrained objective (eps 0.1)",
        sol.objective,
        1.7232,
        1e-3,
    ));
    out.push(near(
        "reversal example: relative increase (%)",
        100.0 * (sol.objective / ills_obj - 1.0),
        1.6,
        0.1,
    ));
    let (w, wi) = (sol.weights.weights(), ills.weights());
    out.push(flag(
        "reversal example: w1 vs w2",
        "w*_1 > w*_2 and ILLS w_1 < w_2",
        format!("{} {}", w[0] > w[1], wi[0] < wi[1]),
        w[0] > w[1] && wi[0] < wi[1],
    ));
    out.push(near("reversal example: MVs ILLS", compute_mvs(&pcm, &ills)?, 1.0, 0.0));
    out.push(near(
        "reversal example: MVs ILLS-MWOV",
        compute_mvs(&pcm, &sol.weights)?,
        0.0,
        0.0,
    ));
    out.push(near(
        "reversal example: TDs ILLS",
        compute_tds(&pcm, &ills)?,
        5.71,
        0.01,
    ));
    out.push(near(
        "reversal example: TDs ILLS-MWOV",
        compute_tds(&pcm, &sol.weights)?,
        6.17,
        0.01,
    ));
    let delta = compute_delta(&pcm, &ills, &sol.weights)?;
    let top = largest_entries(&delta, 3);
    for ((i, j), v) in [((0, 5), 0.150), ((0, 1), 0.133), ((1, 0), 0.124)] {
        out.push(near(
            &format!("reversal example: Delta_{}{}", i + 1, j + 1),
            delta[(i, j)],
            v,
            0.002,
        ));
    }
    let mut top_pairs: Vec<(usize, usize)> = top.iter().map(|t| (t.0, t.1)).collect();
    top_pairs.sort();
    out.push(flag(
        "reversal example: three largest Delta entries",
        "(1,2) (1,6) (2,1)",
        format!("{top_pairs:?}"),
        top_pairs == vec![(0, 1), (0, 5), (1, 0)],
    ));

    let cycle5 = fixtures::ambiguous_cycle();
    let x1 = solve_exact_ilp(&cycle5, &ExactOptions::default())?;
    let sigma1 = evaluate_objective(&cycle5, &x1, crate::ordinal::DEFAULT_DELTA).sigma;
    out.push(flag(
        "ambiguous cycle: optima",
        "2, not unique",
        format!("{:?}, unique={}", x1.optimum_count(), x1.uniqueness_certificate()),
        x1.optimum_count() == Some(2) && !x1.uniqueness_certificate(),
    ));
    out.push(near(
        "ambiguous cycle: sigma",
        sigma1,
        7f64.ln() + 5f64.ln() + 3f64.ln(),
        1e-9,
    ));

    let shared = fixtures::shared_edge_cycles();
    let x2 = solve_exact_ilp(&shared, &ExactOptions::default())?;
    let eligible = check_uniqueness_conditions(&build_graphs(&shared).1, graph::DEFAULT_CYCLE_CAP)?.is_eligible();
    out.push(flag(
        "shared-edge cycles: x_32 = 1, unique",
        "x_32 = 1, unique, not eligible",
        format!(
            "x_32={} unique={} eligible={eligible}",
            x2.get(2, 1),
            x2.uniqueness_certificate()
        ),
        x2.get(2, 1) && x2.uniqueness_certificate() && !eligible,
    ));

    let tie = fixtures::tie_cycle();
    let gd3 = build_graphs(&tie).1;
    let f3 = solve_fast_path(&gd3, &tie, crate::ordinal::DEFAULT_DELTA, graph::DEFAULT_CYCLE_CAP)?;
    let e3 = solve_exact_ilp(&tie, &ExactOptions::default())?;
    out.push(flag(
        "tie cycle: fast path equals exact",
        "bitwise equal, x_21 = 1",
        format!("equal={} x_21={}", f3.to_bool_rows() == e3.to_bool_rows(), f3.get(1, 0)),
        f3.to_bool_rows() == e3.to_bool_rows() && f3.get(1, 0),
    ));
    Ok(())
}

/// Checks the bundled reference instances; failures are report entries.
pub fn run_fixture_suite() -> FixtureReport {
    let mut checks = Vec::new();
    if let Err(e) = fixture_checks(&mut checks) {
        checks.push(flag("fixture suite", "no error", e.to_string(), false));
    }
    FixtureReport { checks }
}

/// Connectivity of a generated instance; exposed for the harness tests.
pub fn is_connected(pcm: &IncompletePcm) -> bool {
    ComparisonGraph::from_pcm(pcm).is_connected()
}

/// Counts of trials per method whose metrics failed, keyed by method name.
pub fn failure_counts(records: &[TrialRecord]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for rec in records {
        for m in &rec.results {
            if m.metrics.is_none() {
                *out.entry(m.method.name().to_string()).or_insert(0) += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_targets() {
        assert_eq!(target_edges(7, 1.0), 21);
        assert_eq!(target_edges(7, 0.5), 11);
        assert_eq!(target_edges(7, 2.0 / 7.0), 6);
    }

    #[test]
    fn complete_instance_at_full_density() {
        let mut rng = trial_rng(1, 0, 0);
        let (pcm, _) = generate_instance(7, 1.0, 0.2, &mut rng).unwrap();
        assert!(pcm.is_complete());
    }

    #[test]
    fn infeasible_density_is_rejected() {
        let mut rng = trial_rng(1, 0, 0);
        assert!(matches!(
            generate_instance(7, 0.2, 0.2, &mut rng),
            Err(Error::InfeasibleDensity { .. })
        ));
    }

    #[test]
    fn instances_are_connected_with_exact_edge_count() {
        for trial in 0..200 {
            let mut rng = trial_rng(9, 0, trial);
            let n = 3 + trial % 8;
            let rho = [0.5, 0.7, 1.0][trial % 3];
            let (pcm, _) = generate_instance(n, rho, 0.3, &mut rng).unwrap();
            assert!(is_connected(&pcm));
            assert_eq!(pcm.pair_count(), target_edges(n, rho).max(n - 1));
        }
    }

    #[test]
    fn zero_noise_is_consistent() {
        let mut rng = trial_rng(3, 0, 0);
        let (pcm, w) = generate_instance(6, 0.6, 0.0, &mut rng).unwrap();
        for (i, j) in pcm.pairs() {
            let r = w.weights()[i] / w.weights()[j];
            assert!((pcm.get(i, j) - r).abs() <= 1e-12 * r);
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = ExperimentConfig::default();
        assert_eq!((c.n, c.trials, c.seed), (7, 100, 42));
        assert_eq!(c.parsed_methods().unwrap().len(), 5);
        let bad: ExperimentConfig = serde_json::from_str(r#"{"densities": [0.1]}"#).unwrap();
        assert!(matches!(bad.validate(), Err(Error::InfeasibleDensity { .. })));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn small_sweep_is_reproducible() {
        let config = ExperimentConfig {
            densities: vec![0.5],
            gammas: vec![0.2],
            trials: 4,
            ..ExperimentConfig::default()
        };
        let a = run_sweep(&config).unwrap();
        let b = run_sweep(&ExperimentConfig {
            workers: Some(1),
            ..config
        })
        .unwrap();
        assert_eq!(trials_csv(&a.records), trials_csv(&b.records));
        assert_eq!(summary_csv(&a.summary), summary_csv(&b.summary));
        assert_eq!(a.summary.len(), 5);
        assert!(pareto_svg(&a.pareto).starts_with("<svg"));
    }
}
