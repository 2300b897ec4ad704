//! `ahp-rank`: rank alternatives from an incomplete pairwise-comparison
//! matrix, compare methods, score weight vectors and run experiments.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage error.
//! Nothing is written to stdout unless the command succeeds.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use ahp_rank_core::cardinal::log_ls_objective;
use ahp_rank_core::experiments::{
    failure_counts, generate_instance, run_ambiguous_cycle_suite, run_fixture_suite, run_sweep, trial_rng,
    write_outputs, ExperimentConfig, THREADS_ENV,
};
use ahp_rank_core::graph::build_graphs;
use ahp_rank_core::metrics::{compute_delta, MetricsReport};
use ahp_rank_core::pcm::{
    fmt12, read_matrix, read_text, read_weights, round_sig12, serialize_matrix, serialize_weights, Format,
    IncompletePcm, Normalization, PriorityVector,
};
use ahp_rank_core::pipeline::{run_method, solve_ordinal_stage, Method, RankOptions};
use ahp_rank_core::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "ahp-rank",
    version,
    about = "Priority vectors from incomplete pairwise comparisons"
)]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank alternatives with one method (ILLS-MWOV by default).
    Rank(RankArgs),
    /// Run all five methods and print a metrics table.
    Compare(CompareArgs),
    /// Score a weight vector against a matrix.
    Metrics(MetricsArgs),
    /// Generate a random instance.
    Gen(GenArgs),
    /// Run a Monte-Carlo sweep.
    Experiment(ExperimentArgs),
    /// Check the bundled reference instances.
    Fixtures(FixturesArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// Separation margin between ordered log-weights.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Penalty for ordering a tied pair.
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    /// Time budget for the exact ordinal search, in milliseconds.
    #[arg(long, default_value_t = 10_000)]
    budget_ms: u64,
}

impl SolverArgs {
    fn options(&self) -> Result<RankOptions> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        Ok(RankOptions {
            epsilon: self.epsilon,
            delta: self.delta,
            budget: Duration::from_millis(self.budget_ms),
            ..RankOptions::default()
        })
    }
}

#[derive(Args)]
struct RankArgs {
    /// Matrix file (.csv or .json).
    matrix: PathBuf,
    #[arg(long, default_value = "ills-mwov", value_parser = parse_method)]
    method: Method,
    #[command(flatten)]
    solver: SolverArgs,
    /// Stop after the ordinal stage and print the preference matrix.
    #[arg(long)]
    ordinal_only: bool,
    /// Write the comparison and dominance graphs in DOT format.
    #[arg(long, value_name = "PATH")]
    emit_dot: Option<PathBuf>,
    #[arg(long, default_value = "sum-one", value_parser = parse_normalization)]
    normalization: Normalization,
}

#[derive(Args)]
struct CompareArgs {
    matrix: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: Format,
}

#[derive(Args)]
struct MetricsArgs {
    matrix: PathBuf,
    weights: PathBuf,
    /// Penalty for ordering a tied pair, used for tau.
    #[arg(long, default_value_t = 1e-4)]
    delta: f64,
    /// Second weight vector; adds the per-entry change matrix to the report.
    #[arg(long, value_name = "WEIGHTS")]
    against: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 7)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Trial index within the seed's stream.
    #[arg(long, default_value_t = 0)]
    trial: usize,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: Format,
    /// Also write the ground-truth weights here.
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Densities, comma separated.
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// Perturbation levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Also write pareto.svg.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct FixturesArgs {
    /// Also run the 21-placement ambiguous 7-cycle suite.
    #[arg(long)]
    ambiguous: bool,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse()
        .map_err(|_| format!("unknown format `{s}` (expected csv or json)"))
}

fn parse_normalization(s: &str) -> std::result::Result<Normalization, String> {
    s.parse()
        .map_err(|_| format!("unknown normalization `{s}` (expected sum-one or component-one-fixed)"))
}

fn r(x: f64) -> Value {
    json!(round_sig12(x))
}

fn rv(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| r(x)).collect())
}

fn alt_name(pcm: &IncompletePcm, i: usize) -> String {
    pcm.labels()
        .and_then(|l| l.get(i).cloned())
        .unwrap_or_else(|| (i + 1).to_string())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

fn rank(args: &RankArgs, as_json: bool) -> Result<String> {
    let pcm = read_matrix(&args.matrix)?;
    let options = args.solver.options()?;
    let (g, gd) = build_graphs(&pcm);
    if let Some(path) = &args.emit_dot {
        std::fs::write(path, format!("{}{}", g.to_dot(&pcm), gd.to_dot()))?;
    }
    if args.ordinal_only {
        let stage = solve_ordinal_stage(&pcm, &options)?;
        let x = &stage.matrix;
        if as_json {
            let mut v = x.to_json_value();
            v["sigma"] = r(stage.objective.sigma);
            v["tau"] = r(stage.objective.tau);
            v["timed_out"] = json!(stage.timed_out);
            return Ok(pretty(&v));
        }
        let mut out = x.to_csv();
        writeln!(out, "sigma: {}", fmt12(stage.objective.sigma)).ok();
        writeln!(out, "tau: {}", fmt12(stage.objective.tau)).ok();
        writeln!(out, "unique: {}", x.uniqueness_certificate()).ok();
        writeln!(out, "provenance: {:?}", x.provenance()).ok();
        if stage.timed_out {
            writeln!(out, "timed out: best incumbent reported").ok();
        }
        return Ok(out);
    }

    let output = run_method(&pcm, args.method, &options)?;
    let weights = PriorityVector::from_weights(&output.weights, Normalization::SumOne);
    let (shown, normalization) = match &weights {
        Ok(w) => {
            let w = w.renormalized(args.normalization);
            (w.weights().to_vec(), args.normalization)
        }
        Err(_) => (output.weights.clone(), Normalization::SumOne),
    };
    let metrics = weights
        .as_ref()
        .ok()
        .map(|w| MetricsReport::compute(&pcm, w, options.delta))
        .transpose()?;
    let objective = weights.as_ref().ok().map(|w| log_ls_objective(&g, w.log_weights()));

    if as_json {
        let mut v = json!({
            "method": output.method,
            "normalization": normalization,
            "weights": rv(&shown),
            "objective": objective.map(round_sig12),
        });
        if let Some(m) = &metrics {
            v["sigma"] = r(m.sigma);
            v["tau"] = r(m.tau);
            v["mvs"] = r(m.mvs);
            v["tds"] = r(m.tds);
        }
        if let Some(mw) = &output.mwov {
            let c = &mw.cardinal.certificate;
            v["ordinal"] = mw.ordinal.matrix.to_json_value();
            v["sigma"] = r(mw.ordinal.objective.sigma);
            v["tau"] = r(mw.ordinal.objective.tau);
            v["timed_out"] = json!(mw.ordinal.timed_out);
            v["objective"] = r(mw.cardinal.objective);
            v["epsilon"] = r(options.epsilon);
            v["active_constraints"] = json!(mw
                .cardinal
                .active
                .iter()
                .map(|&(i, j)| [i + 1, j + 1])
                .collect::<Vec<_>>());
            v["kkt"] = json!({
                "stationarity": r(c.stationarity),
                "complementarity": r(c.complementarity),
                "primal_feasibility": r(c.primal_feasibility),
                "dual_feasibility": r(c.dual_feasibility),
            });
        }
        return Ok(pretty(&v));
    }

    let mut out = String::new();
    writeln!(out, "method: {}", output.method).ok();
    writeln!(out, "weights ({normalization}):").ok();
    for (i, w) in shown.iter().enumerate() {
        writeln!(out, "  {}  {}", alt_name(&pcm, i), fmt12(*w)).ok();
    }
    if weights.is_err() {
        writeln!(out, "warning: weight vector has nonpositive components").ok();
    }
    match &output.mwov {
        Some(mw) => {
            let c = &mw.cardinal.certificate;
            writeln!(out, "objective: {}", fmt12(mw.cardinal.objective)).ok();
            writeln!(out, "sigma: {}", fmt12(mw.ordinal.objective.sigma)).ok();
            writeln!(out, "tau: {}", fmt12(mw.ordinal.objective.tau)).ok();
            writeln!(
                out,
                "ordinal stage: {:?}, unique: {}{}",
                mw.ordinal.matrix.provenance(),
                mw.ordinal.matrix.uniqueness_certificate(),
                if mw.ordinal.timed_out { ", timed out" } else { "" }
            )
            .ok();
            let active: Vec<String> = mw
                .cardinal
                .active
                .iter()
                .map(|&(i, j)| format!("{}>{}", alt_name(&pcm, i), alt_name(&pcm, j)))
                .collect();
            writeln!(out, "active constraints: {}", active.join(" ")).ok();
            writeln!(
                out,
                "kkt residuals: stationarity {} complementarity {} primal {} dual {}",
                fmt12(c.stationarity),
                fmt12(c.complementarity),
                fmt12(c.primal_feasibility),
                fmt12(c.dual_feasibility)
            )
            .ok();
        }
        None => {
            if let Some(obj) = objective {
                writeln!(out, "objective: {}", fmt12(obj)).ok();
            }
            if let Some(m) = &metrics {
                writeln!(out, "sigma: {}", fmt12(m.sigma)).ok();
                writeln!(out, "tau: {}", fmt12(m.tau)).ok();
            }
        }
    }
    if let Some(m) = &metrics {
        writeln!(out, "mvs: {}", fmt12(m.mvs)).ok();
        writeln!(out, "tds: {}", fmt12(m.tds)).ok();
    }
    Ok(out)
}

struct CompareRow {
    method: Method,
    weights: Vec<f64>,
    metrics: Option<MetricsReport>,
    note: Option<String>,
}

fn compare(args: &CompareArgs, as_json: bool) -> Result<String> {
    let pcm = read_matrix(&args.matrix)?;
    let options = args.solver.options()?;
    if !build_graphs(&pcm).0.is_connected() {
        return Err(Error::Disconnected);
    }
    let rows: Vec<CompareRow> = Method::ALL
        .iter()
        .map(|&method| {
            let scored = run_method(&pcm, method, &options).map(|out| {
                let metrics = PriorityVector::from_weights(&out.weights, Normalization::SumOne)
                    .and_then(|w| MetricsReport::compute(&pcm, &w, options.delta));
                (out.weights, metrics)
            });
            match scored {
                Ok((weights, Ok(m))) => CompareRow {
                    method,
                    weights,
                    metrics: Some(m),
                    note: None,
                },
                Ok((weights, Err(e))) => CompareRow {
                    method,
                    weights,
                    metrics: None,
                    note: Some(e.to_string()),
                },
                Err(e) => CompareRow {
                    method,
                    weights: Vec::new(),
                    metrics: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect();
    if as_json || args.format == Format::Json {
        let v: Vec<Value> = rows
            .iter()
            .map(|row| {
                json!({
                    "method": row.method,
                    "weights": rv(&row.weights),
                    "sigma": row.metrics.as_ref().map(|m| round_sig12(m.sigma)),
                    "tau": row.metrics.as_ref().map(|m| round_sig12(m.tau)),
                    "mvs": row.metrics.as_ref().map(|m| round_sig12(m.mvs)),
                    "tds": row.metrics.as_ref().map(|m| round_sig12(m.tds)),
                    "note": row.note,
                })
            })
            .collect();
        return Ok(pretty(&Value::Array(v)));
    }
    let n = pcm.n();
    let mut out = String::from("method,sigma,tau,mvs,tds");
    for i in 0..n {
        write!(out, ",w_{}", alt_name(&pcm, i)).ok();
    }
    out.push_str(",note\n");
    for row in &rows {
        let cell = |f: fn(&MetricsReport) -> f64| row.metrics.as_ref().map(|m| fmt12(f(m))).unwrap_or_default();
        write!(
            out,
            "{},{},{},{},{}",
            row.method,
            cell(|m| m.sigma),
            cell(|m| m.tau),
            cell(|m| m.mvs),
            cell(|m| m.tds)
        )
        .ok();
        for i in 0..n {
            write!(out, ",{}", row.weights.get(i).map(|&w| fmt12(w)).unwrap_or_default()).ok();
        }
        let note = row.note.as_deref().unwrap_or("").replace(['"', ','], ";");
        writeln!(out, ",{note}").ok();
    }
    Ok(out)
}

fn metrics(args: &MetricsArgs) -> Result<String> {
    let pcm = read_matrix(&args.matrix)?;
    let w = read_weights(&args.weights)?;
    if w.len() != pcm.n() {
        return Err(Error::DimensionMismatch {
            expected: pcm.n(),
            got: w.len(),
        });
    }
    let mut report = MetricsReport::compute(&pcm, &w, args.delta)?;
    if let Some(path) = &args.against {
        let other = read_weights(path)?;
        if other.len() != pcm.n() {
            return Err(Error::DimensionMismatch {
                expected: pcm.n(),
                got: other.len(),
            });
        }
        report = report.with_delta(&compute_delta(&pcm, &w, &other)?);
    }
    let v = json!({
        "sigma": r(report.sigma),
        "tau": r(report.tau),
        "mvs": r(report.mvs),
        "tds": r(report.tds),
        "delta": report.delta.as_ref().map(|d| d.iter().map(|row| rv(row)).collect::<Vec<_>>()),
    });
    Ok(pretty(&v))
}

fn generate(args: &GenArgs, as_json: bool) -> Result<String> {
    let mut rng = trial_rng(args.seed, 0, args.trial);
    let (pcm, truth) = generate_instance(args.n, args.rho, args.gamma, &mut rng)?;
    let format = if as_json { Format::Json } else { args.format };
    if let Some(path) = &args.truth {
        std::fs::write(path, serialize_weights(&truth, None, Format::from_path(path)))?;
    }
    Ok(serialize_matrix(&pcm, format))
}

fn experiment(args: &ExperimentArgs, as_json: bool) -> Result<String> {
    let mut config = match &args.config {
        Some(path) => serde_json::from_str::<ExperimentConfig>(&read_text(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(rho) = &args.rho {
        config.densities = rho.clone();
    }
    if let Some(gamma) = &args.gamma {
        config.gammas = gamma.clone();
    }
    if let Some(t) = args.trials {
        config.trials = t;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(e) = args.epsilon {
        config.epsilon = e;
    }
    if let Some(d) = args.delta {
        config.delta = d;
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    let result = run_sweep(&config)?;
    write_outputs(&result, &args.out, args.svg)?;
    let failures = failure_counts(&result.records);
    if as_json {
        let summary: Vec<Value> = result
            .summary
            .iter()
            .map(|s| {
                json!({
                    "rho": r(s.rho),
                    "gamma": r(s.gamma),
                    "method": s.method,
                    "count": s.count,
                    "failures": s.failures,
                    "sigma_mean": r(s.sigma_mean),
                    "sigma_std": r(s.sigma_std),
                    "mvs_mean": r(s.mvs_mean),
                    "mvs_std": r(s.mvs_std),
                    "tds_mean": r(s.tds_mean),
                    "tds_std": r(s.tds_std),
                })
            })
            .collect();
        return Ok(pretty(&json!({
            "out": args.out.display().to_string(),
            "trials": result.records.len(),
            "failures": failures,
            "summary": summary,
        })));
    }
    let mut out = String::new();
    writeln!(out, "{} trials written to {}", result.records.len(), args.out.display()).ok();
    writeln!(out, "rho,gamma,method,mvs_mean,sigma_mean,tds_mean,failures").ok();
    for s in &result.summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt12(s.rho),
            fmt12(s.gamma),
            s.method,
            fmt12(s.mvs_mean),
            fmt12(s.sigma_mean),
            fmt12(s.tds_mean),
            s.failures
        )
        .ok();
    }
    Ok(out)
}

fn fixtures(args: &FixturesArgs, as_json: bool) -> Result<String> {
    let report = run_fixture_suite();
    let ambiguous = args
        .ambiguous
        .then(|| run_ambiguous_cycle_suite(&RankOptions::default()));
    if as_json {
        let mut v = json!({ "checks": report.checks, "all_passed": report.all_passed() });
        if let Some(a) = &ambiguous {
            v["ambiguous_cycle_means"] = json!(a
                .means
                .iter()
                .map(|m| json!({
                    "method": m.method,
                    "count": m.count,
                    "mvs_mean": r(m.mvs_mean),
                    "tds_mean": r(m.tds_mean),
                }))
                .collect::<Vec<_>>());
        }
        return Ok(pretty(&v));
    }
    let mut out = String::new();
    for c in &report.checks {
        writeln!(
            out,
            "{} {}: {} (expected {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.expected
        )
        .ok();
    }
    if let Some(a) = &ambiguous {
        writeln!(out, "ambiguous 7-cycle suite, {} placements:", a.trials.len()).ok();
        for m in &a.means {
            writeln!(
                out,
                "  {}: MVs {} TDs {} (n={})",
                m.method,
                fmt12(m.mvs_mean),
                fmt12(m.tds_mean),
                m.count
            )
            .ok();
        }
    }
    Ok(out)
}

fn configure_threads() {
    let workers = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    if let Some(w) = workers.filter(|&w| w > 0) {
        // only fails if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
}

fn dispatch(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Rank(a) => rank(a, cli.json),
        Command::Compare(a) => compare(a, cli.json),
        Command::Metrics(a) => metrics(a),
        Command::Gen(a) => generate(a, cli.json),
        Command::Experiment(a) => experiment(a, cli.json),
        Command::Fixtures(a) => fixtures(a, cli.json),
    }
}

fn report_error(e: &Error, path_hint: Option<&Path>) {
    match path_hint {
        Some(p) => eprintln!("error [{}] ({}): {e}", e.kind(), p.display()),
        None => eprintln!("error [{}]: {e}", e.kind()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match dispatch(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let hint = match &cli.command {
                Command::Rank(a) => Some(a.matrix.as_path()),
                Command::Compare(a) => Some(a.matrix.as_path()),
                _ => None,
            };
            report_error(&e, hint.filter(|_| !matches!(e, Error::FileNotFound(_))));
            ExitCode::from(1)
        }
    }
}
