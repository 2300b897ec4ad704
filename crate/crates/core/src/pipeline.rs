//! The two-stage ranking method and a uniform entry point for all methods.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Serialize, Serializer};

use crate::baselines::{solve_ev, solve_idls, solve_ills_baseline, solve_iwls, IDLS_DEFAULT_RESTARTS};
use crate::cardinal::{solve_constrained, ConstrainedSolution, LogLsProblem, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::graph::{build_graphs, check_uniqueness_conditions, UniquenessCheck, DEFAULT_CYCLE_CAP};
use crate::ordinal::{
    evaluate_objective, solve_exact_ilp, solve_fast_path, ExactOptions, OrdinalObjective, OrdinalPreferenceMatrix,
    DEFAULT_BUDGET, DEFAULT_DELTA,
};
use crate::pcm::IncompletePcm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    IllsMwov,
    Ills,
    Ev,
    Idls,
    Iwls,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::IllsMwov, Method::Ills, Method::Ev, Method::Idls, Method::Iwls];

    pub fn name(self) -> &'static str {
        match self {
            Method::IllsMwov => "ILLS-MWOV",
            Method::Ills => "ILLS",
            Method::Ev => "EV",
            Method::Idls => "IDLS",
            Method::Iwls => "IWLS",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('_', "-");
        Ok(match key.as_str() {
            "ills-mwov" | "mwov" => Method::IllsMwov,
            "ills" => Method::Ills,
            "ev" => Method::Ev,
            "idls" => Method::Idls,
            "iwls" => Method::Iwls,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown method '{s}' (expected one of ills-mwov, ills, ev, idls, iwls)"
                )))
            }
        })
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RankOptions {
    pub epsilon: f64,
    pub delta: f64,
    pub budget: Duration,
    pub cycle_cap: usize,
    pub idls_restarts: usize,
}

impl Default for RankOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            delta: DEFAULT_DELTA,
            budget: DEFAULT_BUDGET,
            cycle_cap: DEFAULT_CYCLE_CAP,
            idls_restarts: IDLS_DEFAULT_RESTARTS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OrdinalStage {
    pub matrix: OrdinalPreferenceMatrix,
    pub objective: OrdinalObjective,
    pub check: Option<UniquenessCheck>,
    /// Set when the exact solver ran out of budget and `matrix` is its
    /// incumbent.
    pub timed_out: bool,
}

/// Fast path when the uniqueness conditions hold, branch-and-bound
/// otherwise (including when cycle enumeration exceeds its cap).
pub fn solve_ordinal_stage(pcm: &IncompletePcm, options: &RankOptions) -> Result<OrdinalStage> {
    let (g, gd) = build_graphs(pcm);
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let check = match check_uniqueness_conditions(&gd, options.cycle_cap) {
        Ok(c) => Some(c),
        Err(Error::CycleExplosion { cap }) => {
            log::warn!("more than {cap} cycles; using branch-and-bound");
            None
        }
        Err(e) => return Err(e),
    };
    let eligible = check.as_ref().is_some_and(UniquenessCheck::is_eligible);
    let (matrix, timed_out) = if eligible {
        (solve_fast_path(&gd, pcm, options.delta, options.cycle_cap)?, false)
    } else {
        let exact = ExactOptions {
            delta: options.delta,
            budget: options.budget,
        };
        match solve_exact_ilp(pcm, &exact) {
            Ok(x) => (x, false),
            Err(Error::Timeout { incumbent, budget_ms }) => {
                log::warn!("branch-and-bound stopped after {budget_ms} ms; using incumbent");
                (*incumbent, true)
            }
            Err(e) => return Err(e),
        }
    };
    let objective = evaluate_objective(pcm, &matrix, options.delta);
    Ok(OrdinalStage {
        matrix,
        objective,
        check,
        timed_out,
    })
}

#[derive(Debug, Clone)]
pub struct MwovResult {
    pub ordinal: OrdinalStage,
    pub cardinal: ConstrainedSolution,
}

pub fn rank_ills_mwov(pcm: &IncompletePcm, options: &RankOptions) -> Result<MwovResult> {
    let ordinal = solve_ordinal_stage(pcm, options)?;
    let (g, _) = build_graphs(pcm);
    let problem = LogLsProblem::from_ordinal(g, &ordinal.matrix, options.epsilon)?;
    let cardinal = solve_constrained(&problem)?;
    Ok(MwovResult { ordinal, cardinal })
}

#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub method: Method,
    /// Sum-one weights; IWLS may yield nonpositive components.
    pub weights: Vec<f64>,
    pub mwov: Option<MwovResult>,
}

pub fn run_method(pcm: &IncompletePcm, method: Method, options: &RankOptions) -> Result<MethodOutput> {
    let baseline = match method {
        Method::IllsMwov => {
            let r = rank_ills_mwov(pcm, options)?;
            return Ok(MethodOutput {
                method,
                weights: r.cardinal.weights.weights().to_vec(),
                mwov: Some(r),
            });
        }
        Method::Ills => solve_ills_baseline(pcm)?,
        Method::Ev => solve_ev(pcm)?,
        Method::Idls => solve_idls(pcm, options.idls_restarts)?,
        Method::Iwls => solve_iwls(pcm)?,
    };
    Ok(MethodOutput {
        method,
        weights: baseline.raw_weights,
        mwov: None,
    })
}
