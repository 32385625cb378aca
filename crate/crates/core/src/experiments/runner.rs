//! Parallel, deterministic execution of a scenario.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{fit_mle, fit_whittle, Method};
use crate::models::{ModelKind, ModelParams, Param};
use crate::simulate::{simulate, transform_square, TimeSeries};
use crate::variogram::{fit_wls_series, FitFlag, FitResult};

use super::scenario::{Scenario, Transform};
use super::summary::{summarize, MethodSummary};

/// A scenario fails when more than this fraction of replicates fail.
pub const MAX_FAILURE_FRACTION: f64 = 0.10;

/// One CSV line: a single parameter estimate of one fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scenario: String,
    pub replicate: usize,
    pub method: Method,
    pub param: Param,
    pub estimate: Option<f64>,
    pub std_err: Option<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub replicate: usize,
    /// `None` when the simulation itself failed.
    pub method: Option<Method>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagCount {
    pub method: Method,
    pub flag: FitFlag,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub code_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    /// Parameters the estimates are scored against.
    pub truth: ModelParams,
    pub provenance: Provenance,
    pub summaries: Vec<MethodSummary>,
    pub failures: Vec<Failure>,
    pub flag_counts: Vec<FlagCount>,
    /// Replicate rows; written to CSV rather than JSON.
    #[serde(skip)]
    pub rows: Vec<Row>,
}

impl ScenarioReport {
    pub fn summary(&self, method: Method, param: Param) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method && s.param == param)
    }

    /// Converged estimates of `param` by `method`, in replicate order.
    pub fn estimates(&self, method: Method, param: Param) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.param == param && r.converged)
            .filter_map(|r| r.estimate)
            .collect()
    }

    /// Replicates with at least one failed fit or a failed simulation.
    pub fn failed_replicates(&self) -> usize {
        let mut reps: Vec<usize> = self.failures.iter().map(|f| f.replicate).collect();
        reps.dedup();
        reps.len()
    }
}

/// Starting `tau`: the first lag at which the sample autocorrelation drops
/// below `1/e`, or half the record if it never does.
pub fn initial_tau(series: &TimeSeries) -> f64 {
    let x = series.values();
    let n = x.len();
    let mean = series.mean();
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    if c0 > 0.0 {
        for k in 1..n / 2 {
            let ck: f64 = x.iter().zip(&x[k..]).map(|(a, b)| (a - mean) * (b - mean)).sum();
            if ck / c0 < (-1.0f64).exp() {
                return k as f64 * series.dt();
            }
        }
    }
    (n / 2).max(1) as f64 * series.dt()
}

pub fn fit_method(method: Method, series: &TimeSeries, kind: ModelKind) -> Result<FitResult> {
    let tau0 = initial_tau(series);
    match method {
        Method::Wls => fit_wls_series(series, kind, tau0),
        Method::Mle | Method::Whittle => {
            let mean = series.mean();
            let var = series.values().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / series.len() as f64;
            let init = ModelParams::new(mean, var.max(f64::MIN_POSITIVE), tau0)?;
            if method == Method::Mle {
                fit_mle(series, kind, &init)
            } else {
                fit_whittle(series, kind, &init)
            }
        }
    }
}

/// The series a replicate's estimators see.
pub fn replicate_series(s: &Scenario, replicate: usize) -> Result<TimeSeries> {
    let series = simulate(&s.sim_config(replicate as u64))?;
    Ok(match s.transform {
        Transform::None => series,
        Transform::Square => transform_square(&series),
    })
}

struct ReplicateOutcome {
    rows: Vec<Row>,
    failures: Vec<Failure>,
    flags: Vec<(Method, FitFlag)>,
}

fn run_replicate(s: &Scenario, replicate: usize) -> ReplicateOutcome {
    let mut out = ReplicateOutcome {
        rows: Vec::with_capacity(3 * s.methods.len()),
        failures: Vec::new(),
        flags: Vec::new(),
    };
    let series = replicate_series(s, replicate);
    if let Err(e) = &series {
        out.failures.push(Failure {
            replicate,
            method: None,
            reason: e.reason_code().to_string(),
        });
    }
    for &method in &s.methods {
        let fit = match &series {
            Ok(series) => fit_method(method, series, s.kind).map_err(|e| {
                log::debug!("{} replicate {replicate} {method}: {e}", s.name);
                out.failures.push(Failure {
                    replicate,
                    method: Some(method),
                    reason: e.reason_code().to_string(),
                });
            }),
            Err(_) => Err(()),
        };
        if let Ok(fit) = &fit {
            out.flags.extend(fit.flags.iter().map(|&f| (method, f)));
        }
        for param in Param::ALL {
            let (estimate, std_err, converged) = match &fit {
                Ok(fit) => (
                    Some(fit.params.get(param)),
                    fit.std_errs.as_ref().and_then(|se| se.get(param)),
                    fit.converged,
                ),
                Err(()) => (None, None, false),
            };
            out.rows.push(Row {
                scenario: s.name.clone(),
                replicate,
                method,
                param,
                estimate,
                std_err,
                converged,
            });
        }
    }
    out
}

/// Runs every replicate on the global rayon pool.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioReport> {
    run_replicates(s)
}

/// Runs every replicate on a dedicated pool of `workers` threads. Output does
/// not depend on `workers`.
pub fn run_scenario_with_workers(s: &Scenario, workers: usize) -> Result<ScenarioReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_replicates(s))
}

fn run_replicates(s: &Scenario) -> Result<ScenarioReport> {
    s.validate()?;
    let truth = s.fit_truth()?;
    log::info!("running {} ({} replicates, n = {})", s.name, s.replicates, s.n);
    let outcomes: Vec<ReplicateOutcome> = (0..s.replicates)
        .into_par_iter()
        .map(|i| run_replicate(s, i))
        .collect();

    let mut rows = Vec::with_capacity(s.replicates * s.methods.len() * 3);
    let mut failures = Vec::new();
    let mut flag_counts: Vec<FlagCount> = Vec::new();
    for outcome in outcomes {
        rows.extend(outcome.rows);
        failures.extend(outcome.failures);
        for (method, flag) in outcome.flags {
            match flag_counts.iter_mut().find(|c| c.method == method && c.flag == flag) {
                Some(c) => c.count += 1,
                None => flag_counts.push(FlagCount { method, flag, count: 1 }),
            }
        }
    }
    flag_counts.sort_by_key(|c| (c.method, c.flag));

    let report = ScenarioReport {
        scenario: s.clone(),
        truth,
        provenance: Provenance {
            seed: s.seed,
            config_hash: s.config_hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        summaries: summarize(&rows, &s.methods, &truth, s.level),
        failures,
        flag_counts,
        rows,
    };
    let failed = report.failed_replicates();
    if failed as f64 > MAX_FAILURE_FRACTION * s.replicates as f64 {
        return Err(Error::ScenarioFailed {
            name: s.name.clone(),
            failed,
            total: s.replicates,
        });
    }
    Ok(report)
}
