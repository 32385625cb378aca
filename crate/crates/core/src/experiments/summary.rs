//! Per-method, per-parameter summaries derived from replicate rows alone.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::statistics::{Data, OrderStatistics};

use crate::error::{Error, Result};
use crate::likelihood::Method;
use crate::models::{ModelParams, Param};
use crate::uncertainty::{coverage_stats, IntervalEstimate};

use super::runner::Row;

/// Probabilities at which estimate and squared-z quantiles are reported.
pub const QUANTILE_PROBS: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub param: Param,
    pub truth: f64,
    pub rows: usize,
    /// Fits that returned an estimate and reported convergence.
    pub converged: usize,
    /// Fits that returned no estimate at all.
    pub failed: usize,
    /// Over converged fits.
    pub bias: Option<f64>,
    pub rmse: Option<f64>,
    pub quantiles: Option<Vec<f64>>,
    /// Converged fits that also carry a standard error.
    pub with_std_err: usize,
    pub level: f64,
    pub coverage: Option<f64>,
    pub beyond_3se: Option<f64>,
    /// Quantiles of `((estimate - truth) / std_err)^2`.
    pub squared_z_quantiles: Option<Vec<f64>>,
}

fn quantiles(values: &[f64]) -> Option<Vec<f64>> {
    if values.is_empty() {
        return None;
    }
    let mut data = Data::new(values.to_vec());
    Some(QUANTILE_PROBS.iter().map(|&p| data.quantile(p)).collect())
}

fn summarize_one(rows: &[&Row], method: Method, param: Param, truth_params: &ModelParams, level: f64) -> MethodSummary {
    let truth = truth_params.get(param);
    let failed = rows.iter().filter(|r| r.estimate.is_none()).count();
    let good: Vec<&Row> = rows.iter().copied().filter(|r| r.converged && r.estimate.is_some()).collect();
    let estimates: Vec<f64> = good.iter().filter_map(|r| r.estimate).collect();
    let (bias, rmse) = if estimates.is_empty() {
        (None, None)
    } else {
        let m = estimates.len() as f64;
        let bias = estimates.iter().map(|e| e - truth).sum::<f64>() / m;
        let mse = estimates.iter().map(|e| (e - truth).powi(2)).sum::<f64>() / m;
        (Some(bias), Some(mse.sqrt()))
    };

    let intervals: Vec<IntervalEstimate> = good
        .iter()
        .filter_map(|r| IntervalEstimate::wald(param, r.estimate?, r.std_err?, level).ok())
        .collect();
    let coverage = coverage_stats(&intervals, truth_params);

    MethodSummary {
        method,
        param,
        truth,
        rows: rows.len(),
        converged: good.len(),
        failed,
        bias,
        rmse,
        quantiles: quantiles(&estimates),
        with_std_err: intervals.len(),
        level,
        coverage: coverage.as_ref().map(|c| c.coverage),
        beyond_3se: coverage.as_ref().map(|c| c.beyond_3se),
        squared_z_quantiles: coverage.as_ref().and_then(|c| quantiles(&c.squared_z)),
    }
}

/// Summaries for every `(method, param)` pair, methods in the given order.
pub fn summarize(rows: &[Row], methods: &[Method], truth: &ModelParams, level: f64) -> Vec<MethodSummary> {
    let mut out = Vec::with_capacity(methods.len() * Param::ALL.len());
    for &method in methods {
        for param in Param::ALL {
            let subset: Vec<&Row> = rows.iter().filter(|r| r.method == method && r.param == param).collect();
            out.push(summarize_one(&subset, method, param, truth, level));
        }
    }
    out
}

fn values_close(a: &Value, b: &Value, tol: f64, path: &str) -> Result<()> {
    let mismatch = || Error::ReportMismatch(format!("{path}: {a} vs {b}"));
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().ok_or_else(mismatch)?, y.as_f64().ok_or_else(mismatch)?);
            if (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0) {
                Ok(())
            } else {
                Err(mismatch())
            }
        }
        (Value::Array(xs), Value::Array(ys)) if xs.len() == ys.len() => xs
            .iter()
            .zip(ys)
            .enumerate()
            .try_for_each(|(i, (x, y))| values_close(x, y, tol, &format!("{path}[{i}]"))),
        (Value::Object(xs), Value::Object(ys)) if xs.len() == ys.len() => xs.iter().try_for_each(|(k, x)| {
            let y = ys.get(k).ok_or_else(mismatch)?;
            values_close(x, y, tol, &format!("{path}.{k}"))
        }),
        _ if a == b => Ok(()),
        _ => Err(mismatch()),
    }
}

/// Checks that `stored` summaries agree with ones recomputed from `rows` to a
/// relative tolerance `tol`.
pub fn verify_summaries(
    stored: &[MethodSummary],
    rows: &[Row],
    methods: &[Method],
    truth: &ModelParams,
    level: f64,
    tol: f64,
) -> Result<()> {
    let fresh = summarize(rows, methods, truth, level);
    values_close(
        &serde_json::to_value(stored)?,
        &serde_json::to_value(&fresh)?,
        tol,
        "summaries",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rep: usize, est: Option<f64>, se: Option<f64>, converged: bool) -> Row {
        Row {
            scenario: "t".into(),
            replicate: rep,
            method: Method::Mle,
            param: Param::Tau,
            estimate: est,
            std_err: se,
            converged,
        }
    }

    #[test]
    fn bias_rmse_and_failures() {
        let truth = ModelParams::new(0.0, 1.0, 2.0).unwrap();
        let rows = vec![
            row(0, Some(1.0), Some(0.5), true),
            row(1, Some(3.0), Some(0.5), true),
            row(2, Some(9.0), Some(0.5), false),
            row(3, None, None, false),
        ];
        let s = summarize(&rows, &[Method::Mle], &truth, 0.95);
        let tau = s.iter().find(|s| s.param == Param::Tau).unwrap();
        assert_eq!((tau.rows, tau.converged, tau.failed), (4, 2, 1));
        assert_eq!(tau.bias, Some(0.0));
        assert_eq!(tau.rmse, Some(1.0));
        assert_eq!(tau.with_std_err, 2);
        assert_eq!(tau.beyond_3se, Some(0.0));
        let mu = s.iter().find(|s| s.param == Param::Mu).unwrap();
        assert_eq!(mu.rows, 0);
        assert_eq!(mu.rmse, None);
        assert_eq!(mu.coverage, None);
    }

    #[test]
    fn verification_detects_tampering() {
        let truth = ModelParams::new(0.0, 1.0, 2.0).unwrap();
        let rows: Vec<Row> = (0..20).map(|i| row(i, Some(1.5 + 0.05 * i as f64), Some(0.3), true)).collect();
        let mut s = summarize(&rows, &[Method::Mle], &truth, 0.95);
        verify_summaries(&s, &rows, &[Method::Mle], &truth, 0.95, 1e-12).unwrap();
        s[2].rmse = s[2].rmse.map(|r| r * (1.0 + 1e-9));
        assert!(verify_summaries(&s, &rows, &[Method::Mle], &truth, 0.95, 1e-12).is_err());
    }
}
