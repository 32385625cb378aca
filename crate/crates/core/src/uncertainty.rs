//! Standard errors, Wald intervals and coverage statistics.
//!
//! Likelihood standard errors come from the observed information: a central
//! finite-difference Hessian of the log-likelihood in `(mu, ln sigma2, ln tau)`
//! with step `1e-4` (times `sqrt(sigma2)` for `mu`), inverted and mapped back to
//! the natural scale by the delta method.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::likelihood::{exact_loglik, whittle_loglik};
use crate::models::{ModelKind, ModelParams, Param};
use crate::simulate::TimeSeries;
use crate::variogram::StdErrs;

pub const DEFAULT_LEVEL: f64 = 0.95;
pub const FD_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Likelihood {
    Exact,
    Whittle,
}

impl Likelihood {
    pub fn eval(self, series: &TimeSeries, kind: ModelKind, params: &ModelParams) -> Result<f64> {
        match self {
            Likelihood::Exact => exact_loglik(series, kind, params),
            Likelihood::Whittle => whittle_loglik(series, kind, params),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleStdErrs {
    pub std_errs: StdErrs,
    /// Hessian in `(mu, ln sigma2, ln tau)`.
    pub hessian: [[f64; 3]; 3],
    /// `max |H(h) - H(h/2)| / max |H(h)|`.
    pub hessian_drift: f64,
}

/// Central finite-difference Hessian of `f` at `x` with per-coordinate steps.
pub fn fd_hessian(f: impl Fn(&[f64; 3]) -> Result<f64>, x: &[f64; 3], h: &[f64; 3]) -> Result<[[f64; 3]; 3]> {
    let at = |di: [f64; 3]| {
        let mut p = *x;
        for k in 0..3 {
            p[k] += di[k];
        }
        f(&p)
    };
    let f0 = f(x)?;
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = h[i];
        let fp = at(e)?;
        e[i] = -h[i];
        let fm = at(e)?;
        hess[i][i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut d = [0.0; 3];
            d[i] = h[i];
            d[j] = h[j];
            let fpp = at(d)?;
            d[j] = -h[j];
            let fpm = at(d)?;
            d[i] = -h[i];
            let fmm = at(d)?;
            d[j] = h[j];
            let fmp = at(d)?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}

/// Inverse of a symmetric positive-definite 3x3 matrix via Cholesky.
fn spd_inverse(a: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) || !d.is_finite() {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut inv = [[0.0; 3]; 3];
    for col in 0..3 {
        // Solve L y = e_col then L^T x = y.
        let mut y = [0.0; 3];
        for i in 0..3 {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
            y[i] = (rhs - s) / l[i][i];
        }
        for i in (0..3).rev() {
            let s: f64 = (i + 1..3).map(|k| l[k][i] * inv[k][col]).sum();
            inv[i][col] = (y[i] - s) / l[i][i];
        }
    }
    Some(inv)
}

/// Observed-information standard errors at a likelihood maximum.
pub fn mle_std_errs(
    series: &TimeSeries,
    kind: ModelKind,
    params_hat: &ModelParams,
    lik: Likelihood,
) -> Result<MleStdErrs> {
    let loglik = |phi: &[f64; 3]| {
        let p = ModelParams::new(phi[0], phi[1].exp(), phi[2].exp())?;
        lik.eval(series, kind, &p)
    };
    let x = [params_hat.mu(), params_hat.sigma2().ln(), params_hat.tau().ln()];
    let h = [FD_STEP * params_hat.sigma2().sqrt(), FD_STEP, FD_STEP];
    let half = [h[0] / 2.0, h[1] / 2.0, h[2] / 2.0];
    let hess = fd_hessian(loglik, &x, &h)?;
    let hess_half = fd_hessian(loglik, &x, &half)?;

    let scale = hess.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = hess
        .iter()
        .flatten()
        .zip(hess_half.iter().flatten())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let hessian_drift = if scale > 0.0 { diff / scale } else { f64::INFINITY };

    let mut info = hess;
    info.iter_mut().flatten().for_each(|v| *v = -*v);
    let cov = spd_inverse(&info).ok_or(Error::NonPositiveCurvature)?;
    Ok(MleStdErrs {
        std_errs: StdErrs {
            mu: Some(cov[0][0].sqrt()),
            sigma2: params_hat.sigma2() * cov[1][1].sqrt(),
            tau: params_hat.tau() * cov[2][2].sqrt(),
        },
        hessian: hess,
        hessian_drift,
    })
}

/// Two-sided normal quantile for a central interval at `level`.
pub fn z_value(level: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    normal.inverse_cdf(0.5 + level / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate {
    pub param: Param,
    pub estimate: f64,
    pub std_err: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl IntervalEstimate {
    /// Wald interval; on the log scale for positive parameters, where the
    /// log-scale standard error is `std_err / estimate`.
    pub fn wald(param: Param, estimate: f64, std_err: f64, level: f64) -> Result<Self> {
        if !(std_err > 0.0 && std_err.is_finite()) {
            return Err(Error::InvalidParams(format!("standard error must be positive, got {std_err}")));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidParams(format!("level must be in (0, 1), got {level}")));
        }
        let z = z_value(level);
        let (lower, upper) = if param.is_positive() {
            if !(estimate > 0.0) {
                return Err(Error::InvalidParams(format!("{param} estimate must be positive")));
            }
            let half = z * std_err / estimate;
            (estimate * (-half).exp(), estimate * half.exp())
        } else {
            (estimate - z * std_err, estimate + z * std_err)
        };
        Ok(Self {
            param,
            estimate,
            std_err,
            lower,
            upper,
            level,
        })
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    /// `(estimate - truth) / std_err` on the natural scale.
    pub fn z_score(&self, truth: f64) -> f64 {
        (self.estimate - truth) / self.std_err
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub param: Param,
    pub count: usize,
    pub level: f64,
    /// Fraction of intervals containing the truth.
    pub coverage: f64,
    /// Fraction with `|estimate - truth| > 3 std_err`.
    pub beyond_3se: f64,
    /// Sorted `((estimate - truth) / std_err)^2`.
    pub squared_z: Vec<f64>,
}

/// Coverage of a set of intervals for one parameter. Intended for at least
/// a hundred replicates; smaller sets are accepted but noisy.
pub fn coverage_stats(estimates: &[IntervalEstimate], truth: &ModelParams) -> Option<CoverageSummary> {
    let first = estimates.first()?;
    let param = first.param;
    let truth = truth.get(param);
    let count = estimates.len();
    let covered = estimates.iter().filter(|e| e.contains(truth)).count();
    let mut squared_z: Vec<f64> = estimates.iter().map(|e| e.z_score(truth).powi(2)).collect();
    squared_z.sort_by(f64::total_cmp);
    let beyond = squared_z.iter().filter(|&&z2| z2 > 9.0).count();
    Some(CoverageSummary {
        param,
        count,
        level: first.level,
        coverage: covered as f64 / count as f64,
        beyond_3se: beyond as f64 / count as f64,
        squared_z,
    })
}
