//! Method-of-moments semivariogram and weighted least-squares regression of a
//! model semivariogram onto it.
//!
//! The regression weights are `w(t) = n(t) / gamma(t|theta)^2`, the inverse of
//! the chi-square variance of each lag estimate, re-evaluated at the current
//! parameters on every outer iteration (iteratively reweighted least squares).
//! Correlations between lags are ignored, as is conventional for this method;
//! that is also why its standard errors are unreliable.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{acf_dtau, semivariogram, ModelKind, ModelParams};
use crate::optimize::NelderMead;
use crate::simulate::TimeSeries;

/// Per-parameter standard errors on the natural scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StdErrs {
    /// `None` when the method gives no standard error for the mean.
    pub mu: Option<f64>,
    pub sigma2: f64,
    pub tau: f64,
}

impl StdErrs {
    pub fn get(&self, param: crate::models::Param) -> Option<f64> {
        use crate::models::Param;
        match param {
            Param::Mu => self.mu,
            Param::Sigma2 => Some(self.sigma2),
            Param::Tau => Some(self.tau),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitFlag {
    /// `mu` was not estimated by the method and is the sample mean.
    MeanFromSample,
    /// `tau` ended on the edge of its search bracket.
    BoundaryEstimate,
    /// The iteration cap was reached; the estimate is the last iterate.
    NonConvergence,
    /// Regression residuals vanish, so standard errors are meaningless.
    DegenerateStdErr,
    SingularJacobian,
    NonPositiveCurvature,
    /// Finite-difference Hessian changed by more than 1e-3 under step halving.
    HessianDrift,
}

/// Output of any of the estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub std_errs: Option<StdErrs>,
    /// Weighted residual sum of squares for regression, log-likelihood for
    /// the likelihood methods.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub flags: Vec<FitFlag>,
}

impl FitResult {
    pub fn has_flag(&self, flag: FitFlag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Semivariance estimates on an evenly spaced lag grid (lag 0 excluded).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalVariogram {
    lags: Vec<f64>,
    gamma_hat: Vec<f64>,
    pair_count: Vec<usize>,
    dt: f64,
}

impl EmpiricalVariogram {
    /// Lags must be `1..=k` multiples of `dt`.
    pub fn new(dt: f64, gamma_hat: Vec<f64>, pair_count: Vec<usize>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidSeries(format!("dt must be positive, got {dt}")));
        }
        if gamma_hat.len() != pair_count.len() {
            return Err(Error::InvalidSeries("gamma_hat and pair_count lengths differ".into()));
        }
        if let Some(i) = gamma_hat.iter().position(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::InvalidSeries(format!("invalid semivariance at lag index {i}")));
        }
        if let Some(i) = pair_count.iter().position(|&c| c == 0) {
            return Err(Error::EmptyLag {
                lag: (i + 1) as f64 * dt,
            });
        }
        let lags = (1..=gamma_hat.len()).map(|k| k as f64 * dt).collect();
        Ok(Self {
            lags,
            gamma_hat,
            pair_count,
            dt,
        })
    }

    /// Noise-free variogram of a record of `n` samples: `gamma_hat = gamma(t|theta)`.
    pub fn from_model(kind: ModelKind, params: &ModelParams, dt: f64, n: usize, n_lags: usize) -> Result<Self> {
        if n_lags >= n {
            return Err(Error::EmptyLag { lag: n as f64 * dt });
        }
        let gamma = (1..=n_lags)
            .map(|k| semivariogram(kind, params, k as f64 * dt))
            .collect();
        let counts = (1..=n_lags).map(|k| n - k).collect();
        Self::new(dt, gamma, counts)
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    pub fn gamma_hat(&self) -> &[f64] {
        &self.gamma_hat
    }

    pub fn pair_count(&self) -> &[usize] {
        &self.pair_count
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    /// Record length in samples, recovered from the lag-1 pair count.
    fn record_len(&self) -> usize {
        self.pair_count[0] + 1
    }

    /// `lag,gamma_hat,pair_count` rows with a header line.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lag", "gamma_hat", "pair_count"])?;
        for ((lag, g), c) in self.lags.iter().zip(&self.gamma_hat).zip(&self.pair_count) {
            w.write_record([lag.to_string(), g.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Lag range used when none is given: half the record, in whole samples.
pub fn default_max_lag(series: &TimeSeries) -> f64 {
    (series.len() / 2) as f64 * series.dt()
}

/// `gamma_hat(k dt) = sum_i (x[i + k] - x[i])^2 / (2 (n - k))` for
/// `k = 1, ..., floor(max_lag / dt)`.
pub fn empirical_semivariogram(series: &TimeSeries, max_lag: f64) -> Result<EmpiricalVariogram> {
    let dt = series.dt();
    let invalid = Error::InvalidMaxLag { max_lag, dt };
    if !(max_lag > 0.0 && max_lag.is_finite()) {
        return Err(invalid);
    }
    // Tolerate max_lag computed as k * dt in floating point.
    let k_max = (max_lag / dt * (1.0 + 1e-12)).floor() as usize;
    if k_max == 0 {
        return Err(invalid);
    }
    let x = series.values();
    let n = x.len();
    if k_max >= n {
        return Err(Error::EmptyLag { lag: n as f64 * dt });
    }
    let (gamma, counts) = (1..=k_max)
        .map(|k| {
            let sum: f64 = x[k..].iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            (sum / (2.0 * (n - k) as f64), n - k)
        })
        .unzip();
    EmpiricalVariogram::new(dt, gamma, counts)
}

/// Search bracket for `tau`, matching the likelihood fits.
pub(crate) fn tau_bracket(dt: f64, n: usize) -> (f64, f64) {
    (dt / 10.0, 10.0 * n as f64 * dt)
}

const TAU_GRID: usize = 40;
const MAX_OUTER: usize = 100;
const OUTER_TOL: f64 = 1e-8;

/// IRLS weights `n(t) / gamma(t|theta)^2`.
pub fn wls_weights(vgram: &EmpiricalVariogram, kind: ModelKind, params: &ModelParams) -> Vec<f64> {
    vgram
        .lags
        .iter()
        .zip(&vgram.pair_count)
        .map(|(&t, &c)| {
            let g = semivariogram(kind, params, t);
            c as f64 / (g * g)
        })
        .collect()
}

/// `sum_t w(t) (gamma_hat(t) - gamma(t|theta))^2` with the weights held fixed.
pub fn wls_objective(vgram: &EmpiricalVariogram, kind: ModelKind, params: &ModelParams, weights: &[f64]) -> f64 {
    vgram
        .lags
        .iter()
        .zip(&vgram.gamma_hat)
        .zip(weights)
        .map(|((&t, &g), &w)| {
            let r = g - semivariogram(kind, params, t);
            w * r * r
        })
        .sum()
}

/// For fixed weights and `tau`, the best `sigma2` is closed form since the
/// model is linear in it: `sum w g_hat u / sum w u^2`, `u = 1 - rho`.
fn profiled_sigma2(vgram: &EmpiricalVariogram, kind: ModelKind, tau: f64, weights: &[f64]) -> Option<f64> {
    let (num, den) = vgram
        .lags
        .iter()
        .zip(&vgram.gamma_hat)
        .zip(weights)
        .fold((0.0, 0.0), |(num, den), ((&t, &g), &w)| {
            let u = 1.0 - kind.correlation(t / tau);
            (num + w * g * u, den + w * u * u)
        });
    let s2 = num / den;
    (s2 > 0.0 && s2.is_finite()).then_some(s2)
}

/// Fits `sigma2` and `tau` by weighted least squares.
///
/// The variogram carries no information on the mean, so `init.mu()` is passed
/// through unchanged (callers should supply the sample mean) and the result is
/// flagged [`FitFlag::MeanFromSample`].
pub fn fit_wls(vgram: &EmpiricalVariogram, kind: ModelKind, init: &ModelParams) -> Result<FitResult> {
    kind.validate()?;
    if vgram.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: vgram.len(),
        });
    }
    let g0 = vgram.gamma_hat[0];
    if vgram.gamma_hat.iter().all(|&g| g == g0) {
        return Err(Error::DegenerateVariogram(
            "all semivariance estimates are equal".into(),
        ));
    }

    let mu = init.mu();
    let (tau_lo, tau_hi) = tau_bracket(vgram.dt, vgram.record_len());
    let g_max = vgram.gamma_hat.iter().copied().fold(0.0, f64::max);
    let (s2_lo, s2_hi) = (g_max * 1e-8, g_max * 1e8);
    let in_bounds = |ls2: f64, ltau: f64| {
        (s2_lo.ln()..=s2_hi.ln()).contains(&ls2) && (tau_lo.ln()..=tau_hi.ln()).contains(&ltau)
    };
    let to_params = |phi: &[f64]| ModelParams::new(mu, phi[0].exp(), phi[1].exp());

    let nm = NelderMead::default();
    let clamp_start = |s2: f64, tau: f64| [s2.clamp(s2_lo, s2_hi).ln(), tau.clamp(tau_lo, tau_hi).ln()];
    let mut phi = clamp_start(init.sigma2(), init.tau());
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_OUTER {
        iterations += 1;
        let current = to_params(&phi)?;
        let weights = wls_weights(vgram, kind, &current);
        let objective = |p: &[f64]| -> f64 {
            if !in_bounds(p[0], p[1]) {
                return f64::INFINITY;
            }
            match to_params(p) {
                Ok(params) => wls_objective(vgram, kind, &params, &weights),
                Err(_) => f64::INFINITY,
            }
        };

        // Coarse tau grid with profiled sigma2 guards against local minima.
        let mut start = phi;
        let mut start_f = objective(&phi);
        for i in 0..TAU_GRID {
            let ltau = tau_lo.ln() + (tau_hi / tau_lo).ln() * i as f64 / (TAU_GRID - 1) as f64;
            if let Some(s2) = profiled_sigma2(vgram, kind, ltau.exp(), &weights) {
                let cand = [s2.clamp(s2_lo, s2_hi).ln(), ltau];
                let f = objective(&cand);
                if f < start_f {
                    start = cand;
                    start_f = f;
                }
            }
        }

        let min = nm.minimize(objective, &start, &[0.1, 0.1]);
        let next = if min.f <= start_f { [min.x[0], min.x[1]] } else { start };
        let step = (next[0] - phi[0]).abs().max((next[1] - phi[1]).abs());
        phi = next;
        if step < OUTER_TOL {
            converged = true;
            break;
        }
    }

    let params = to_params(&phi)?;
    let weights = wls_weights(vgram, kind, &params);
    let objective = wls_objective(vgram, kind, &params, &weights);

    let mut flags = vec![FitFlag::MeanFromSample];
    if !converged {
        flags.push(FitFlag::NonConvergence);
    }
    let edge = 1e-6;
    if (phi[1] - tau_lo.ln()).abs() < edge || (phi[1] - tau_hi.ln()).abs() < edge {
        flags.push(FitFlag::BoundaryEstimate);
    }
    let std_errs = match wls_std_errs(vgram, kind, &params) {
        Ok(se) => Some(se),
        Err(Error::DegenerateResidual) => {
            flags.push(FitFlag::DegenerateStdErr);
            None
        }
        Err(Error::SingularJacobian) => {
            flags.push(FitFlag::SingularJacobian);
            None
        }
        Err(e) => return Err(e),
    };

    Ok(FitResult {
        params,
        std_errs,
        objective,
        converged,
        iterations,
        flags,
    })
}

/// Jacobian of `gamma(t|theta)` in `(sigma2, tau)`, one row per lag.
pub fn wls_jacobian(vgram: &EmpiricalVariogram, kind: ModelKind, params: &ModelParams) -> Vec<[f64; 2]> {
    vgram
        .lags
        .iter()
        .map(|&t| {
            let d_sigma2 = 1.0 - kind.correlation(t / params.tau());
            let d_tau = -acf_dtau(kind, params, t);
            [d_sigma2, d_tau]
        })
        .collect()
}

/// Conventional regression standard errors: `s^2 (J^T W J)^-1` with
/// `s^2 = sum w r^2 / (K - 2)`. The mean has no regression standard error.
pub fn wls_std_errs(vgram: &EmpiricalVariogram, kind: ModelKind, params: &ModelParams) -> Result<StdErrs> {
    let k = vgram.len();
    if k < 3 {
        return Err(Error::InsufficientData { needed: 3, got: k });
    }
    let weights = wls_weights(vgram, kind, params);
    let jac = wls_jacobian(vgram, kind, params);

    let mut a = [[0.0; 2]; 2];
    for (row, &w) in jac.iter().zip(&weights) {
        for i in 0..2 {
            for j in 0..2 {
                a[i][j] += w * row[i] * row[j];
            }
        }
    }
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if !(det > 1e-12 * a[0][0] * a[1][1]) || !det.is_finite() {
        return Err(Error::SingularJacobian);
    }

    let rss = wls_objective(vgram, kind, params, &weights);
    let s2 = rss / (k - 2) as f64;
    if !(s2 > 0.0) {
        return Err(Error::DegenerateResidual);
    }
    let var_sigma2 = s2 * a[1][1] / det;
    let var_tau = s2 * a[0][0] / det;
    Ok(StdErrs {
        mu: None,
        sigma2: var_sigma2.sqrt(),
        tau: var_tau.sqrt(),
    })
}

/// Variogram regression on a series: default lag range, sample-mean `mu`
/// with its iid standard error, sample-variance starting point.
pub fn fit_wls_series(series: &TimeSeries, kind: ModelKind, init_tau: f64) -> Result<FitResult> {
    let n = series.len();
    let mean = series.mean();
    let var = series.values().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    let vgram = empirical_semivariogram(series, default_max_lag(series))?;
    let init = ModelParams::new(mean, var.max(f64::MIN_POSITIVE), init_tau)?;
    let mut fit = fit_wls(&vgram, kind, &init)?;
    if let Some(se) = fit.std_errs.as_mut() {
        se.mu = Some((var / n as f64).sqrt());
    }
    Ok(fit)
}
