//! Exact Gaussian and Whittle log-likelihoods, both dropping the
//! `-(n/2) log(2 pi)` constant, and their maximization.
//!
//! For evenly sampled data the covariance is Toeplitz. Its Cholesky factor is
//! generated column by column with the Schur algorithm in `O(n^2)` time and
//! `O(n)` memory, and the forward substitution runs alongside, so the factor
//! is never stored.
//!
//! Both fits profile `mu` and `sigma2` out analytically and search over `tau`
//! alone on a log-spaced bracket `[dt / 10, 10 n dt]`, widened tenfold on each
//! side once if the optimum lands on an edge.

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlannerScalar};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{acf, ModelKind, ModelParams};
use crate::optimize::{bracketed_log_minimize, BracketMin};
use crate::simulate::TimeSeries;
use crate::uncertainty::{mle_std_errs, Likelihood};
use crate::variogram::{tau_bracket, FitFlag, FitResult};

/// Relative diagonal jitter tried once when factorization fails.
pub const CHOLESKY_JITTER: f64 = 1e-10;
/// Factorization fails when a pivot `d` has `d^2 <= PIVOT_FLOOR * n * eps * Sigma_00`,
/// or when the smallest eigenvalue is shown to be below that level.
const PIVOT_FLOOR: f64 = 16.0;
/// Taper width is `n / TAPER_WIDTHS`, leaving edge leakage near 1e-21.
const TAPER_WIDTHS: f64 = 14.0;

/// Symmetric Toeplitz covariance, stored as its first column.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    column: Vec<f64>,
}

/// `L^-1 b` for each right-hand side `b`, plus `log det`.
#[derive(Clone, Debug)]
pub struct Whitened {
    pub log_det: f64,
    pub solutions: Vec<Vec<f64>>,
}

impl CovarianceMatrix {
    pub fn from_column(column: Vec<f64>) -> Self {
        Self { column }
    }

    /// `Sigma_ij = C(|i - j| dt)`.
    pub fn from_model(kind: ModelKind, params: &ModelParams, n: usize, dt: f64) -> Self {
        Self::from_column((0..n).map(|k| acf(kind, params, k as f64 * dt)).collect())
    }

    pub fn dim(&self) -> usize {
        self.column.len()
    }

    pub fn column(&self) -> &[f64] {
        &self.column
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.column[i.abs_diff(j)]).collect())
            .collect()
    }

    fn add_diagonal(&self, eps: f64) -> Self {
        let mut column = self.column.clone();
        column[0] += eps;
        Self { column }
    }

    /// Smallest Rayleigh quotient `v* Sigma v` over unit vectors
    /// `v_j = h_j e^{i w j}` with a Gaussian taper `h`, on a grid of `w`.
    /// It bounds the smallest eigenvalue from above.
    fn tapered_rayleigh_min(&self) -> f64 {
        let n = self.dim();
        let m = (4 * n).next_power_of_two();
        let mut planner = FftPlannerScalar::new();
        let forward = planner.plan_fft(m, FftDirection::Forward);
        let inverse = planner.plan_fft(m, FftDirection::Inverse);

        let centre = (n as f64 - 1.0) / 2.0;
        let width = (n as f64 / TAPER_WIDTHS).max(0.5);
        let mut h: Vec<Complex64> = (0..m)
            .map(|j| {
                let v = if j < n { (-0.5 * ((j as f64 - centre) / width).powi(2)).exp() } else { 0.0 };
                Complex64::new(v, 0.0)
            })
            .collect();
        forward.process(&mut h);
        // Autocorrelation of the taper, normalized to 1 at lag 0.
        let mut w: Vec<Complex64> = h.iter().map(|c| Complex64::new(c.norm_sqr(), 0.0)).collect();
        inverse.process(&mut w);
        let w0 = w[0].re;

        let mut a = vec![Complex64::new(0.0, 0.0); m];
        a[0] = Complex64::new(self.column[0], 0.0);
        for k in 1..n {
            let v = self.column[k] * w[k].re / w0;
            a[k] = Complex64::new(v, 0.0);
            a[m - k] = Complex64::new(v, 0.0);
        }
        forward.process(&mut a);
        a.iter().map(|c| c.re).fold(f64::INFINITY, f64::min)
    }

    /// Schur-algorithm Cholesky `Sigma = L L^T` with simultaneous forward
    /// substitution for every right-hand side. Returns `None` if the matrix is
    /// not numerically positive definite.
    fn factor_solve(&self, rhs: &[&[f64]]) -> Option<Whitened> {
        let n = self.dim();
        let t0 = self.column[0];
        if !(t0 > 0.0) {
            return None;
        }
        // Prediction-error variances below the rounding level of the
        // recursion are numerically indistinguishable from zero.
        let floor = PIVOT_FLOOR * n as f64 * f64::EPSILON * t0;
        // The recursion stays formally stable on numerically singular input,
        // so near-singularity is detected up front.
        if n > 1 && self.tapered_rayleigh_min() <= floor {
            return None;
        }
        let s = t0.sqrt();
        // Generators: Sigma - Z Sigma Z^T = a a^T - b b^T.
        let mut a: Vec<f64> = self.column.iter().map(|c| c / s).collect();
        let mut b = a.clone();
        b[0] = 0.0;

        let mut work: Vec<Vec<f64>> = rhs.iter().map(|r| r.to_vec()).collect();
        let mut solutions = vec![vec![0.0; n]; rhs.len()];
        let mut log_det = 0.0;

        // After k steps the generator `a` has been shifted down k places; it
        // is stored unshifted, so logical a[i] is a[i - k] and column k of L
        // is a[..n - k].
        for k in 0..n {
            let pivot = a[0];
            if !(pivot * pivot > floor) || !pivot.is_finite() {
                return None;
            }
            log_det += 2.0 * pivot.ln();
            let col = &a[1..n - k];
            for (w, z) in work.iter_mut().zip(solutions.iter_mut()) {
                let zk = w[k] / pivot;
                z[k] = zk;
                for (wi, li) in w[k + 1..].iter_mut().zip(col) {
                    *wi -= li * zk;
                }
            }
            if k + 1 == n {
                break;
            }
            // Rotate to annihilate b[k + 1] against the shifted a.
            let rho = b[k + 1] / a[0];
            if !(rho.abs() < 1.0) {
                return None;
            }
            let c = (1.0 - rho * rho).sqrt();
            let inv_c = 1.0 / c;
            for (ai, bi) in a[..n - k - 1].iter_mut().zip(&mut b[k + 1..]) {
                *ai = (*ai - rho * *bi) * inv_c;
                *bi = c * *bi - rho * *ai;
            }
        }
        Some(Whitened { log_det, solutions })
    }

    /// Factorizes, retrying once with `CHOLESKY_JITTER * Sigma_00` added to the
    /// diagonal.
    pub fn whiten(&self, rhs: &[&[f64]]) -> Option<Whitened> {
        self.factor_solve(rhs).or_else(|| {
            let eps = CHOLESKY_JITTER * self.column.first().copied().unwrap_or(0.0);
            self.add_diagonal(eps).factor_solve(rhs)
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `-1/2 log det Sigma - 1/2 (X - M)^T Sigma^-1 (X - M)`.
pub fn exact_loglik(series: &TimeSeries, kind: ModelKind, params: &ModelParams) -> Result<f64> {
    let cov = CovarianceMatrix::from_model(kind, params, series.len(), series.dt());
    let resid: Vec<f64> = series.values().iter().map(|x| x - params.mu()).collect();
    let w = cov
        .whiten(&[&resid])
        .ok_or(Error::NotPositiveDefinite { tau: params.tau() })?;
    let z = &w.solutions[0];
    Ok(-0.5 * w.log_det - 0.5 * dot(z, z))
}

/// Maximum-likelihood `mu` and `sigma2` at fixed `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profile {
    pub mu: f64,
    pub sigma2: f64,
    pub loglik: f64,
}

/// Generalized least squares for `mu` and the MLE of `sigma2` given the unit
/// variance correlation matrix `R(tau)`.
pub fn profile_mean_variance(series: &TimeSeries, kind: ModelKind, tau: f64) -> Result<Profile> {
    let unit = ModelParams::new(0.0, 1.0, tau)?;
    let n = series.len();
    let cov = CovarianceMatrix::from_model(kind, &unit, n, series.dt());
    let ones = vec![1.0; n];
    let w = cov
        .whiten(&[series.values(), &ones])
        .ok_or(Error::NotPositiveDefinite { tau })?;
    let (zx, z1) = (&w.solutions[0], &w.solutions[1]);
    let q11 = dot(z1, z1);
    let q1x = dot(z1, zx);
    let qxx = dot(zx, zx);
    let mu = q1x / q11;
    let sigma2 = (qxx - q1x * q1x / q11) / n as f64;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidSeries("residual variance is zero".into()));
    }
    let loglik = -0.5 * (n as f64 * sigma2.ln() + w.log_det) - 0.5 * n as f64;
    Ok(Profile { mu, sigma2, loglik })
}

/// DFT `x~(f) = n^-1/2 sum_t e^{+2 pi i f t} x(t)` on `f = 0, df, ..., (n-1) df`.
#[derive(Clone, Debug)]
pub struct Periodogram {
    pub df: f64,
    pub coeffs: Vec<Complex64>,
}

impl Periodogram {
    pub fn from_series(series: &TimeSeries) -> Self {
        let n = series.len();
        let mut buf: Vec<Complex64> = series.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
        // rustfft's inverse transform is the unnormalized e^{+i} sum.
        FftPlannerScalar::new()
            .plan_fft(n, FftDirection::Inverse)
            .process(&mut buf);
        let scale = 1.0 / (n as f64).sqrt();
        buf.iter_mut().for_each(|z| *z *= scale);
        Self {
            df: 1.0 / (n as f64 * series.dt()),
            coeffs: buf,
        }
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.coeffs.len()).map(|j| j as f64 * self.df).collect()
    }

    /// `sum |x~(f)|^2`, equal to `sum x(t)^2` by Parseval.
    pub fn total_power(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Cap on lags summed when wrapping the ACF; only reached for `tau` many
/// decades beyond the record length.
const MAX_WRAP_LAGS: usize = 1 << 22;

/// Spectral density of the sampled process on the DFT grid,
/// `S(f_j) = dt sum_k C(k dt) e^{-2 pi i j k / n}` over all integer `k`,
/// i.e. the continuous density with aliasing folded in.
pub fn sampled_spectrum(kind: ModelKind, params: &ModelParams, dt: f64, n: usize) -> Vec<f64> {
    let floor = 1e-18 * params.sigma2();
    let mut wrapped = vec![0.0; n];
    wrapped[0] = acf(kind, params, 0.0);
    let mut k = 1usize;
    while k < MAX_WRAP_LAGS {
        let c = acf(kind, params, k as f64 * dt);
        // Lags k and -k fold onto residues k mod n and -k mod n.
        wrapped[k % n] += c;
        wrapped[(n - k % n) % n] += c;
        if k >= n && c.abs() < floor {
            break;
        }
        k += 1;
    }
    let mut buf: Vec<Complex64> = wrapped.iter().map(|&w| Complex64::new(w, 0.0)).collect();
    FftPlannerScalar::new()
        .plan_fft(n, FftDirection::Forward)
        .process(&mut buf);
    buf.iter().map(|z| z.re * dt).collect()
}

fn checked_spectrum(kind: ModelKind, params: &ModelParams, dt: f64, n: usize) -> Result<Vec<f64>> {
    let s = sampled_spectrum(kind, params, dt, n);
    match s.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        Some(index) => Err(Error::ZeroSpectrum { index }),
        None => Ok(s),
    }
}

/// `sum_f [-1/2 log s(f) - |x~(f) - mu~(f)|^2 dt / (2 s(f))]` where `mu~` is
/// the DFT of the constant mean (`sqrt(n) mu` at `f = 0`, zero elsewhere).
pub fn whittle_loglik(series: &TimeSeries, kind: ModelKind, params: &ModelParams) -> Result<f64> {
    let n = series.len();
    let dt = series.dt();
    let spec = checked_spectrum(kind, params, dt, n)?;
    let pg = Periodogram::from_series(series);
    Ok(whittle_sum(&pg, &spec, params.mu(), dt))
}

fn whittle_sum(pg: &Periodogram, spec: &[f64], mu: f64, dt: f64) -> f64 {
    let n = spec.len();
    let mean_coeff = (n as f64).sqrt() * mu;
    pg.coeffs
        .iter()
        .zip(spec)
        .enumerate()
        .map(|(j, (x, &s))| {
            let r = if j == 0 { *x - mean_coeff } else { *x };
            -0.5 * s.ln() - r.norm_sqr() * dt / (2.0 * s)
        })
        .sum()
}

/// Whittle counterpart of [`profile_mean_variance`]: `mu` only enters the
/// zero-frequency term, so its estimate is the sample mean.
pub fn whittle_profile(series: &TimeSeries, kind: ModelKind, tau: f64) -> Result<Profile> {
    let pg = Periodogram::from_series(series);
    whittle_profile_with(&pg, series, kind, tau)
}

fn whittle_profile_with(pg: &Periodogram, series: &TimeSeries, kind: ModelKind, tau: f64) -> Result<Profile> {
    let n = series.len();
    let dt = series.dt();
    let unit = ModelParams::new(0.0, 1.0, tau)?;
    let spec = checked_spectrum(kind, &unit, dt, n)?;
    let mu = series.mean();
    let mean_coeff = (n as f64).sqrt() * mu;
    let weighted: f64 = pg
        .coeffs
        .iter()
        .zip(&spec)
        .enumerate()
        .map(|(j, (x, &s))| {
            let r = if j == 0 { *x - mean_coeff } else { *x };
            r.norm_sqr() * dt / s
        })
        .sum();
    let sigma2 = weighted / n as f64;
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidSeries("residual variance is zero".into()));
    }
    let log_sum: f64 = spec.iter().map(|s| s.ln()).sum();
    let loglik = -0.5 * log_sum - 0.5 * n as f64 * sigma2.ln() - 0.5 * n as f64;
    Ok(Profile { mu, sigma2, loglik })
}

const TAU_GRID: usize = 40;

/// Searches the profile over `tau`, widening the bracket once on an edge hit.
fn search_tau(
    profile: impl Fn(f64) -> Result<Profile>,
    dt: f64,
    n: usize,
    init_tau: f64,
) -> Result<(BracketMin, bool)> {
    let neg = |tau: f64| profile(tau).map(|p| -p.loglik).unwrap_or(f64::INFINITY);
    let (mut lo, mut hi) = tau_bracket(dt, n);
    let mut best = bracketed_log_minimize(neg, lo, hi, TAU_GRID, &[init_tau])
        .ok_or(Error::NoFeasiblePoint { lo, hi })?;
    let mut evals = best.evals;
    if best.at_edge {
        lo /= 10.0;
        hi *= 10.0;
        best = bracketed_log_minimize(neg, lo, hi, TAU_GRID, &[best.x])
            .ok_or(Error::NoFeasiblePoint { lo, hi })?;
        evals += best.evals;
    }
    let boundary = best.at_edge;
    best.evals = evals;
    Ok((best, boundary))
}

fn finish_fit(
    series: &TimeSeries,
    kind: ModelKind,
    lik: Likelihood,
    search: BracketMin,
    boundary: bool,
    profile: Profile,
) -> Result<FitResult> {
    let params = ModelParams::new(profile.mu, profile.sigma2, search.x)?;
    let mut flags = Vec::new();
    if boundary {
        flags.push(FitFlag::BoundaryEstimate);
    }
    if !search.converged {
        flags.push(FitFlag::NonConvergence);
    }
    let std_errs = match mle_std_errs(series, kind, &params, lik) {
        Ok(report) => {
            if report.hessian_drift > 1e-3 {
                flags.push(FitFlag::HessianDrift);
            }
            Some(report.std_errs)
        }
        Err(_) => {
            flags.push(FitFlag::NonPositiveCurvature);
            None
        }
    };
    Ok(FitResult {
        params,
        std_errs,
        objective: profile.loglik,
        converged: search.converged,
        iterations: search.evals,
        flags,
    })
}

/// Exact maximum likelihood over `(mu, sigma2, tau)`.
pub fn fit_mle(series: &TimeSeries, kind: ModelKind, init: &ModelParams) -> Result<FitResult> {
    kind.validate()?;
    let n = series.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let profile = |tau: f64| profile_mean_variance(series, kind, tau);
    let (search, boundary) = search_tau(profile, series.dt(), n, init.tau())?;
    let best = profile_mean_variance(series, kind, search.x)?;
    finish_fit(series, kind, Likelihood::Exact, search, boundary, best)
}

/// Whittle (periodogram) maximum likelihood; one FFT of the data plus one per
/// candidate `tau`.
pub fn fit_whittle(series: &TimeSeries, kind: ModelKind, init: &ModelParams) -> Result<FitResult> {
    kind.validate()?;
    let n = series.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    let pg = Periodogram::from_series(series);
    let profile = |tau: f64| whittle_profile_with(&pg, series, kind, tau);
    let (search, boundary) = search_tau(profile, series.dt(), n, init.tau())?;
    let best = whittle_profile_with(&pg, series, kind, search.x)?;
    finish_fit(series, kind, Likelihood::Whittle, search, boundary, best)
}

/// Which estimator produced a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Wls,
    Mle,
    Whittle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Wls => "wls",
            Method::Mle => "mle",
            Method::Whittle => "whittle",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wls" => Ok(Method::Wls),
            "mle" => Ok(Method::Mle),
            "whittle" => Ok(Method::Whittle),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}
