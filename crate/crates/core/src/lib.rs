//! Estimators of autocorrelation model parameters for evenly sampled
//! stationary time series: variogram regression versus exact and Whittle
//! maximum likelihood, with a circulant-embedding simulator and a Monte Carlo
//! scenario harness for comparing them.

pub mod error;
pub mod experiments;
pub mod likelihood;
pub mod models;
mod optimize;
pub mod simulate;
pub mod uncertainty;
pub mod variogram;

pub use error::{Error, Result};
pub use likelihood::{
    exact_loglik, fit_mle, fit_whittle, profile_mean_variance, whittle_loglik, CovarianceMatrix, Method,
    Periodogram,
};
pub use models::{acf, semivariogram, spectral_density, ModelKind, ModelParams, Param};
pub use simulate::{chi2_moments, generate_gaussian, subsample, transform_square, SimConfig, TimeSeries};
pub use uncertainty::{coverage_stats, mle_std_errs, CoverageSummary, IntervalEstimate, Likelihood};
pub use variogram::{
    empirical_semivariogram, fit_wls, wls_std_errs, EmpiricalVariogram, FitFlag, FitResult, StdErrs,
};
