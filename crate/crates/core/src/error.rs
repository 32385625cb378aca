use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    /// A circulant eigenvalue fell below the clipping tolerance.
    #[error("circulant embedding has eigenvalue {value:e} at index {index} (sigma2 = {sigma2})")]
    NegativeSpectrum {
        index: usize,
        value: f64,
        sigma2: f64,
    },

    #[error("subsample out of range: offset {offset} + stride {stride} * (count {count} - 1) exceeds length {len}")]
    OutOfRange {
        offset: usize,
        stride: usize,
        count: usize,
        len: usize,
    },

    #[error("invalid maximum lag {max_lag} (dt = {dt})")]
    InvalidMaxLag { max_lag: f64, dt: f64 },

    #[error("lag {lag} has no data pairs")]
    EmptyLag { lag: f64 },

    #[error("variogram carries no shape information: {0}")]
    DegenerateVariogram(String),

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("covariance matrix is not positive definite (tau = {tau})")]
    NotPositiveDefinite { tau: f64 },

    #[error("spectral density vanishes at frequency index {index}")]
    ZeroSpectrum { index: usize },

    #[error("regression Jacobian is rank deficient")]
    SingularJacobian,

    #[error("regression residual scale is zero; standard errors are degenerate")]
    DegenerateResidual,

    #[error("log-likelihood curvature is not negative definite at the estimate")]
    NonPositiveCurvature,

    #[error("no feasible parameter value found in the search bracket [{lo}, {hi}]")]
    NoFeasiblePoint { lo: f64, hi: f64 },

    #[error("unknown scenario or config `{0}`")]
    UnknownScenario(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("scenario `{name}` failed: {failed} of {total} fits failed")]
    ScenarioFailed {
        name: String,
        failed: usize,
        total: usize,
    },

    #[error("report inconsistency: {0}")]
    ReportMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short stable code used in report failure records.
    pub fn reason_code(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "invalid_params",
            Error::InvalidSeries(_) => "invalid_series",
            Error::InvalidSimConfig(_) => "invalid_sim_config",
            Error::NegativeSpectrum { .. } => "negative_spectrum",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidMaxLag { .. } => "invalid_max_lag",
            Error::EmptyLag { .. } => "empty_lag",
            Error::DegenerateVariogram(_) => "degenerate_variogram",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::ZeroSpectrum { .. } => "zero_spectrum",
            Error::SingularJacobian => "singular_jacobian",
            Error::DegenerateResidual => "degenerate_residual",
            Error::NonPositiveCurvature => "non_positive_curvature",
            Error::NoFeasiblePoint { .. } => "no_feasible_point",
            Error::UnknownScenario(_) => "unknown_scenario",
            Error::Config(_) => "config",
            Error::ScenarioFailed { .. } => "scenario_failed",
            Error::ReportMismatch(_) => "report_mismatch",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Json(_) => "json",
        }
    }
}
