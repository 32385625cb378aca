//! Parametric autocorrelation families.
//!
//! Two families are provided, each with a single timescale `tau`:
//!
//! * [`ModelKind::Gaussian`]: `C(t) = sigma2 * exp(-t^2 / (2 tau^2))`. With this
//!   convention `tau` is the standard-deviation-like width of the ACF and the
//!   spectral density is `sigma2 * tau * sqrt(2 pi) * exp(-2 pi^2 f^2 tau^2)`.
//! * [`ModelKind::Rational`]: spectral density proportional to
//!   `1 / (1 + (2 pi f tau)^2)^(1 + d)`, normalized so that `C(0) = sigma2`.
//!   The ACF is the half-integer Matern form `sigma2 * exp(-x) * P_d(x)` with
//!   `x = |t| / tau`; `d = 0` is Ornstein-Uhlenbeck, `d = 1` gives
//!   `(1 + x) e^-x`, `d = 2` gives `(1 + x + x^2/3) e^-x`.
//!
//! All covariances are centered; the mean `mu` never enters `acf`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(mu, sigma2, tau)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    mu: f64,
    sigma2: f64,
    tau: f64,
}

#[derive(Deserialize)]
struct RawParams {
    mu: f64,
    sigma2: f64,
    tau: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.mu, raw.sigma2, raw.tau)
    }
}

impl ModelParams {
    pub fn new(mu: f64, sigma2: f64, tau: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParams(format!("mu must be finite, got {mu}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sigma2 must be positive and finite, got {sigma2}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "tau must be positive and finite, got {tau}"
            )));
        }
        Ok(Self { mu, sigma2, tau })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Value of a named parameter (`"mu"`, `"sigma2"` or `"tau"`).
    pub fn get(&self, param: Param) -> f64 {
        match param {
            Param::Mu => self.mu,
            Param::Sigma2 => self.sigma2,
            Param::Tau => self.tau,
        }
    }

    pub fn with_mu(self, mu: f64) -> Result<Self> {
        Self::new(mu, self.sigma2, self.tau)
    }

    pub fn with_sigma2(self, sigma2: f64) -> Result<Self> {
        Self::new(self.mu, sigma2, self.tau)
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        Self::new(self.mu, self.sigma2, tau)
    }
}

/// Parameter identifiers, in the canonical order used by reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Mu,
    Sigma2,
    Tau,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::Mu, Param::Sigma2, Param::Tau];

    pub fn name(self) -> &'static str {
        match self {
            Param::Mu => "mu",
            Param::Sigma2 => "sigma2",
            Param::Tau => "tau",
        }
    }

    /// Positive parameters get log-scale Wald intervals.
    pub fn is_positive(self) -> bool {
        !matches!(self, Param::Mu)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(Param::Mu),
            "sigma2" => Ok(Param::Sigma2),
            "tau" => Ok(Param::Tau),
            other => Err(Error::Config(format!("unknown parameter `{other}`"))),
        }
    }
}

/// Autocorrelation family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelKind {
    /// Gaussian-shaped ACF, `exp(-t^2 / (2 tau^2))`.
    Gaussian,
    /// Rational spectrum with continuity degree `d`.
    Rational { d: u32 },
}

/// Largest supported continuity degree.
pub const MAX_DEGREE: u32 = 64;

impl ModelKind {
    pub fn ou() -> Self {
        ModelKind::Rational { d: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelKind::Rational { d } if d > MAX_DEGREE => Err(Error::InvalidParams(format!(
                "continuity degree {d} exceeds {MAX_DEGREE}"
            ))),
            _ => Ok(()),
        }
    }

    /// Unit-variance correlation at scaled lag `x = |t| / tau`.
    pub fn correlation(&self, x: f64) -> f64 {
        let x = x.abs();
        match *self {
            ModelKind::Gaussian => (-0.5 * x * x).exp(),
            ModelKind::Rational { d } => {
                let (p, _) = matern_poly(d, x);
                (-x).exp() * p
            }
        }
    }

    /// Derivative of [`Self::correlation`] in `x` for `x >= 0`.
    pub fn correlation_dx(&self, x: f64) -> f64 {
        let x = x.abs();
        match *self {
            ModelKind::Gaussian => -x * (-0.5 * x * x).exp(),
            ModelKind::Rational { d } => {
                let (p, dp) = matern_poly(d, x);
                (-x).exp() * (dp - p)
            }
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Gaussian => f.write_str("gaussian"),
            ModelKind::Rational { d } => write!(f, "rational(d={d})"),
        }
    }
}

/// Evaluates `P_d(x) = sum_j a_j x^j` and its derivative, where
/// `a_0 = 1` and `a_{j+1} / a_j = 2 (d - j) / ((2d - j)(j + 1))`.
fn matern_poly(d: u32, x: f64) -> (f64, f64) {
    let d = d as usize;
    let mut coeffs = Vec::with_capacity(d + 1);
    let mut a = 1.0;
    coeffs.push(a);
    for j in 0..d {
        a *= 2.0 * (d - j) as f64 / (((2 * d - j) * (j + 1)) as f64);
        coeffs.push(a);
    }
    // Horner for value and derivative together.
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// `prod_{k=1..d} 2k / (2k - 1)`, i.e. `4^d / C(2d, d)`.
fn rational_norm(d: u32) -> f64 {
    (1..=d).map(|k| (2 * k) as f64 / (2 * k - 1) as f64).product()
}

/// Centered autocovariance `C(lag)`.
pub fn acf(kind: ModelKind, params: &ModelParams, lag: f64) -> f64 {
    params.sigma2 * kind.correlation(lag / params.tau)
}

/// `dC(lag)/dtau` at fixed `sigma2`.
pub fn acf_dtau(kind: ModelKind, params: &ModelParams, lag: f64) -> f64 {
    let x = lag.abs() / params.tau;
    params.sigma2 * kind.correlation_dx(x) * (-x / params.tau)
}

/// `gamma(lag) = C(0) - C(lag)`.
pub fn semivariogram(kind: ModelKind, params: &ModelParams, lag: f64) -> f64 {
    params.sigma2 * (1.0 - kind.correlation(lag / params.tau))
}

/// Two-sided spectral density with `integral s(f) df = sigma2`.
pub fn spectral_density(kind: ModelKind, params: &ModelParams, f: f64) -> f64 {
    let tau = params.tau;
    match kind {
        ModelKind::Gaussian => {
            params.sigma2 * tau * (2.0 * PI).sqrt() * (-2.0 * PI * PI * f * f * tau * tau).exp()
        }
        ModelKind::Rational { d } => {
            let w = 2.0 * PI * f * tau;
            let denom = (1.0 + w * w).powi(d as i32 + 1);
            params.sigma2 * 2.0 * tau * rational_norm(d) / denom
        }
    }
}
