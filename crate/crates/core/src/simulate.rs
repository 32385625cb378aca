//! Stationary Gaussian series by circulant embedding, plus subsampling and the
//! squaring transform used to build chi-square processes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlannerScalar};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{acf, ModelKind, ModelParams};

/// Evenly sampled observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
    t0: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        Self::with_start(values, dt, 0.0)
    }

    pub fn with_start(values: Vec<f64>, dt: f64, t0: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSeries("no observations".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidSeries(format!("dt must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidSeries(format!("t0 must be finite, got {t0}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value at index {i}")));
        }
        Ok(Self { values, dt, t0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Applies `f` elementwise, keeping the time grid.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::with_start(self.values.iter().map(|&v| f(v)).collect(), self.dt, self.t0)
    }
}

/// Recipe for one simulated replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub kind: ModelKind,
    pub params: ModelParams,
    /// Sampling interval after subsampling.
    pub dt: f64,
    /// Samples kept after subsampling.
    pub n_target: usize,
    /// Generation grid is `dt / oversample`.
    pub oversample: usize,
    /// Circulant length is `n_target * oversample * pad_factor`.
    pub pad_factor: usize,
    pub seed: u64,
    /// Substream index (the replicate number).
    pub stream: u64,
}

pub const DEFAULT_PAD_FACTOR: usize = 4;

/// Relative tolerance below which negative circulant eigenvalues are clipped.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-10;

impl SimConfig {
    pub fn new(kind: ModelKind, params: ModelParams, dt: f64, n_target: usize) -> Self {
        Self {
            kind,
            params,
            dt,
            n_target,
            oversample: 1,
            pad_factor: DEFAULT_PAD_FACTOR,
            seed: 0,
            stream: 0,
        }
    }

    pub fn oversample(mut self, oversample: usize) -> Self {
        self.oversample = oversample;
        self
    }

    pub fn pad_factor(mut self, pad_factor: usize) -> Self {
        self.pad_factor = pad_factor;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn fine_dt(&self) -> f64 {
        self.dt / self.oversample as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidSimConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_target == 0 {
            return Err(Error::InvalidSimConfig("n_target must be at least 1".into()));
        }
        if self.oversample == 0 {
            return Err(Error::InvalidSimConfig("oversample must be at least 1".into()));
        }
        if self.pad_factor < 2 {
            return Err(Error::InvalidSimConfig(format!(
                "pad_factor must be at least 2, got {}",
                self.pad_factor
            )));
        }
        Ok(())
    }
}

/// Random source for replicate `stream` of master seed `seed`.
///
/// ChaCha is counter based, so each replicate owns an independent substream
/// and the draw sequence does not depend on scheduling.
pub fn replicate_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Eigenvalues of the circulant embedding of the covariance on `m` points.
fn circulant_eigenvalues(kind: ModelKind, params: &ModelParams, dt: f64, m: usize) -> Result<Vec<f64>> {
    let mut row: Vec<Complex64> = (0..m)
        .map(|k| Complex64::new(acf(kind, params, k.min(m - k) as f64 * dt), 0.0))
        .collect();
    let mut planner = FftPlannerScalar::new();
    planner.plan_fft(m, FftDirection::Forward).process(&mut row);

    let floor = -NEGATIVE_EIGEN_TOL * params.sigma2();
    let mut clipped = 0usize;
    let eig = row
        .iter()
        .enumerate()
        .map(|(index, z)| {
            let value = z.re;
            if value >= 0.0 {
                Ok(value)
            } else if value >= floor {
                clipped += 1;
                Ok(0.0)
            } else {
                Err(Error::NegativeSpectrum {
                    index,
                    value,
                    sigma2: params.sigma2(),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if clipped > 0 {
        log::debug!("clipped {clipped} slightly negative circulant eigenvalues (m = {m})");
    }
    Ok(eig)
}

/// Simulates the fine generation grid: `n_target * oversample` points spaced
/// `dt / oversample`, with mean `mu` and covariance exactly `acf`.
///
/// Only the leading `m / pad_factor` points of the length-`m` circulant draw
/// are returned; the rest carry the wrapped-around covariance.
pub fn generate_gaussian(cfg: &SimConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let n_fine = cfg.n_target * cfg.oversample;
    let m = n_fine * cfg.pad_factor;
    let dt = cfg.fine_dt();
    let eig = circulant_eigenvalues(cfg.kind, &cfg.params, dt, m)?;

    let mut rng = replicate_rng(cfg.seed, cfg.stream);
    let scale = 1.0 / m as f64;
    let mut buf: Vec<Complex64> = eig
        .iter()
        .map(|&lambda| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * (lambda * scale).sqrt()
        })
        .collect();
    let mut planner = FftPlannerScalar::new();
    planner.plan_fft(m, FftDirection::Forward).process(&mut buf);

    let mu = cfg.params.mu();
    let values = buf[..n_fine].iter().map(|z| z.re + mu).collect();
    TimeSeries::new(values, dt)
}

/// Picks `count` points starting at `offset`, every `stride`-th sample.
pub fn subsample(series: &TimeSeries, stride: usize, count: usize, offset: usize) -> Result<TimeSeries> {
    let out_of_range = Error::OutOfRange {
        offset,
        stride,
        count,
        len: series.len(),
    };
    if stride == 0 || count == 0 {
        return Err(out_of_range);
    }
    let last = stride
        .checked_mul(count - 1)
        .and_then(|span| span.checked_add(offset));
    match last {
        Some(last) if last < series.len() => {}
        _ => return Err(out_of_range),
    }
    let values = series.values()[offset..]
        .iter()
        .step_by(stride)
        .take(count)
        .copied()
        .collect();
    TimeSeries::with_start(
        values,
        series.dt() * stride as f64,
        series.t0() + offset as f64 * series.dt(),
    )
}

/// Generates the fine grid then keeps every `oversample`-th point.
pub fn simulate(cfg: &SimConfig) -> Result<TimeSeries> {
    let fine = generate_gaussian(cfg)?;
    subsample(&fine, cfg.oversample, cfg.n_target, 0)
}

/// `y_i = x_i^2`.
pub fn transform_square(series: &TimeSeries) -> TimeSeries {
    series.map(|x| x * x).expect("squares of finite values on a valid grid")
}

/// Mean and lag-`lag` covariance of the squared process `x^2`, where `x` is
/// Gaussian with mean `mu` and covariance `C`:
/// `E[x^2] = mu^2 + sigma2`, `Cov = 2 C^2 + 4 mu^2 C`.
pub fn chi2_moments(kind: ModelKind, params: &ModelParams, lag: f64) -> (f64, f64) {
    let mu = params.mu();
    let c = acf(kind, params, lag);
    (mu * mu + params.sigma2(), 2.0 * c * c + 4.0 * mu * mu * c)
}

/// Parameters of the squared process when it stays inside the same family.
///
/// With `mu = 0` the squared covariance `2 C(t)^2` is again Gaussian-shaped
/// (width `tau / sqrt 2`) or exponential (timescale `tau / 2`). Other cases
/// leave the family and return `None`.
pub fn squared_process_params(kind: ModelKind, params: &ModelParams) -> Option<ModelParams> {
    if params.mu() != 0.0 {
        return None;
    }
    let (mean, var) = chi2_moments(kind, params, 0.0);
    let tau = match kind {
        ModelKind::Gaussian => params.tau() / 2f64.sqrt(),
        ModelKind::Rational { d: 0 } => params.tau() / 2.0,
        ModelKind::Rational { .. } => return None,
    };
    ModelParams::new(mean, var, tau).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn series_validation() {
        assert!(TimeSeries::new(vec![], 1.0).is_err());
        assert!(TimeSeries::new(vec![1.0], 0.0).is_err());
        assert!(TimeSeries::new(vec![f64::NAN], 1.0).is_err());
    }

    #[test]
    fn subsample_identity() {
        let s = series(&[1.0, 2.0, 3.0]);
        assert_eq!(subsample(&s, 1, 3, 0).unwrap(), s);
    }

    #[test]
    fn subsample_stride_two() {
        let s = series(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let sub = subsample(&s, 2, 4, 0).unwrap();
        assert_eq!(sub.values(), &[0.0, 2.0, 4.0, 6.0]);
        assert_eq!(sub.dt(), 2.0);
    }

    #[test]
    fn subsample_offset_shifts_start() {
        let s = series(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let sub = subsample(&s, 2, 2, 1).unwrap();
        assert_eq!(sub.values(), &[1.0, 3.0]);
        assert_eq!(sub.t0(), 1.0);
    }

    #[test]
    fn subsample_out_of_range() {
        let s = series(&[0.0; 8]);
        assert!(matches!(subsample(&s, 2, 5, 0), Err(Error::OutOfRange { .. })));
        assert!(matches!(subsample(&s, 1, 8, 1), Err(Error::OutOfRange { .. })));
        assert!(matches!(subsample(&s, 0, 1, 0), Err(Error::OutOfRange { .. })));
        assert!(matches!(subsample(&s, usize::MAX, 3, 0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn square_examples() {
        assert_eq!(transform_square(&series(&[0.0, 0.0])).values(), &[0.0, 0.0]);
        assert_eq!(transform_square(&series(&[1.0, -2.0])).values(), &[1.0, 4.0]);
    }

    #[test]
    fn chi2_moment_examples() {
        let p = ModelParams::new(0.0, 1.0, 1.0).unwrap();
        assert_eq!(chi2_moments(ModelKind::Gaussian, &p, 0.0), (1.0, 2.0));
        // Pick the lag where C = 0.5.
        let lag = (2.0 * 2f64.ln()).sqrt();
        let (_, cov) = chi2_moments(ModelKind::Gaussian, &p, lag);
        assert!((cov - 0.5).abs() < 1e-14);
        let p1 = p.with_mu(1.0).unwrap();
        let (mean, cov) = chi2_moments(ModelKind::Gaussian, &p1, lag);
        assert_eq!(mean, 2.0);
        assert!((cov - 2.5).abs() < 1e-14);
    }

    #[test]
    fn squared_params_match_moments() {
        let p = ModelParams::new(0.0, 1.5, 2.0).unwrap();
        for kind in [ModelKind::Gaussian, ModelKind::ou()] {
            let sq = squared_process_params(kind, &p).unwrap();
            for &lag in &[0.0, 0.7, 2.0, 5.0] {
                let (mean, cov) = chi2_moments(kind, &p, lag);
                assert!((sq.mu() - mean).abs() < 1e-14);
                assert!((acf(kind, &sq, lag) - cov).abs() < 1e-12, "{kind} lag {lag}");
            }
        }
        assert!(squared_process_params(ModelKind::Rational { d: 2 }, &p).is_none());
        assert!(squared_process_params(ModelKind::Gaussian, &p.with_mu(1.0).unwrap()).is_none());
    }

    #[test]
    fn config_validation() {
        let p = ModelParams::new(0.0, 1.0, 1.0).unwrap();
        let cfg = SimConfig::new(ModelKind::Gaussian, p, 0.5, 64);
        assert!(cfg.clone().pad_factor(1).validate().is_err());
        assert!(cfg.clone().oversample(0).validate().is_err());
        assert!(SimConfig::new(ModelKind::Gaussian, p, 0.5, 0).validate().is_err());
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn seeded_generation_is_bit_identical() {
        let p = ModelParams::new(0.3, 1.0, 1.0).unwrap();
        let cfg = SimConfig::new(ModelKind::Gaussian, p, 0.5, 64).oversample(4).seed(7).stream(3);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.len(), 64);
        assert_eq!(a.dt(), 0.5);
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = simulate(&cfg.clone().stream(4)).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn fine_grid_length() {
        let p = ModelParams::new(0.0, 1.0, 1.0).unwrap();
        let cfg = SimConfig::new(ModelKind::ou(), p, 0.5, 16).oversample(4);
        let fine = generate_gaussian(&cfg).unwrap();
        assert_eq!(fine.len(), 64);
        assert_eq!(fine.dt(), 0.125);
    }
}
