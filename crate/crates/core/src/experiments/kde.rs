//! Gaussian kernel density estimates ("smoothed histograms").

use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics, Statistics};

pub const GRID_POINTS: usize = 512;
/// Grid extends this many bandwidths beyond the sample range.
pub const GRID_PAD: f64 = 3.0;
/// Smallest bandwidth, relative to the sample magnitude (at least 1).
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub bandwidth: f64,
}

impl Density {
    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.y.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

/// Silverman's rule: `0.9 min(sd, IQR / 1.34) n^(-1/5)`, falling back to
/// whichever spread measure is positive.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let sd = if samples.len() > 1 { samples.std_dev() } else { 0.0 };
    let mut data = Data::new(samples.to_vec());
    let iqr = data.interquartile_range() / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.0,
    };
    0.9 * spread * n.powf(-0.2)
}

/// Kernel density of `samples` on a 512-point grid spanning the sample range
/// padded by three bandwidths. Meant for at least ten samples. Returns `None`
/// for an empty or non-finite sample.
pub fn smoothed_histogram(samples: &[f64], bandwidth: Option<f64>) -> Option<Density> {
    if samples.is_empty() || samples.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = BANDWIDTH_FLOOR * lo.abs().max(hi.abs()).max(1.0);
    let h = bandwidth
        .filter(|h| h.is_finite() && *h > 0.0)
        .unwrap_or_else(|| silverman_bandwidth(samples))
        .max(floor);

    let (a, b) = (lo - GRID_PAD * h, hi + GRID_PAD * h);
    let step = (b - a) / (GRID_POINTS - 1) as f64;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let x: Vec<f64> = (0..GRID_POINTS).map(|i| a + step * i as f64).collect();
    let y = x
        .iter()
        .map(|&xi| {
            norm * samples
                .iter()
                .map(|&s| (-0.5 * ((xi - s) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect();
    Some(Density { x, y, bandwidth: h })
}
