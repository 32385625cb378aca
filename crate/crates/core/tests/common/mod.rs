//! Brute-force numerical oracles shared by the integration tests.
#![allow(dead_code)]

use autocorr::{ModelKind, ModelParams, SimConfig, TimeSeries};

/// Composite Simpson rule with `n` (made even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * i as f64);
    }
    sum * h / 3.0
}

/// Gaussian elimination with partial pivoting: `(log |det A|, A^-1 b)`.
pub fn dense_logdet_solve(a: &[Vec<f64>], b: &[f64]) -> (f64, Vec<f64>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    let mut log_det = 0.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        log_det += p.abs().ln();
        for row in col + 1..n {
            let f = m[row][col] / p;
            if f != 0.0 {
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    (log_det, x)
}

/// Explicit inverse by Gauss-Jordan elimination.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let (_, col) = dense_logdet_solve(a, &e);
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    inv
}

/// Textbook Cholesky; `None` if a pivot is not positive.
pub fn dense_cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = a[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if !(d > 0.0) {
            return None;
        }
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            l[i][j] = (a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>()) / l[j][j];
        }
    }
    Some(l)
}

/// Dense Gaussian log-likelihood without the `2 pi` constant.
pub fn dense_loglik(cov: &[Vec<f64>], resid: &[f64]) -> f64 {
    let (log_det, sol) = dense_logdet_solve(cov, resid);
    let q: f64 = resid.iter().zip(&sol).map(|(r, s)| r * s).sum();
    -0.5 * log_det - 0.5 * q
}

pub fn unit(tau: f64) -> ModelParams {
    ModelParams::new(0.0, 1.0, tau).unwrap()
}

pub fn sim(kind: ModelKind, params: ModelParams, dt: f64, n: usize, seed: u64, stream: u64) -> TimeSeries {
    let cfg = SimConfig::new(kind, params, dt, n).seed(seed).stream(stream);
    autocorr::simulate::simulate(&cfg).unwrap()
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
