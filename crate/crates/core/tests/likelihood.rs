mod common;

use std::time::Instant;

use autocorr::likelihood::{sampled_spectrum, whittle_profile};
use autocorr::variogram::fit_wls_series;
use autocorr::{
    exact_loglik, fit_mle, fit_whittle, profile_mean_variance, whittle_loglik, CovarianceMatrix, Error, FitResult,
    ModelKind, ModelParams, Periodogram, TimeSeries,
};
use proptest::prelude::*;

use common::{dense_loglik, median, sim, unit};

fn dense_reference(series: &TimeSeries, kind: ModelKind, p: &ModelParams) -> f64 {
    let cov = CovarianceMatrix::from_model(kind, p, series.len(), series.dt()).to_dense();
    let resid: Vec<f64> = series.values().iter().map(|x| x - p.mu()).collect();
    dense_loglik(&cov, &resid)
}

#[test]
fn exact_loglik_matches_dense_oracle_on_small_records() {
    let cases = [
        (ModelKind::ou(), 0.3),
        (ModelKind::ou(), 2.0),
        (ModelKind::Gaussian, 0.7),
        (ModelKind::Rational { d: 1 }, 0.5),
        (ModelKind::Rational { d: 3 }, 0.8),
    ];
    for (i, (kind, dt)) in cases.into_iter().enumerate() {
        for n in [1, 2, 5, 17, 32] {
            let truth = ModelParams::new(0.4, 1.3, 1.0).unwrap();
            // Simulate a longer record so the circulant embedding is valid.
            let long = sim(kind, truth, dt, 64, 41, i as u64);
            let s = TimeSeries::new(long.values()[..n].to_vec(), dt).unwrap();
            let p = ModelParams::new(0.1, 0.9, 1.2).unwrap();
            let got = exact_loglik(&s, kind, &p).unwrap();
            let want = dense_reference(&s, kind, &p);
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{kind} dt={dt} n={n}: {got} vs {want}");
        }
    }
}

#[test]
fn exact_loglik_matches_dense_oracle_on_long_records() {
    for (kind, dt) in [(ModelKind::ou(), 0.5), (ModelKind::Rational { d: 1 }, 1.0), (ModelKind::Gaussian, 1.0)] {
        for n in [128, 512] {
            let s = sim(kind, unit(1.0), dt, n, 3, n as u64);
            let p = ModelParams::new(0.0, 1.1, 0.9).unwrap();
            let got = exact_loglik(&s, kind, &p).unwrap();
            let want = dense_reference(&s, kind, &p);
            assert!((got - want).abs() <= 1e-9 * want.abs(), "{kind} n={n}: {got} vs {want}");
        }
    }
}

#[test]
fn singular_covariance_is_jittered_once() {
    // Rank one: fails, then succeeds with the diagonal jitter.
    let ones = CovarianceMatrix::from_column(vec![1.0; 3]);
    let w = ones.whiten(&[&[0.0, 0.0, 0.0]]).unwrap();
    let expected = 3f64.ln() + 2.0 * 1e-10f64.ln();
    assert!((w.log_det - expected).abs() < 1e-4, "{} vs {expected}", w.log_det);
    // Indefinite beyond anything the jitter can fix.
    let bad = CovarianceMatrix::from_column(vec![1.0, 2.0]);
    assert!(bad.whiten(&[&[1.0, 0.0]]).is_none());
}

#[test]
fn white_noise_whittle_equals_exact_up_to_sampling_constant() {
    // Gaussian ACF far narrower than dt: lags >= 1 vanish, so Sigma = sigma2 I
    // and the sampled spectrum is flat at sigma2 dt.
    for (n, dt) in [(16, 1.0), (101, 0.25), (256, 3.0)] {
        let truth = ModelParams::new(2.0, 1.5, dt / 100.0).unwrap();
        let s = sim(ModelKind::Gaussian, truth, dt, n, 8, 0);
        let p = ModelParams::new(1.7, 0.8, dt / 100.0).unwrap();
        let exact = exact_loglik(&s, ModelKind::Gaussian, &p).unwrap();
        let whittle = whittle_loglik(&s, ModelKind::Gaussian, &p).unwrap();
        let shift = -0.5 * n as f64 * dt.ln();
        assert!((whittle - (exact + shift)).abs() < 1e-9 * exact.abs(), "n={n}: {whittle} vs {exact} + {shift}");
    }
}

#[test]
fn periodogram_satisfies_parseval() {
    let s = sim(ModelKind::ou(), ModelParams::new(1.0, 2.0, 1.0).unwrap(), 0.5, 300, 1, 0);
    let pg = Periodogram::from_series(&s);
    let direct: f64 = s.values().iter().map(|x| x * x).sum();
    assert!((pg.total_power() - direct).abs() < 1e-10 * direct);
    assert!((pg.df - 1.0 / 150.0).abs() < 1e-15);
    let mean_coeff = pg.coeffs[0].re / 300f64.sqrt();
    assert!((mean_coeff - s.mean()).abs() < 1e-12);
}

#[test]
fn sampled_spectrum_sums_to_variance() {
    // Inverse DFT at lag zero: (1 / (n dt)) sum_j S(f_j) = sum_m C(m n dt).
    for kind in [ModelKind::ou(), ModelKind::Gaussian, ModelKind::Rational { d: 2 }] {
        let p = ModelParams::new(0.0, 1.7, 2.0).unwrap();
        let (n, dt) = (64, 0.5);
        let s = sampled_spectrum(kind, &p, dt, n);
        let c0 = s.iter().sum::<f64>() / (n as f64 * dt);
        let wrapped: f64 = (-20i32..=20).map(|m| autocorr::acf(kind, &p, m as f64 * n as f64 * dt)).sum();
        assert!((c0 - wrapped).abs() < 1e-12, "{kind}: {c0} vs {wrapped}");
        // The Gaussian spectrum underflows to roundoff well inside the band.
        if !matches!(kind, ModelKind::Gaussian) {
            assert!(s.iter().all(|&v| v > 0.0));
        }
    }
}

#[test]
fn profile_is_the_conditional_maximum() {
    for (kind, whittle) in [(ModelKind::ou(), false), (ModelKind::Rational { d: 1 }, false), (ModelKind::ou(), true)] {
        let s = sim(kind, ModelParams::new(0.5, 1.0, 1.0).unwrap(), 0.5, 80, 13, 0);
        let tau = 1.3;
        let prof = if whittle {
            whittle_profile(&s, kind, tau).unwrap()
        } else {
            profile_mean_variance(&s, kind, tau).unwrap()
        };
        let at = |mu: f64, s2: f64| {
            let p = ModelParams::new(mu, s2, tau).unwrap();
            if whittle {
                whittle_loglik(&s, kind, &p).unwrap()
            } else {
                exact_loglik(&s, kind, &p).unwrap()
            }
        };
        let best = at(prof.mu, prof.sigma2);
        assert!((best - prof.loglik).abs() <= 1e-12 * best.abs(), "{kind}: {best} vs {}", prof.loglik);
        for (dm, ds) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3), (1e-3, 1e-3)] {
            assert!(at(prof.mu + dm, prof.sigma2 * (1.0 + ds)) < best);
        }
        if whittle {
            assert_eq!(prof.mu, s.mean());
        }
    }
}

/// Fitted `tau` against brute-force maximisation of the profile over a fine
/// grid covering the whole search bracket.
fn check_against_grid(fit: &FitResult, profile: impl Fn(f64) -> f64, dt: f64, n: usize) {
    let (lo, hi) = ((dt / 10.0).ln(), (10.0 * n as f64 * dt).ln());
    let grid = 400;
    let step = (hi - lo) / (grid - 1) as f64;
    let (arg, best) = (0..grid)
        .map(|i| {
            let t = (lo + step * i as f64).exp();
            (t, profile(t))
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!(fit.objective >= best - 1e-9 * best.abs(), "fit {} below grid {best}", fit.objective);
    assert!((fit.params.tau().ln() - arg.ln()).abs() <= step, "tau {} vs grid {arg}", fit.params.tau());
}

#[test]
fn fits_agree_with_grid_search() {
    let (dt, n) = (0.5, 96);
    for r in 0..20 {
        let kind = if r % 2 == 0 { ModelKind::ou() } else { ModelKind::Rational { d: 1 } };
        let s = sim(kind, ModelParams::new(0.2, 1.0, 1.0).unwrap(), dt, n, 77, r);
        let init = unit(1.0);
        let mle = fit_mle(&s, kind, &init).unwrap();
        check_against_grid(&mle, |t| profile_mean_variance(&s, kind, t).unwrap().loglik, dt, n);
        let wh = fit_whittle(&s, kind, &init).unwrap();
        check_against_grid(&wh, |t| whittle_profile(&s, kind, t).unwrap().loglik, dt, n);
    }
}

#[test]
fn mle_is_more_accurate_than_wls_for_ou() {
    let (dt, n) = (0.5, 256);
    let mut mle_err = Vec::new();
    let mut wls_err = Vec::new();
    for r in 0..40 {
        let s = sim(ModelKind::ou(), unit(1.0), dt, n, 123, r);
        let mle = fit_mle(&s, ModelKind::ou(), &unit(1.0)).unwrap();
        let wls = fit_wls_series(&s, ModelKind::ou(), 1.0).unwrap();
        mle_err.push((mle.params.tau() - 1.0).abs());
        wls_err.push((wls.params.tau() - 1.0).abs());
    }
    let (m, w) = (median(&mut mle_err), median(&mut wls_err));
    assert!(m < w, "median |error|: mle {m}, wls {w}");
}

#[test]
fn whittle_cost_grows_near_linearly() {
    let time = |n: usize| {
        let s = sim(ModelKind::ou(), unit(4.0), 1.0, n, 5, 0);
        let p = unit(4.0);
        (0..5)
            .map(|_| {
                let start = Instant::now();
                whittle_loglik(&s, ModelKind::ou(), &p).unwrap();
                start.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min)
    };
    let small = time(1 << 12);
    let large = time(1 << 16);
    // 16x the data; quadratic cost would be 256x.
    assert!(large / small < 64.0, "{small} s -> {large} s");
}

#[test]
fn short_records_are_rejected() {
    let s = TimeSeries::new(vec![0.0, 1.0], 1.0).unwrap();
    assert!(matches!(fit_mle(&s, ModelKind::ou(), &unit(1.0)), Err(Error::InsufficientData { .. })));
    assert!(matches!(fit_whittle(&s, ModelKind::ou(), &unit(1.0)), Err(Error::InsufficientData { .. })));
}

fn series_from(values: Vec<f64>, dt: f64) -> TimeSeries {
    TimeSeries::new(values, dt).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn affine_transform_shifts_loglik_by_log_jacobian(
        values in prop::collection::vec(-3.0f64..3.0, 3..40),
        a in 0.2f64..5.0,
        b in -10.0f64..10.0,
        tau in 0.3f64..3.0,
    ) {
        let kind = ModelKind::ou();
        let n = values.len() as f64;
        let s = series_from(values.clone(), 0.5);
        let moved = series_from(values.iter().map(|x| a * x + b).collect(), 0.5);
        let p = ModelParams::new(0.3, 1.2, tau).unwrap();
        let q = ModelParams::new(a * 0.3 + b, a * a * 1.2, tau).unwrap();
        let base = exact_loglik(&s, kind, &p).unwrap();
        let got = exact_loglik(&moved, kind, &q).unwrap();
        prop_assert!((got - (base - n * a.ln())).abs() < 1e-9 * (1.0 + base.abs()));
    }

    #[test]
    fn loglik_is_invariant_to_time_reversal(
        values in prop::collection::vec(-3.0f64..3.0, 3..60),
        kind_ix in 0u32..3,
        tau in 0.3f64..3.0,
    ) {
        let kind = ModelKind::Rational { d: kind_ix };
        let s = series_from(values.clone(), 0.7);
        let rev = series_from(values.into_iter().rev().collect(), 0.7);
        let p = ModelParams::new(-0.2, 0.8, tau).unwrap();
        let (a, b) = (exact_loglik(&s, kind, &p).unwrap(), exact_loglik(&rev, kind, &p).unwrap());
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        let (a, b) = (whittle_loglik(&s, kind, &p).unwrap(), whittle_loglik(&rev, kind, &p).unwrap());
        prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn profile_mean_translates_with_data(
        values in prop::collection::vec(-3.0f64..3.0, 4..40),
        c in -100.0f64..100.0,
    ) {
        let s = series_from(values.clone(), 1.0);
        prop_assume!(values.iter().any(|&v| (v - values[0]).abs() > 1e-3));
        let moved = series_from(values.iter().map(|x| x + c).collect(), 1.0);
        for exact in [true, false] {
            let (p, q) = if exact {
                (profile_mean_variance(&s, ModelKind::ou(), 1.5).unwrap(), profile_mean_variance(&moved, ModelKind::ou(), 1.5).unwrap())
            } else {
                (whittle_profile(&s, ModelKind::ou(), 1.5).unwrap(), whittle_profile(&moved, ModelKind::ou(), 1.5).unwrap())
            };
            prop_assert!((q.mu - p.mu - c).abs() < 1e-9 * (1.0 + c.abs()));
            prop_assert!((q.sigma2 / p.sigma2 - 1.0).abs() < 1e-6);
            prop_assert!((q.loglik - p.loglik).abs() < 1e-6 * (1.0 + p.loglik.abs()));
        }
    }
}
