//! Derivative-free minimizers: Nelder-Mead simplex and Brent's 1-D method.
//!
//! Non-finite objective values are treated as +infinity, so callers can mark
//! infeasible regions by returning `f64::INFINITY` or `NaN`.

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMead {
    pub max_iter: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            f_tol: 1e-12,
            x_tol: 1e-9,
        }
    }
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

impl NelderMead {
    /// Minimizes `f` from `x0` with an axis-aligned initial simplex of size `step`.
    pub fn minimize(&self, f: impl Fn(&[f64]) -> f64, x0: &[f64], step: &[f64]) -> Minimum {
        let n = x0.len();
        let eval = |x: &[f64]| finite_or_inf(f(x));

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), eval(x0)));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += step[i];
            let fx = eval(&x);
            simplex.push((x, fx));
        }

        let mut iterations = 0;
        while iterations < self.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let spread = if worst.is_finite() { worst - best } else { f64::INFINITY };
            if spread <= self.f_tol * (1.0 + best.abs()) && diameter <= self.x_tol {
                break;
            }
            iterations += 1;

            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
                .collect();
            let toward = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].0)
                    .map(|(c, w)| c + t * (w - c))
                    .collect()
            };

            let xr = toward(-1.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = toward(-2.0);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = toward(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = toward(0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
                continue;
            }
            // Shrink toward the best vertex.
            let x_best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = vertex
                    .0
                    .iter()
                    .zip(&x_best)
                    .map(|(v, b)| b + 0.5 * (v - b))
                    .collect();
                let fx = eval(&x);
                *vertex = (x, fx);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, f) = simplex.swap_remove(0);
        Minimum { x, f }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Min1d {
    pub x: f64,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Brent's method (golden section with parabolic steps) on `[a, b]`.
pub fn brent_minimize(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_evals: usize) -> Min1d {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let eval = |x: f64| finite_or_inf(f(x));
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = eval(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    let mut evals = 1;

    while evals < max_evals {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-12;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Min1d {
                x,
                f: fx,
                evals,
                converged: true,
            };
        }
        let mut golden = true;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > 0.0 {
            x + tol1
        } else {
            x - tol1
        };
        let fu = eval(u);
        evals += 1;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Min1d {
        x,
        f: fx,
        evals,
        converged: false,
    }
}

/// Result of a bracketed search over a positive scale parameter.
#[derive(Clone, Copy, Debug)]
pub struct BracketMin {
    pub x: f64,
    pub evals: usize,
    pub converged: bool,
    /// The best grid point was an endpoint of `[lo, hi]`.
    pub at_edge: bool,
}

/// Minimizes `f(x)` over `x in [lo, hi]`, `0 < lo < hi`, by a log-spaced grid
/// scan followed by Brent refinement in log space around the best grid point.
/// Returns `None` if no grid point is finite.
pub fn bracketed_log_minimize(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid_points: usize,
    extra: &[f64],
) -> Option<BracketMin> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| llo + (lhi - llo) * i as f64 / (grid_points - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&g| finite_or_inf(f(g.exp()))).collect();
    let mut evals = grid_points;

    let (best_i, &best_f) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    if !best_f.is_finite() {
        return None;
    }

    // Extra candidates (e.g. an initial guess) can move the refinement window.
    let mut best = (grid[best_i].exp(), best_f);
    let mut center = best_i;
    for &x in extra {
        if x > lo && x < hi {
            let fx = finite_or_inf(f(x));
            evals += 1;
            if fx < best.1 {
                best = (x, fx);
                center = grid.partition_point(|&g| g < x.ln()).clamp(1, grid_points - 2);
            }
        }
    }

    let at_edge = center == 0 || center == grid_points - 1;
    let a = grid[center.saturating_sub(1)];
    let b = grid[(center + 1).min(grid_points - 1)];
    let refined = brent_minimize(|g| f(g.exp()), a, b, 1e-10, 200);
    evals += refined.evals;

    let x = if refined.f <= best.1 { refined.x.exp() } else { best.0 };
    Some(BracketMin {
        x,
        evals,
        converged: refined.converged,
        at_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let nm = NelderMead {
            max_iter: 5000,
            ..Default::default()
        };
        let m = nm.minimize(rosen, &[-1.2, 1.0], &[0.5, 0.5]);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn nelder_mead_respects_infeasible_region() {
        let f = |x: &[f64]| {
            if x[0] < 0.5 {
                f64::NAN
            } else {
                (x[0] - 0.25).powi(2) + x[1] * x[1]
            }
        };
        let m = NelderMead::default().minimize(f, &[2.0, 1.0], &[0.3, 0.3]);
        assert!(m.x[0] >= 0.5);
        assert!((m.x[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_keeps_exact_optimum() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2);
        let m = NelderMead::default().minimize(f, &[1.0, -2.0], &[0.1, 0.1]);
        assert_eq!(m.x, vec![1.0, -2.0]);
        assert_eq!(m.f, 0.0);
    }

    #[test]
    fn brent_quadratic_and_cosine() {
        let m = brent_minimize(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-10, 200);
        assert!(m.converged && (m.x - 0.3).abs() < 1e-7);
        let m = brent_minimize(f64::cos, 2.0, 4.0, 1e-10, 200);
        assert!((m.x - std::f64::consts::PI).abs() < 1e-7);
    }

    #[test]
    fn bracketed_search_interior_and_edge() {
        let f = |x: f64| (x.ln() - 2f64.ln()).powi(2);
        let m = bracketed_log_minimize(f, 0.01, 100.0, 30, &[]).unwrap();
        assert!(!m.at_edge && (m.x - 2.0).abs() < 1e-6);
        let m = bracketed_log_minimize(f, 10.0, 100.0, 30, &[]).unwrap();
        assert!(m.at_edge && (m.x - 10.0).abs() < 1e-6);
        assert!(bracketed_log_minimize(|_| f64::NAN, 1.0, 2.0, 5, &[]).is_none());
    }
}
