use std::cell::Cell;

use crate::real::Real;

use super::{central_difference, OptimResult, TracePoint};

/// Direction update of nonlinear conjugate gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BetaRule {
    /// Polak-Ribiere with `beta` clamped at zero.
    #[default]
    PolakRibierePlus,
    /// `beta = 0`: plain steepest ascent.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineSearch {
    /// Backtracking from the trust length until the Armijo condition holds.
    #[default]
    Armijo,
    /// One parabolic fit along the direction from the value, the directional
    /// derivative and one trial point; exact on quadratics. Falls back to
    /// Armijo when the fit is not an improvement.
    Parabolic,
}

/// Settings shared by [`gradient_ascent`] and [`conjugate_gradient_ascent`].
///
/// Iteration happens in scaled coordinates `u = theta / scale`, so `tol`,
/// `step_tol` and `initial_step` are in units of `scale`. The finite
/// difference step is one scaled unit per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentOptions<T> {
    pub scale: Vec<T>,
    pub max_iter: usize,
    /// Stop once the scaled gradient norm falls below this.
    pub tol: T,
    /// Stop once the accepted step (scaled) falls below this.
    pub step_tol: T,
    pub initial_step: T,
    pub armijo_c: T,
    pub shrink: T,
    pub line_search: LineSearch,
    /// Restart to steepest ascent every this many iterations; `None` uses
    /// the dimension.
    pub restart_every: Option<usize>,
}

impl<T: Real> AscentOptions<T> {
    pub fn new(scale: Vec<T>) -> Self {
        Self {
            scale,
            max_iter: 100,
            tol: T::lit(1e-6),
            step_tol: T::lit(1e-10),
            initial_step: T::one(),
            armijo_c: T::lit(1e-4),
            shrink: T::lit(0.5),
            line_search: LineSearch::Armijo,
            restart_every: None,
        }
    }

    /// Unit scale in every one of `dim` dimensions.
    pub fn unscaled(dim: usize) -> Self {
        Self::new(vec![T::one(); dim])
    }

    pub fn max_iter(mut self, n: usize) -> Self {
        self.max_iter = n;
        self
    }

    pub fn tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn step_tol(mut self, tol: T) -> Self {
        self.step_tol = tol;
        self
    }

    pub fn initial_step(mut self, s: T) -> Self {
        self.initial_step = s;
        self
    }

    pub fn line_search(mut self, ls: LineSearch) -> Self {
        self.line_search = ls;
        self
    }

    pub fn restart_every_n(mut self, n: usize) -> Self {
        self.restart_every = Some(n);
        self
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn axpy<T: Real>(u: &[T], alpha: T, d: &[T]) -> Vec<T> {
    u.iter().zip(d).map(|(a, b)| *a + alpha * *b).collect()
}

/// Steepest ascent with backtracking line search on the numeric gradient.
pub fn gradient_ascent<T: Real, F: Fn(&[T]) -> T>(f: F, theta0: &[T], opts: &AscentOptions<T>) -> OptimResult<T> {
    ascend(&f, theta0, opts, BetaRule::Zero)
}

/// Nonlinear conjugate gradient ascent.
///
/// Restarts along the gradient every `restart_every` iterations and whenever
/// the conjugate direction is not an ascent direction.
pub fn conjugate_gradient_ascent<T: Real, F: Fn(&[T]) -> T>(
    f: F,
    theta0: &[T],
    opts: &AscentOptions<T>,
    beta: BetaRule,
) -> OptimResult<T> {
    ascend(&f, theta0, opts, beta)
}

fn ascend<T: Real, F: Fn(&[T]) -> T>(f: &F, theta0: &[T], opts: &AscentOptions<T>, rule: BetaRule) -> OptimResult<T> {
    let n = theta0.len();
    assert_eq!(opts.scale.len(), n, "one scale per parameter");
    let scale = &opts.scale;
    let evals = Cell::new(0usize);
    let to_theta = |u: &[T]| -> Vec<T> { u.iter().zip(scale).map(|(a, s)| *a * *s).collect() };
    let fu = |u: &[T]| -> T {
        evals.set(evals.get() + 1);
        let v = f(&to_theta(u));
        if v.as_f64().is_nan() {
            -T::infinity()
        } else {
            v
        }
    };
    let ones = vec![T::one(); n];
    let restart_every = opts.restart_every.unwrap_or(n).max(1);

    let mut u: Vec<T> = theta0.iter().zip(scale).map(|(a, s)| *a / *s).collect();
    let mut fval = fu(&u);
    let mut trace = vec![TracePoint {
        theta: theta0.to_vec(),
        f: fval,
    }];
    let mut g = central_difference(&fu, &u, &ones);
    let mut d = g.clone();
    let mut trust = opts.initial_step;
    let mut iterations = 0;
    let mut since_restart = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        if norm(&g) < opts.tol {
            converged = true;
            break;
        }
        let mut slope = dot(&g, &d);
        if !(slope > T::zero()) {
            d = g.clone();
            slope = dot(&g, &g);
            since_restart = 0;
        }
        let dn = norm(&d);
        let mut alpha = trust / dn;
        let mut accepted: Option<(T, Vec<T>, T)> = None;

        if opts.line_search == LineSearch::Parabolic {
            let trial = axpy(&u, alpha, &d);
            let ft = fu(&trial);
            let curv = (ft - fval - slope * alpha) / (alpha * alpha);
            if curv < T::zero() {
                let a_star = -slope / (T::lit(2.0) * curv);
                let cand = axpy(&u, a_star, &d);
                let fc = fu(&cand);
                if fc >= fval {
                    accepted = Some((a_star, cand, fc));
                }
            }
            if accepted.is_none() && ft >= fval + opts.armijo_c * alpha * slope {
                accepted = Some((alpha, trial, ft));
            }
        }
        while accepted.is_none() {
            if alpha * dn < opts.step_tol {
                break;
            }
            let trial = axpy(&u, alpha, &d);
            let ft = fu(&trial);
            if ft >= fval + opts.armijo_c * alpha * slope {
                accepted = Some((alpha, trial, ft));
            } else {
                alpha *= opts.shrink;
            }
        }
        let Some((alpha, u_new, f_new)) = accepted else {
            converged = true;
            break;
        };
        let step = alpha * dn;
        u = u_new;
        fval = f_new;
        iterations += 1;
        since_restart += 1;
        trace.push(TracePoint {
            theta: to_theta(&u),
            f: fval,
        });
        trust = step * T::lit(2.0);

        let g_new = central_difference(&fu, &u, &ones);
        let beta = match rule {
            BetaRule::Zero => T::zero(),
            BetaRule::PolakRibierePlus => {
                let gg = dot(&g, &g);
                if since_restart >= restart_every || !(gg > T::zero()) {
                    since_restart = 0;
                    T::zero()
                } else {
                    let diff: Vec<T> = g_new.iter().zip(&g).map(|(a, b)| *a - *b).collect();
                    (dot(&g_new, &diff) / gg).max(T::zero())
                }
            }
        };
        d = axpy(&g_new, beta, &d);
        g = g_new;
        if step < opts.step_tol {
            converged = true;
            break;
        }
    }
    if !converged && norm(&g) < opts.tol {
        converged = true;
    }

    OptimResult {
        theta_star: to_theta(&u),
        f_star: fval,
        iterations,
        evaluations: evals.get(),
        converged,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn bowl(t: &[f64]) -> f64 {
        -(t[0] * t[0] + t[1] * t[1])
    }

    #[test]
    fn gradient_ascent_climbs_bowl() {
        let r = gradient_ascent(bowl, &[1.0, 1.0], &AscentOptions::unscaled(2));
        assert!(r.converged);
        assert!(r.theta_star.iter().all(|v| v.abs() < 1e-6), "{:?}", r.theta_star);
    }

    #[test]
    fn start_at_maximum_takes_no_iterations() {
        let r = gradient_ascent(bowl, &[0.0, 0.0], &AscentOptions::unscaled(2));
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        let r = conjugate_gradient_ascent(bowl, &[0.0, 0.0], &AscentOptions::unscaled(2), BetaRule::PolakRibierePlus);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn trace_is_non_decreasing() {
        let f = |t: &[f64]| -(t[0] - 1.0).powi(4) - 3.0 * (t[1] + t[0]).powi(2) + (t[1] * 2.0).cos();
        for rule in [BetaRule::Zero, BetaRule::PolakRibierePlus] {
            let r = conjugate_gradient_ascent(f, &[-2.0, 3.0], &AscentOptions::unscaled(2), rule);
            for w in r.trace.windows(2) {
                assert!(w[1].f >= w[0].f);
            }
            assert_eq!(r.f_star, f(&r.theta_star));
        }
    }

    #[test]
    fn zero_beta_is_gradient_ascent() {
        let f = |t: &[f64]| -(t[0] - 1.0).powi(2) - 10.0 * (t[1] - t[0] * 0.5).powi(2) - 0.1 * t[2].powi(4);
        let opts = AscentOptions::new(vec![1.0, 0.5, 2.0]);
        let a = gradient_ascent(f, &[3.0, -1.0, 1.0], &opts);
        let b = conjugate_gradient_ascent(f, &[3.0, -1.0, 1.0], &opts, BetaRule::Zero);
        assert_eq!(a, b);
    }

    #[test]
    fn scaling_reports_unscaled_theta() {
        let f = |t: &[f64]| -((t[0] - 40.0) / 10.0).powi(2) - ((t[1] + 0.002) / 0.001).powi(2);
        let r = conjugate_gradient_ascent(f, &[0.0, 0.0], &AscentOptions::new(vec![10.0, 0.001]), BetaRule::PolakRibierePlus);
        assert!((r.theta_star[0] - 40.0).abs() < 1e-4);
        assert!((r.theta_star[1] + 0.002).abs() < 1e-8);
    }

    #[test]
    fn max_iter_reports_not_converged() {
        let f = |t: &[f64]| -(t[0] - 1000.0).powi(2) - 1e4 * (t[1] - t[0]).powi(2);
        let r = gradient_ascent(f, &[0.0, 0.0], &AscentOptions::unscaled(2).max_iter(3));
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    /// `f(x) = -0.5 (x-c)^T A (x-c)` with `A` symmetric positive definite.
    fn quadratic(n: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
        let c = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        (a, c)
    }

    #[test]
    fn cg_exact_on_quadratics_within_n_iterations() {
        for n in [2usize, 3, 8] {
            for seed in 0..5 {
                let (a, c) = quadratic(n, seed);
                let f = |t: &[f64]| {
                    let d = DVector::from_column_slice(t) - &c;
                    -0.5 * (d.transpose() * &a * &d)[(0, 0)]
                };
                let opts = AscentOptions::unscaled(n)
                    .line_search(LineSearch::Parabolic)
                    .tol(1e-6)
                    .restart_every_n(n);
                let r = conjugate_gradient_ascent(f, &vec![0.0; n], &opts, BetaRule::PolakRibierePlus);
                assert!(r.converged, "n={n} seed={seed}");
                assert!(r.iterations <= n, "n={n} seed={seed}: {} iterations", r.iterations);
                let err = (DVector::from_column_slice(&r.theta_star) - &c).norm();
                assert!(err < 1e-5, "n={n} seed={seed}: err {err}");
            }
        }
    }

    #[test]
    fn cg_quadratic_r3_with_armijo() {
        let (a, c) = quadratic(3, 42);
        let f = |t: &[f64]| {
            let d = DVector::from_column_slice(t) - &c;
            -0.5 * (d.transpose() * &a * &d)[(0, 0)]
        };
        let r = conjugate_gradient_ascent(f, &[0.0; 3], &AscentOptions::unscaled(3), BetaRule::PolakRibierePlus);
        assert!(r.converged);
        assert!((DVector::from_column_slice(&r.theta_star) - &c).norm() < 1e-5);
    }

    proptest! {
        #[test]
        fn deterministic(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let f = |t: &[f64]| -(t[0] - 1.0).powi(2) - (t[0] * t[1] - 2.0).powi(2) * 0.3;
            let opts = AscentOptions::unscaled(2);
            let a = conjugate_gradient_ascent(f, &[x, y], &opts, BetaRule::PolakRibierePlus);
            let b = conjugate_gradient_ascent(f, &[x, y], &opts, BetaRule::PolakRibierePlus);
            prop_assert_eq!(&a, &b);
            for w in a.trace.windows(2) {
                prop_assert!(w[1].f >= w[0].f);
            }
        }
    }
}
