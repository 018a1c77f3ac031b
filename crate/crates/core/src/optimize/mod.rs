//! Maximizers of a scalar objective over a parameter vector.
//!
//! Objectives are plain closures `Fn(&[T]) -> T`. Callers map evaluation
//! failures to `-inf` so a failed trial point is simply never accepted.

mod ascent;
mod grid;

pub use ascent::{conjugate_gradient_ascent, gradient_ascent, AscentOptions, BetaRule, LineSearch};
pub use grid::{grid_search, Heatmap, SearchGrid, DEFAULT_GRID_BUDGET};

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;

/// One accepted iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint<T> {
    pub theta: Vec<T>,
    pub f: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimResult<T> {
    pub theta_star: Vec<T>,
    pub f_star: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint<T>>,
}

impl<T: Real> OptimResult<T> {
    /// Writes the trace as CSV: `iter, theta_0, .., theta_{n-1}, f`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.theta_star.len();
        let cols: Vec<String> = (0..n).map(|i| format!("theta_{i}")).collect();
        writeln!(w, "iter,{},f", cols.join(","))?;
        for (k, p) in self.trace.iter().enumerate() {
            let th: Vec<String> = p.theta.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{k},{},{}", th.join(","), p.f)?;
        }
        Ok(())
    }
}

/// Central-difference gradient with per-dimension steps `h`.
pub fn numeric_gradient<T: Real, F: Fn(&[T]) -> T>(f: F, theta: &[T], h: &[T]) -> Result<Vec<T>> {
    if h.len() != theta.len() || h.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::InvalidParameter(
            "gradient steps must be positive, one per dimension".into(),
        ));
    }
    Ok(central_difference(&f, theta, h))
}

pub(crate) fn central_difference<T: Real, F: Fn(&[T]) -> T + ?Sized>(f: &F, theta: &[T], h: &[T]) -> Vec<T> {
    let mut p = theta.to_vec();
    let two = T::lit(2.0);
    (0..theta.len())
        .map(|i| {
            p[i] = theta[i] + h[i];
            let fp = f(&p);
            p[i] = theta[i] - h[i];
            let fm = f(&p);
            p[i] = theta[i];
            (fp - fm) / (two * h[i])
        })
        .collect()
}

/// Golden-section maximization of `f` on `[a, b]`.
///
/// The endpoints are evaluated as well, so a monotone `f` yields the
/// corresponding endpoint. Returns `(x*, f(x*))`.
pub fn golden_section_max<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> Result<(T, T)> {
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("empty interval [{a}, {b}]")));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let (fa, fb) = (f(a), f(b));
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo >= tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = (lo + hi) / T::lit(2.0);
    let fm = f(mid);
    let mut best = (mid, fm);
    for cand in [(x1, f1), (x2, f2), (a, fa), (b, fb)] {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_is_exact_on_quadratics() {
        for h in [1e-3, 0.1, 2.0] {
            let g = numeric_gradient(|t: &[f64]| t[0] * t[0], &[3.0], &[h]).unwrap();
            assert!((g[0] - 6.0).abs() < 1e-9, "{h}: {}", g[0]);
        }
        let g = numeric_gradient(|_: &[f64]| 4.0, &[1.0, 2.0], &[0.1, 0.1]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(numeric_gradient(|_: &[f64]| 4.0, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, _) = golden_section_max(|x: f64| -(x - 2.0) * (x - 2.0), 0.0, 5.0, 1e-6).unwrap();
        assert!((x - 2.0).abs() < 1e-6);
    }

    #[test]
    fn golden_monotone_returns_endpoint() {
        assert_eq!(golden_section_max(|x: f64| x, 0.0, 5.0, 1e-6).unwrap().0, 5.0);
        assert_eq!(golden_section_max(|x: f64| -x, 1.0, 5.0, 1e-6).unwrap().0, 1.0);
        assert!(golden_section_max(|x: f64| x, 1.0, 1.0, 1e-6).is_err());
    }
}
