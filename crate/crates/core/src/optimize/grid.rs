use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::real::Real;

use super::{OptimResult, TracePoint};

/// Evaluation cap used when callers do not pass one.
pub const DEFAULT_GRID_BUDGET: usize = 1_000_000;

/// Regular lattice: `steps[d]` samples from `lower[d]` to `upper[d]`
/// inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    steps: Vec<usize>,
}

impl<T: Real> SearchGrid<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>, steps: Vec<usize>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() || lower.len() != steps.len() {
            return Err(Error::InvalidParameter("grid dimensions do not agree".into()));
        }
        for d in 0..lower.len() {
            if !(lower[d] < upper[d]) {
                return Err(Error::InvalidParameter(format!(
                    "grid bound {d}: lower {} is not below upper {}",
                    lower[d], upper[d]
                )));
            }
            if steps[d] < 2 {
                return Err(Error::InvalidParameter(format!("grid dimension {d} needs at least 2 steps")));
            }
        }
        Ok(Self { lower, upper, steps })
    }

    /// Symmetric square grid `[-r, r]^dim` with `n` samples per side.
    pub fn symmetric(dim: usize, r: T, n: usize) -> Result<Self> {
        Self::new(vec![-r; dim], vec![r; dim], vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.steps.len()
    }

    pub fn len(&self) -> usize {
        self.steps.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    /// Spacing between samples along dimension `d`.
    pub fn cell(&self, d: usize) -> T {
        (self.upper[d] - self.lower[d]) / T::from_usize_lossy(self.steps[d] - 1)
    }

    /// Lattice coordinates of flat index `k` (last dimension fastest).
    pub fn unravel(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = k % self.steps[d];
            k /= self.steps[d];
        }
        idx
    }

    pub fn point(&self, k: usize) -> Vec<T> {
        self.unravel(k)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.lower[d] + self.cell(d) * T::from_usize_lossy(i))
            .collect()
    }
}

/// Objective values over a [`SearchGrid`], in flat lattice order.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap<T> {
    pub grid: SearchGrid<T>,
    pub values: Vec<T>,
}

impl<T: Real> Heatmap<T> {
    pub fn min_max(&self) -> (T, T) {
        self.values
            .iter()
            .filter(|v| v.is_finite_real())
            .fold((T::infinity(), -T::infinity()), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }

    /// Number of samples with `f >= min + (max - min) / 2`.
    pub fn half_max_cells(&self) -> usize {
        let (lo, hi) = self.min_max();
        let level = lo + (hi - lo) / T::lit(2.0);
        self.values.iter().filter(|v| **v >= level).count()
    }

    /// Area in parameter units of the half-maximum superlevel set.
    pub fn half_max_area(&self) -> T {
        let cell: T = (0..self.grid.dim()).map(|d| self.grid.cell(d)).fold(T::one(), |a, b| a * b);
        cell * T::from_usize_lossy(self.half_max_cells())
    }

    /// CSV with one row per sample: `theta_0, .., theta_{n-1}, f`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let cols: Vec<String> = (0..self.grid.dim()).map(|i| format!("theta_{i}")).collect();
        writeln!(w, "{},f", cols.join(","))?;
        for (k, f) in self.values.iter().enumerate() {
            let th: Vec<String> = self.grid.point(k).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{},{}", th.join(","), f)?;
        }
        Ok(())
    }

    /// 2-D heatmaps as an image: `theta_0` along x, `theta_1` along y
    /// (increasing downward), values row-major.
    pub fn image_2d(&self) -> Option<(usize, usize, Vec<f32>)> {
        if self.grid.dim() != 2 {
            return None;
        }
        let (nx, ny) = (self.grid.steps[0], self.grid.steps[1]);
        let mut out = vec![0f32; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                out[j * nx + i] = self.values[i * ny + j].as_f64() as f32;
            }
        }
        Some((nx, ny, out))
    }
}

/// Exhaustive search over every lattice point.
///
/// Points are evaluated in parallel and reduced in lattice order; the lowest
/// flat index wins ties. Fails before evaluating anything when the lattice
/// has more than `budget` points.
pub fn grid_search<T: Real, F: Fn(&[T]) -> T + Sync>(
    f: F,
    grid: &SearchGrid<T>,
    budget: usize,
) -> Result<(OptimResult<T>, Heatmap<T>)> {
    let n = grid.len();
    if n > budget {
        return Err(Error::BudgetExceeded { needed: n, budget });
    }
    let values: Vec<T> = (0..n).into_par_iter().map(|k| f(&grid.point(k))).collect();
    let mut best = 0;
    for (k, v) in values.iter().enumerate() {
        // NaN never wins
        if *v > values[best] || (values[best].as_f64().is_nan() && !v.as_f64().is_nan()) {
            best = k;
        }
    }
    let theta = grid.point(best);
    let result = OptimResult {
        theta_star: theta.clone(),
        f_star: values[best],
        iterations: 0,
        evaluations: n,
        converged: true,
        trace: vec![TracePoint { theta, f: values[best] }],
    };
    Ok((
        result,
        Heatmap {
            grid: grid.clone(),
            values,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_lattice_argmax() {
        let g = SearchGrid::new(vec![-2.0, -2.0], vec![4.0, 4.0], vec![7, 7]).unwrap();
        let (r, h) = grid_search(|t: &[f64]| -((t[0] - 1.0).powi(2) + (t[1] - 2.0).powi(2)), &g, 100).unwrap();
        assert_eq!(r.theta_star, vec![1.0, 2.0]);
        assert_eq!(h.values.len(), 49);
        assert_eq!(r.evaluations, 49);
    }

    #[test]
    fn constant_picks_first_point() {
        let g = SearchGrid::symmetric(2, 1.0, 5).unwrap();
        let (r, _) = grid_search(|_: &[f64]| 3.0, &g, 100).unwrap();
        assert_eq!(r.theta_star, vec![-1.0, -1.0]);
    }

    #[test]
    fn budget_checked_before_evaluating() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let calls = AtomicUsize::new(0);
        let g = SearchGrid::symmetric(2, 1.0, 11).unwrap();
        let err = grid_search(
            |_: &[f64]| {
                calls.fetch_add(1, Ordering::Relaxed);
                0.0
            },
            &g,
            120,
        )
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { needed: 121, budget: 120 }));
        assert_eq!(calls.load(Ordering::Relaxed), 0);
    }

    #[test]
    fn heatmap_matches_pointwise_evaluation() {
        let g = SearchGrid::new(vec![-1.0, 0.0, 2.0], vec![1.0, 3.0, 5.0], vec![3, 4, 5]).unwrap();
        let f = |t: &[f64]| (t[0] * 1.3 + t[1]).sin() * t[2];
        let (_, h) = grid_search(f, &g, 1000).unwrap();
        for k in 0..g.len() {
            assert_eq!(h.values[k], f(&g.point(k)));
        }
        // lexicographic order: last dimension fastest
        assert_eq!(g.point(1), vec![-1.0, 0.0, 2.75]);
        assert_eq!(g.point(5), vec![-1.0, 1.0, 2.0]);
    }

    #[test]
    fn invalid_grids() {
        assert!(SearchGrid::new(vec![1.0], vec![1.0], vec![3]).is_err());
        assert!(SearchGrid::new(vec![0.0], vec![1.0], vec![1]).is_err());
        assert!(SearchGrid::<f64>::new(vec![0.0], vec![1.0, 2.0], vec![3]).is_err());
    }

    #[test]
    fn half_max_counts() {
        let g = SearchGrid::new(vec![0.0], vec![4.0], vec![5]).unwrap();
        let (_, h) = grid_search(|t: &[f64]| -(t[0] - 2.0).abs(), &g, 10).unwrap();
        // values -2 -1 0 -1 -2, level -1
        assert_eq!(h.half_max_cells(), 3);
        assert_eq!(h.half_max_area(), 3.0);
    }
}
