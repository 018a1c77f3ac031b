//! Image of warped events and its contrast.

mod contrast;
pub mod export;
mod histogram;
mod kernel;

pub use contrast::{
    contrast, patch_contrast_map, patch_weights, variance, weighted_patch_contrast, ContrastValue,
};
pub use histogram::{histogram, Histogram};
pub use kernel::GaussianKernel;

use nalgebra::Point2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::events::{Event, EventSlice};
use crate::real::Real;
use crate::warp::Warp;

/// What each warped event deposits: `1` (count) or its polarity `+-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccumMode {
    #[default]
    Count,
    Polarity,
}

impl AccumMode {
    #[inline]
    pub fn weight<T: Real>(self, e: &Event<T>) -> T {
        match self {
            AccumMode::Count => T::one(),
            AccumMode::Polarity => e.p.sign(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            AccumMode::Count => "count",
            AccumMode::Polarity => "polarity",
        }
    }
}

/// How a warped event is spread over neighbouring pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Splat<T> {
    /// All weight to the nearest pixel centre.
    Nearest,
    /// Bilinear weights over the four surrounding pixel centres.
    Bilinear,
    /// Tapered Gaussian over the pixel centres within the kernel radius,
    /// normalized per event.
    Gaussian(GaussianKernel<T>),
}

impl<T: Real> Default for Splat<T> {
    fn default() -> Self {
        Splat::Bilinear
    }
}

impl<T: Real> Splat<T> {
    /// Gaussian splat with `eps` px and the default `3 eps` radius.
    pub fn gaussian(eps: T) -> Self {
        Splat::Gaussian(GaussianKernel::new(eps))
    }
}

/// A `width x height` pixel grid whose pixel `(0, 0)` sits at sensor position
/// `origin`. Pixel centres are at integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub origin: (i64, i64),
}

impl GridSpec {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            origin: (0, 0),
        }
    }

    pub fn with_origin(mut self, x0: i64, y0: i64) -> Self {
        self.origin = (x0, y0);
        self
    }

    /// Square patch of odd side `size` centred on sensor pixel `(cx, cy)`.
    pub fn patch(cx: i64, cy: i64, size: usize) -> Self {
        let half = (size / 2) as i64;
        Self::new(size, size).with_origin(cx - half, cy - half)
    }

    /// Bounding box of the event positions grown by `margin` pixels.
    pub fn bounding<T: Real>(events: &[Event<T>], margin: usize) -> Self {
        if events.is_empty() {
            return Self::new(1, 1);
        }
        let (mut x0, mut y0, mut x1, mut y1) = (i64::MAX, i64::MAX, i64::MIN, i64::MIN);
        for e in events {
            let x = e.x.floor().to_i64().unwrap_or(0);
            let y = e.y.floor().to_i64().unwrap_or(0);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x + 1);
            y1 = y1.max(y + 1);
        }
        let m = margin as i64;
        Self::new((x1 - x0 + 1 + 2 * m) as usize, (y1 - y0 + 1 + 2 * m) as usize)
            .with_origin(x0 - m, y0 - m)
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
}

/// `H(x) = sum_k b_k delta(x - x'_k)` on a fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Iwe<T> {
    grid: GridSpec,
    values: Vec<T>,
    pub n_discarded: usize,
    /// Deposit weight that fell outside the grid (whole discarded events and
    /// the clipped parts of border splats).
    pub discarded_mass: T,
    pub mode: AccumMode,
    pub splat: Splat<T>,
}

impl<T: Real> Iwe<T> {
    pub fn zeros(grid: GridSpec, mode: AccumMode, splat: Splat<T>) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.pixels()],
            n_discarded: 0,
            discarded_mass: T::zero(),
            mode,
            splat,
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<T>, mode: AccumMode, splat: Splat<T>) -> Self {
        assert_eq!(values.len(), grid.pixels(), "value count does not match grid");
        Self {
            grid,
            values,
            n_discarded: 0,
            discarded_mass: T::zero(),
            mode,
            splat,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Value at grid pixel `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[j * self.grid.width + i]
    }

    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(-T::infinity(), |a, b| a.max(b))
    }

    /// Adds another image on the same grid.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(self.grid, other.grid);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += *b;
        }
        self.n_discarded += other.n_discarded;
        self.discarded_mass += other.discarded_mass;
    }

    #[inline]
    fn add(&mut self, ix: i64, iy: i64, w: T) {
        let (gx, gy) = (ix - self.grid.origin.0, iy - self.grid.origin.1);
        if gx >= 0 && gy >= 0 && (gx as usize) < self.grid.width && (gy as usize) < self.grid.height {
            self.values[gy as usize * self.grid.width + gx as usize] += w;
        } else {
            self.discarded_mass += w;
        }
    }

    #[inline]
    fn nearest_inside(&self, p: &Point2<T>) -> Option<(i64, i64)> {
        let ix = p.x.round().to_i64()?;
        let iy = p.y.round().to_i64()?;
        let (gx, gy) = (ix - self.grid.origin.0, iy - self.grid.origin.1);
        (gx >= 0 && gy >= 0 && (gx as usize) < self.grid.width && (gy as usize) < self.grid.height)
            .then_some((ix, iy))
    }

    /// Deposits `b` at sensor position `p`, or counts it as discarded when
    /// its nearest pixel lies off the grid.
    #[inline]
    pub fn deposit(&mut self, p: &Point2<T>, b: T) {
        let Some((ix, iy)) = self.nearest_inside(p) else {
            self.n_discarded += 1;
            self.discarded_mass += b;
            return;
        };
        match self.splat {
            Splat::Nearest => self.add(ix, iy, b),
            Splat::Bilinear => {
                let fx = p.x.floor();
                let fy = p.y.floor();
                let (ax, ay) = (p.x - fx, p.y - fy);
                let x0 = fx.to_i64().unwrap_or(0);
                let y0 = fy.to_i64().unwrap_or(0);
                let one = T::one();
                self.add(x0, y0, b * (one - ax) * (one - ay));
                self.add(x0 + 1, y0, b * ax * (one - ay));
                self.add(x0, y0 + 1, b * (one - ax) * ay);
                self.add(x0 + 1, y0 + 1, b * ax * ay);
            }
            Splat::Gaussian(kernel) => {
                let hw = kernel.half_width();
                let mut cells = [(0i64, 0i64, T::zero()); 121];
                let mut n = 0;
                let mut total = T::zero();
                let cap = cells.len();
                let mut spill = Vec::new();
                for dy in -hw..=hw {
                    for dx in -hw..=hw {
                        let (cx, cy) = (ix + dx, iy + dy);
                        let rx = T::lit(cx as f64) - p.x;
                        let ry = T::lit(cy as f64) - p.y;
                        let w = kernel.tapered(rx * rx + ry * ry);
                        if w > T::zero() {
                            total += w;
                            if n < cap {
                                cells[n] = (cx, cy, w);
                                n += 1;
                            } else {
                                spill.push((cx, cy, w));
                            }
                        }
                    }
                }
                if total > T::zero() {
                    for &(cx, cy, w) in cells[..n].iter().chain(spill.iter()) {
                        self.add(cx, cy, b * w / total);
                    }
                } else {
                    self.add(ix, iy, b);
                }
            }
        }
    }
}

fn accumulate_into<T: Real, W: Warp<T> + ?Sized>(
    iwe: &mut Iwe<T>,
    events: &[Event<T>],
    first_index: usize,
    warp: &W,
) -> Result<()> {
    for (k, e) in events.iter().enumerate() {
        let b = iwe.mode.weight(e);
        match warp.warp(first_index + k, e)? {
            Some(p) => iwe.deposit(&p, b),
            None => {
                iwe.n_discarded += 1;
                iwe.discarded_mass += b;
            }
        }
    }
    Ok(())
}

/// Warps every event of `slice` and accumulates the image of warped events.
pub fn accumulate<T: Real, W: Warp<T> + ?Sized>(
    slice: &EventSlice<T>,
    warp: &W,
    grid: GridSpec,
    mode: AccumMode,
    splat: Splat<T>,
) -> Result<Iwe<T>> {
    let mut iwe = Iwe::zeros(grid, mode, splat);
    accumulate_into(&mut iwe, slice.events(), 0, warp)?;
    Ok(iwe)
}

/// Data-parallel [`accumulate`]: fixed-size event chunks accumulate into
/// private grids that are summed in chunk order, so the result depends on
/// `chunk` but not on the thread count.
pub fn accumulate_par<T: Real, W: Warp<T> + ?Sized>(
    slice: &EventSlice<T>,
    warp: &W,
    grid: GridSpec,
    mode: AccumMode,
    splat: Splat<T>,
    chunk: usize,
) -> Result<Iwe<T>> {
    let chunk = chunk.max(1);
    let parts = slice
        .events()
        .par_chunks(chunk)
        .enumerate()
        .map(|(c, events)| {
            let mut part = Iwe::zeros(grid, mode, splat);
            accumulate_into(&mut part, events, c * chunk, warp)?;
            Ok(part)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut iwe = Iwe::zeros(grid, mode, splat);
    for p in &parts {
        iwe.merge(p);
    }
    Ok(iwe)
}

/// Contrast of the image of warped events: `accumulate` followed by
/// [`contrast`].
pub fn objective<T: Real, W: Warp<T> + ?Sized>(
    slice: &EventSlice<T>,
    warp: &W,
    grid: GridSpec,
    mode: AccumMode,
    splat: Splat<T>,
) -> Result<T> {
    Ok(contrast(&accumulate(slice, warp, grid, mode, splat)?).f)
}
