use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::{CameraIntrinsics, EventSlice, Pose, PoseTrajectory};
use crate::iwe::{patch_contrast_map, AccumMode, GridSpec, Splat};
use crate::optimize::golden_section_max;
use crate::real::Real;
use crate::warp::DepthTransfer;

use super::{accumulate_auto, score};

/// Plane-sweep settings for a single patch.
#[derive(Debug, Clone)]
pub struct DepthConfig<T: Real> {
    pub z_min: T,
    pub z_max: T,
    /// Log-uniform samples between `z_min` and `z_max`.
    pub z_steps: usize,
    /// Odd side length of the reference-view patch.
    pub patch: usize,
    pub mode: AccumMode,
    pub splat: Splat<T>,
    /// Relative width at which golden-section refinement stops.
    pub refine_tol: T,
}

impl<T: Real> Default for DepthConfig<T> {
    fn default() -> Self {
        Self {
            z_min: T::lit(0.45),
            z_max: T::lit(2.4),
            z_steps: 50,
            patch: 31,
            mode: AccumMode::Count,
            splat: Splat::Bilinear,
            refine_tol: T::lit(1e-5),
        }
    }
}

impl<T: Real> DepthConfig<T> {
    pub fn z_samples(&self) -> Result<Vec<T>> {
        log_uniform(self.z_min, self.z_max, self.z_steps)
    }
}

/// `n` samples from `lo` to `hi` evenly spaced in `ln z`.
pub(crate) fn log_uniform<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    if !(lo > T::zero() && hi > lo) || n < 2 {
        return Err(Error::InvalidParameter(format!(
            "depth range [{lo}, {hi}] with {n} samples is not a positive increasing sweep"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let last = T::from_usize_lossy(n - 1);
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * T::from_usize_lossy(i) / last).exp()
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthResult<T> {
    /// `(Z, f)` per sampled depth.
    pub curve: Vec<(T, T)>,
    pub z_star: T,
    pub f_star: T,
    pub z_refined: T,
    pub f_refined: T,
}

impl<T: Real> DepthResult<T> {
    /// Local maxima of the sampled curve (ends included) that rise above
    /// the curve minimum by at least `prominence` times the global peak's
    /// rise. A single-peaked curve returns 1 for any `prominence` in (0, 1].
    pub fn peak_count(&self, prominence: T) -> usize {
        let f: Vec<T> = self.curve.iter().map(|p| p.1).collect();
        let n = f.len();
        let lo = f.iter().copied().fold(T::infinity(), |a, b| a.min(b));
        let hi = f.iter().copied().fold(-T::infinity(), |a, b| a.max(b));
        let level = lo + (hi - lo) * prominence;
        (0..n)
            .filter(|&i| {
                let left = i == 0 || f[i] > f[i - 1];
                let right = i + 1 == n || f[i] > f[i + 1];
                left && right && f[i] >= level
            })
            .count()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "z,f")?;
        for (z, f) in &self.curve {
            writeln!(w, "{z},{f}")?;
        }
        Ok(())
    }
}

/// Contrast of the reference-view patch around `center` as a function of
/// the fronto-parallel depth, refined by golden section between the
/// neighbours of the best sample.
pub fn depth_for_patch<T: Real>(
    slice: &EventSlice<T>,
    traj: &PoseTrajectory<T>,
    reference: &Pose<T>,
    camera: &CameraIntrinsics<T>,
    center: (i64, i64),
    cfg: &DepthConfig<T>,
) -> Result<DepthResult<T>> {
    if cfg.patch % 2 == 0 || cfg.patch == 0 {
        return Err(Error::InvalidParameter("patch side must be odd".into()));
    }
    let zs = cfg.z_samples()?;
    let transfer = DepthTransfer::new(slice, traj, reference, camera)?;
    let grid = GridSpec::patch(center.0, center.1, cfg.patch);
    let f = |z: T| score(slice, &transfer.at_depth(z), grid, cfg.mode, cfg.splat);
    let curve: Vec<(T, T)> = zs.par_iter().map(|&z| (z, f(z))).collect();
    let mut k = 0;
    for (i, p) in curve.iter().enumerate() {
        if p.1 > curve[k].1 {
            k = i;
        }
    }
    let (z_star, f_star) = curve[k];
    let lo = zs[k.saturating_sub(1)].ln();
    let hi = zs[(k + 1).min(zs.len() - 1)].ln();
    let (u, fu) = golden_section_max(|u: T| f(u.exp()), lo, hi, cfg.refine_tol)?;
    let (z_refined, f_refined) = if fu >= f_star { (u.exp(), fu) } else { (z_star, f_star) };
    Ok(DepthResult {
        curve,
        z_star,
        f_star,
        z_refined,
        f_refined,
    })
}

/// Semi-dense map settings.
#[derive(Debug, Clone)]
pub struct SemiDenseConfig<T: Real> {
    pub z_grid: Vec<T>,
    /// Side of the local-mean window of the adaptive threshold.
    pub k: usize,
    /// Offset above the local mean a pixel's contrast must exceed.
    pub c: T,
    /// A pixel must also exceed this multiple of the mean of the whole
    /// contrast map. Rejects the noise floor in event-free regions, where
    /// the local mean is near zero. Zero disables it.
    pub global_floor: T,
    pub median: bool,
    pub mode: AccumMode,
    pub splat: Splat<T>,
}

impl<T: Real> Default for SemiDenseConfig<T> {
    fn default() -> Self {
        Self {
            z_grid: log_uniform(T::lit(0.45), T::lit(2.4), 50).expect("valid default sweep"),
            k: 15,
            c: T::zero(),
            global_floor: T::one(),
            median: true,
            mode: AccumMode::Count,
            splat: Splat::Bilinear,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiDenseDepthMap<T> {
    pub width: usize,
    pub height: usize,
    /// Metres; NaN where not selected.
    pub depth: Vec<T>,
    /// Maximum over depth of the 3x3 weighted patch contrast.
    pub contrast: Vec<T>,
    pub mask: Vec<bool>,
}

impl<T: Real> SemiDenseDepthMap<T> {
    pub fn selected(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn depth_f32(&self) -> Vec<f32> {
        self.depth.iter().map(|v| v.as_f64() as f32).collect()
    }
}

/// `v > mean_kxk(v) + c`, with the mean taken over the part of the window
/// inside the image.
pub fn adaptive_threshold<T: Real>(values: &[T], width: usize, height: usize, k: usize, c: T) -> Vec<bool> {
    let (w, h) = (width, height);
    let mut integral = vec![T::zero(); (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = T::zero();
        for x in 0..w {
            row += values[y * w + x];
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }
    let r = k / 2;
    let mut out = vec![false; w * h];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let sum = integral[y1 * (w + 1) + x1] - integral[y0 * (w + 1) + x1] - integral[y1 * (w + 1) + x0]
                + integral[y0 * (w + 1) + x0];
            let mean = sum / T::from_usize_lossy((x1 - x0) * (y1 - y0));
            out[y * w + x] = values[y * w + x] > mean + c;
        }
    }
    out
}

/// Semi-dense selection on a contrast map: [`adaptive_threshold`] and the
/// global floor of `cfg`.
pub fn select_pixels<T: Real>(contrast: &[T], width: usize, height: usize, cfg: &SemiDenseConfig<T>) -> Vec<bool> {
    let mut mask = adaptive_threshold(contrast, width, height, cfg.k, cfg.c);
    if cfg.global_floor > T::zero() {
        let mean = contrast.iter().copied().sum::<T>() / T::from_usize_lossy(contrast.len().max(1));
        let floor = mean * cfg.global_floor;
        for (m, v) in mask.iter_mut().zip(contrast) {
            *m = *m && *v > floor;
        }
    }
    mask
}

/// Median of the selected neighbours in each 3x3 window; unselected pixels
/// stay NaN.
pub fn median_filter_3x3<T: Real>(depth: &[T], mask: &[bool], width: usize, height: usize) -> Vec<T> {
    let mut out = vec![T::nan(); depth.len()];
    let mut buf: Vec<T> = Vec::with_capacity(9);
    for y in 0..height {
        for x in 0..width {
            if !mask[y * width + x] {
                continue;
            }
            buf.clear();
            for yy in y.saturating_sub(1)..(y + 2).min(height) {
                for xx in x.saturating_sub(1)..(x + 2).min(width) {
                    let i = yy * width + xx;
                    if mask[i] {
                        buf.push(depth[i]);
                    }
                }
            }
            buf.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let m = buf.len();
            out[y * width + x] = if m % 2 == 1 {
                buf[m / 2]
            } else {
                (buf[m / 2 - 1] + buf[m / 2]) / T::lit(2.0)
            };
        }
    }
    out
}

/// Per-pixel best depth over `z_grid` from the 3x3 weighted patch
/// contrast, kept where the max-contrast map passes the adaptive threshold.
pub fn semidense_depth<T: Real>(
    slice: &EventSlice<T>,
    traj: &PoseTrajectory<T>,
    reference: &Pose<T>,
    camera: &CameraIntrinsics<T>,
    cfg: &SemiDenseConfig<T>,
) -> Result<SemiDenseDepthMap<T>> {
    if cfg.z_grid.is_empty() || cfg.z_grid.iter().any(|z| !(*z > T::zero())) {
        return Err(Error::InvalidParameter("depth grid must hold positive depths".into()));
    }
    let (w, h) = (camera.width, camera.height);
    let grid = GridSpec::new(w, h);
    let transfer = DepthTransfer::new(slice, traj, reference, camera)?;
    let maps = cfg
        .z_grid
        .par_iter()
        .map(|&z| {
            let iwe = accumulate_auto(slice, &transfer.at_depth(z), grid, cfg.mode, cfg.splat)?;
            Ok(patch_contrast_map(&iwe))
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    let mut best = vec![T::zero(); w * h];
    let mut arg = vec![0usize; w * h];
    for (zi, m) in maps.iter().enumerate() {
        for (i, v) in m.iter().enumerate() {
            if *v > best[i] {
                best[i] = *v;
                arg[i] = zi;
            }
        }
    }
    let mask = select_pixels(&best, w, h, cfg);
    let raw: Vec<T> = (0..w * h)
        .map(|i| if mask[i] { cfg.z_grid[arg[i]] } else { T::nan() })
        .collect();
    let depth = if cfg.median {
        median_filter_3x3(&raw, &mask, w, h)
    } else {
        raw
    };
    Ok(SemiDenseDepthMap {
        width: w,
        height: h,
        depth,
        contrast: best,
        mask,
    })
}

/// One semi-dense run on a prefix of the events.
#[derive(Debug, Clone)]
pub struct DepthRun<T> {
    pub requested: usize,
    pub n_events: usize,
    pub selected: usize,
    /// RMS depth error (m) over selected pixels with known truth.
    pub rms: Option<T>,
    pub map: SemiDenseDepthMap<T>,
}

/// [`semidense_depth`] on the first `n` events for each `n` in `counts`.
/// Counts beyond the slice are clamped to its length.
pub fn depth_vs_event_count<T: Real>(
    slice: &EventSlice<T>,
    traj: &PoseTrajectory<T>,
    reference: &Pose<T>,
    camera: &CameraIntrinsics<T>,
    counts: &[usize],
    cfg: &SemiDenseConfig<T>,
    truth: Option<&(dyn Fn(usize, usize) -> Option<T> + Sync)>,
) -> Result<Vec<DepthRun<T>>> {
    counts
        .iter()
        .map(|&requested| {
            if requested > slice.len() {
                log::warn!("requested {requested} events, slice has {}; using all", slice.len());
            }
            let prefix = slice.prefix(requested);
            let map = semidense_depth(&prefix, traj, reference, camera, cfg)?;
            let rms = truth.and_then(|gt| {
                let mut n = 0usize;
                let mut acc = T::zero();
                for y in 0..map.height {
                    for x in 0..map.width {
                        let d = map.depth[y * map.width + x];
                        if let (true, Some(z)) = (d.is_finite_real(), gt(x, y)) {
                            acc += (d - z) * (d - z);
                            n += 1;
                        }
                    }
                }
                (n > 0).then(|| (acc / T::from_usize_lossy(n)).sqrt())
            });
            Ok(DepthRun {
                requested,
                n_events: prefix.len(),
                selected: map.selected(),
                rms,
                map,
            })
        })
        .collect()
}
