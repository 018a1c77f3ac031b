//! End-to-end estimators built from warps, the contrast objective and the
//! optimizers, plus the evaluation metrics used against ground truth.

mod depth;
mod flow;
mod homography;
mod rotation;

pub use depth::{
    adaptive_threshold, depth_for_patch, depth_vs_event_count, median_filter_3x3, select_pixels, semidense_depth, DepthConfig,
    DepthResult, DepthRun, SemiDenseConfig, SemiDenseDepthMap,
};
pub use flow::{compare_polarity_modes, estimate_flow_patch, FlowConfig, FlowEstimate, PolarityReport};
pub use homography::{estimate_homography, HomographyConfig, HomographyEstimate};
pub use rotation::{
    rms_angular_error, track_rotation, AngularVelocitySeries, BoxStats, ErrorReport, OmegaSample, RateTruth,
    RotationConfig,
};

use nalgebra::Point2;

use crate::error::Result;
use crate::events::{Event, EventSlice};
use crate::iwe::{accumulate, accumulate_par, contrast, AccumMode, GridSpec, Iwe, Splat};
use crate::real::Real;
use crate::warp::Warp;

/// Slices above this size are accumulated in parallel chunks of this many
/// events. Chunking is fixed, so results do not depend on thread count.
pub const PAR_CHUNK: usize = 8192;

pub(crate) fn accumulate_auto<T: Real, W: Warp<T> + ?Sized>(
    slice: &EventSlice<T>,
    warp: &W,
    grid: GridSpec,
    mode: AccumMode,
    splat: Splat<T>,
) -> Result<Iwe<T>> {
    if slice.len() > PAR_CHUNK {
        accumulate_par(slice, warp, grid, mode, splat, PAR_CHUNK)
    } else {
        accumulate(slice, warp, grid, mode, splat)
    }
}

/// Objective value with failures (invalid parameters) mapped to `-inf`.
pub(crate) fn score<T: Real, W: Warp<T> + ?Sized>(
    slice: &EventSlice<T>,
    warp: &W,
    grid: GridSpec,
    mode: AccumMode,
    splat: Splat<T>,
) -> T {
    match accumulate_auto(slice, warp, grid, mode, splat) {
        Ok(iwe) => contrast(&iwe).f,
        Err(_) => -T::infinity(),
    }
}

/// Divides the landing position of another warp by `factor`, so a grid
/// `factor` times coarser covers the same sensor area.
pub struct Downscaled<'a, T: Real, W: Warp<T> + ?Sized> {
    pub inner: &'a W,
    pub factor: T,
}

impl<T: Real, W: Warp<T> + ?Sized> Warp<T> for Downscaled<'_, T, W> {
    #[inline]
    fn warp(&self, index: usize, event: &Event<T>) -> Result<Option<Point2<T>>> {
        Ok(self
            .inner
            .warp(index, event)?
            .map(|p| Point2::new(p.x / self.factor, p.y / self.factor)))
    }
}
