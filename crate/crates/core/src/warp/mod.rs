//! Geometric warps that carry each event along a candidate point
//! trajectory to the reference time (or reference view).
//!
//! Every warp reports `Ok(None)` for an event that leaves the projective
//! domain (dehomogenization by a near-zero depth); such events are counted
//! as discarded by the accumulator rather than clamped.

mod depth;
mod flow;
mod homography;
mod rotation;
pub mod so3;

pub use depth::{warp_plane_depth, DepthParams, DepthTransfer, DepthWarp};
pub use flow::{warp_flow, FlowParams, FlowWarp};
pub use homography::{
    angles_from_normal, normal_from_angles, warp_homography, HomographyParams, HomographyWarp,
};
pub use rotation::{warp_rotation, RotationParams, RotationWarp};
pub use so3::{exp_so3, hat};

use nalgebra::Point2;

use crate::error::Result;
use crate::events::Event;
use crate::real::Real;

/// A motion/scene model instantiated at one parameter value.
pub trait Warp<T: Real>: Sync {
    /// Landing position (pixels) of event number `index`, or `None` when the
    /// event leaves the view. An error means the parameter itself is invalid.
    fn warp(&self, index: usize, event: &Event<T>) -> Result<Option<Point2<T>>>;
}

/// The identity warp: every event stays where it fired.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityWarp;

impl<T: Real> Warp<T> for IdentityWarp {
    #[inline]
    fn warp(&self, _: usize, e: &Event<T>) -> Result<Option<Point2<T>>> {
        Ok(Some(e.position()))
    }
}

/// Flat parameter vectors, as seen by the optimizers.
pub trait ParamVector<T: Real>: Sized + Clone {
    const DIM: usize;
    fn to_vec(&self) -> Vec<T>;
    /// Panics if `v.len() != DIM`.
    fn from_slice(v: &[T]) -> Self;
}
