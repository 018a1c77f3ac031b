//! Contrast maximization for event cameras.
//!
//! Events are warped by a parametric motion model onto a reference time, the
//! warped events are accumulated into an image, and the model parameters
//! are found by maximizing the variance of that image.

pub mod error;
pub mod events;
pub mod iwe;
pub mod optimize;
pub mod pipelines;
pub mod real;
pub mod synth;
pub mod warp;

pub use error::{Error, Result};
pub use real::Real;

pub type Event = events::Event<f64>;
pub type Event32 = events::Event<f32>;
pub type EventSlice = events::EventSlice<f64>;
pub type EventSlice32 = events::EventSlice<f32>;
pub type CameraIntrinsics = events::CameraIntrinsics<f64>;
pub type PoseTrajectory = events::PoseTrajectory<f64>;
pub type Iwe = iwe::Iwe<f64>;
pub type Iwe32 = iwe::Iwe<f32>;
