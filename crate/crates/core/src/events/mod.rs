//! Events, camera geometry, pose trajectories and dataset ingestion.

mod camera;
mod io;
mod pose;
mod slicing;

pub use camera::CameraIntrinsics;
pub use io::{
    load_calibration, load_events, load_trajectory, write_calibration, write_events,
    write_trajectory, LoadStats,
};
pub use pose::{Pose, PoseConvention, PoseTrajectory};
pub use slicing::{slice_events, RefTime, Windowing};

use nalgebra::Point2;

use crate::real::Real;

/// Sign of a brightness change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    /// `+1` or `-1`.
    #[inline]
    pub fn sign<T: Real>(self) -> T {
        match self {
            Polarity::Positive => T::one(),
            Polarity::Negative => -T::one(),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    pub fn from_sign<T: Real>(s: T) -> Self {
        if s < T::zero() {
            Polarity::Negative
        } else {
            Polarity::Positive
        }
    }
}

/// One brightness-change record: pixel position, timestamp in seconds and polarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<T> {
    pub t: T,
    pub x: T,
    pub y: T,
    pub p: Polarity,
}

impl<T: Real> Event<T> {
    pub fn new(t: T, x: T, y: T, p: Polarity) -> Self {
        Self { t, x, y, p }
    }

    #[inline]
    pub fn position(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }
}

/// A time-ordered group of events together with the reference time the
/// warps transport them to.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSlice<T> {
    events: Vec<Event<T>>,
    t_ref: T,
}

impl<T: Real> EventSlice<T> {
    /// Builds a slice, stably sorting by timestamp. `t_ref` defaults to the
    /// first event time (zero for an empty slice).
    pub fn new(mut events: Vec<Event<T>>) -> Self {
        events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal));
        let t_ref = events.first().map(|e| e.t).unwrap_or_else(T::zero);
        Self { events, t_ref }
    }

    pub fn empty() -> Self {
        Self {
            events: Vec::new(),
            t_ref: T::zero(),
        }
    }

    pub fn with_t_ref(mut self, t_ref: T) -> Self {
        self.t_ref = t_ref;
        self
    }

    pub fn set_t_ref(&mut self, t_ref: T) {
        self.t_ref = t_ref;
    }

    #[inline]
    pub fn t_ref(&self) -> T {
        self.t_ref
    }

    #[inline]
    pub fn events(&self) -> &[Event<T>] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event<T>> {
        self.events
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.events.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn first_time(&self) -> Option<T> {
        self.events.first().map(|e| e.t)
    }

    pub fn last_time(&self) -> Option<T> {
        self.events.last().map(|e| e.t)
    }

    /// Time span between first and last event.
    pub fn duration(&self) -> T {
        match (self.first_time(), self.last_time()) {
            (Some(a), Some(b)) => b - a,
            _ => T::zero(),
        }
    }

    pub fn mid_time(&self) -> T {
        match (self.first_time(), self.last_time()) {
            (Some(a), Some(b)) => (a + b) * T::lit(0.5),
            _ => self.t_ref,
        }
    }

    /// First `n` events (clamped), keeping `t_ref`.
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.events.len());
        Self {
            events: self.events[..n].to_vec(),
            t_ref: self.t_ref,
        }
    }

    /// Every polarity flipped.
    pub fn polarity_flipped(&self) -> Self {
        Self {
            events: self
                .events
                .iter()
                .map(|e| Event { p: e.p.flipped(), ..*e })
                .collect(),
            t_ref: self.t_ref,
        }
    }

    /// Mirrors timestamps about the window midpoint (`t -> t0 + t1 - t`),
    /// keeping the slice sorted. `t_ref` is mirrored the same way.
    pub fn time_reversed(&self) -> Self {
        let (Some(a), Some(b)) = (self.first_time(), self.last_time()) else {
            return self.clone();
        };
        let mut events: Vec<_> = self
            .events
            .iter()
            .rev()
            .map(|e| Event { t: a + b - e.t, ..*e })
            .collect();
        events.sort_by(|u, v| u.t.partial_cmp(&v.t).unwrap_or(std::cmp::Ordering::Equal));
        Self {
            events,
            t_ref: a + b - self.t_ref,
        }
    }

    /// Maps every event through the lens undistortion of `camera`, so the
    /// warps can treat pixel coordinates as ideal pinhole projections.
    pub fn undistorted(&self, camera: &CameraIntrinsics<T>) -> Self {
        if !camera.has_distortion() {
            return self.clone();
        }
        let events = self
            .events
            .iter()
            .map(|e| {
                let p = camera.undistort_pixel(&e.position());
                Event { x: p.x, y: p.y, ..*e }
            })
            .collect();
        Self {
            events,
            t_ref: self.t_ref,
        }
    }
}
