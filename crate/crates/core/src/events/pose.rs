use nalgebra::{Matrix3, Point3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Which frame change a stored pose describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoseConvention {
    /// `X_world = R * X_cam + t`; `t` is the camera centre in the world.
    CameraToWorld,
}

/// A timestamped rigid-body pose, stored camera-to-world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real> {
    pub t: T,
    pub rotation: UnitQuaternion<T>,
    pub translation: Vector3<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(t: T, rotation: UnitQuaternion<T>, translation: Vector3<T>) -> Self {
        Self {
            t,
            rotation,
            translation,
        }
    }

    pub fn identity(t: T) -> Self {
        Self::new(t, UnitQuaternion::identity(), Vector3::zeros())
    }

    pub fn rotation_matrix(&self) -> Matrix3<T> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// Camera centre in world coordinates.
    pub fn center(&self) -> Vector3<T> {
        self.translation
    }

    pub fn cam_to_world(&self, p: &Point3<T>) -> Point3<T> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn world_to_cam(&self, p: &Point3<T>) -> Point3<T> {
        Point3::from(self.rotation.inverse() * (p.coords - self.translation))
    }
}

/// Timestamped poses with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrajectory<T: Real> {
    poses: Vec<Pose<T>>,
    convention: PoseConvention,
}

impl<T: Real> PoseTrajectory<T> {
    /// Validates ordering and renormalizes quaternions.
    pub fn new(poses: Vec<Pose<T>>) -> Result<Self> {
        if poses.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "trajectory needs at least 2 poses, got {}",
                poses.len()
            )));
        }
        for (i, w) in poses.windows(2).enumerate() {
            if !(w[1].t > w[0].t) {
                return Err(Error::InvalidInput(format!(
                    "pose {} at t={} does not follow t={}",
                    i + 1,
                    w[1].t,
                    w[0].t
                )));
            }
        }
        let poses = poses
            .into_iter()
            .map(|p| Pose {
                rotation: UnitQuaternion::new_normalize(p.rotation.into_inner()),
                ..p
            })
            .collect();
        Ok(Self {
            poses,
            convention: PoseConvention::CameraToWorld,
        })
    }

    pub fn poses(&self) -> &[Pose<T>] {
        &self.poses
    }

    pub fn convention(&self) -> PoseConvention {
        self.convention
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn start(&self) -> T {
        self.poses[0].t
    }

    pub fn end(&self) -> T {
        self.poses[self.poses.len() - 1].t
    }

    pub fn covers(&self, t: T) -> bool {
        t >= self.start() && t <= self.end()
    }

    fn check_range(&self, t: T) -> Result<()> {
        if self.covers(t) {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                t: t.as_f64(),
                start: self.start().as_f64(),
                end: self.end().as_f64(),
            })
        }
    }

    /// Pose at time `t`: translation interpolated linearly and rotation by
    /// slerp between the bracketing samples. No extrapolation.
    pub fn interpolate(&self, t: T) -> Result<Pose<T>> {
        self.check_range(t)?;
        let hi = self.poses.partition_point(|p| p.t < t);
        if hi < self.poses.len() && self.poses[hi].t == t {
            return Ok(self.poses[hi]);
        }
        let (a, b) = (&self.poses[hi - 1], &self.poses[hi]);
        let s = (t - a.t) / (b.t - a.t);
        let rotation = a.rotation.slerp(&b.rotation, s);
        let rotation = UnitQuaternion::new_normalize(rotation.into_inner());
        let translation = a.translation + (b.translation - a.translation) * s;
        Ok(Pose::new(t, rotation, translation))
    }

    /// Angular velocity of the scene relative to the camera, in the camera
    /// frame, by central differences of the interpolated rotation with half
    /// step `h` (shrunk at the trajectory ends).
    ///
    /// This is the quantity the rotation warp estimates: bearings evolve as
    /// `x(t + dt) = exp(hat(w) dt) x(t)`. It equals the negated body rate.
    pub fn scene_angular_velocity(&self, t: T, h: T) -> Result<Vector3<T>> {
        self.check_range(t)?;
        let t0 = (t - h).max(self.start());
        let t1 = (t + h).min(self.end());
        if !(t1 > t0) {
            return Err(Error::InvalidParameter("zero differencing span".into()));
        }
        let r0 = self.interpolate(t0)?.rotation;
        let r1 = self.interpolate(t1)?.rotation;
        let rel = r1.inverse() * r0;
        Ok(rel.scaled_axis() / (t1 - t0))
    }
}
