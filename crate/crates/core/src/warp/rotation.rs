use nalgebra::{Point2, Vector3};

use super::so3::AxisRotation;
use super::{ParamVector, Warp};
use crate::error::Result;
use crate::events::{CameraIntrinsics, Event};
use crate::real::Real;

/// Angular velocity (rad/s, camera frame) of the scene relative to the
/// camera: bearings evolve as `x(t) ~ exp(hat(omega) t) x(0)`. For a camera
/// rotating in a static scene this is the negated gyroscope reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationParams<T: Real> {
    pub omega: Vector3<T>,
}

impl<T: Real> RotationParams<T> {
    pub fn new(wx: T, wy: T, wz: T) -> Self {
        Self {
            omega: Vector3::new(wx, wy, wz),
        }
    }
}

impl<T: Real> ParamVector<T> for RotationParams<T> {
    const DIM: usize = 3;

    fn to_vec(&self) -> Vec<T> {
        vec![self.omega.x, self.omega.y, self.omega.z]
    }

    fn from_slice(v: &[T]) -> Self {
        assert_eq!(v.len(), 3);
        Self::new(v[0], v[1], v[2])
    }
}

/// Rotates pixel `x`, seen at `t`, back to `t_ref`:
/// `x' ~ exp(-hat(omega) (t - t_ref)) K^-1 (x, 1)`.
pub fn warp_rotation<T: Real>(
    x: &Point2<T>,
    t: T,
    t_ref: T,
    p: &RotationParams<T>,
    camera: &CameraIntrinsics<T>,
) -> Option<Point2<T>> {
    let r = super::exp_so3(&(p.omega * -(t - t_ref)));
    camera.project_homogeneous(&(r * camera.bearing(x)))
}

#[derive(Debug, Clone, Copy)]
pub struct RotationWarp<T: Real> {
    pub params: RotationParams<T>,
    pub t_ref: T,
    camera: CameraIntrinsics<T>,
    inverse: AxisRotation<T>,
}

impl<T: Real> RotationWarp<T> {
    pub fn new(params: RotationParams<T>, t_ref: T, camera: CameraIntrinsics<T>) -> Self {
        Self {
            params,
            t_ref,
            camera,
            inverse: AxisRotation::new(&-params.omega),
        }
    }
}

impl<T: Real> Warp<T> for RotationWarp<T> {
    #[inline]
    fn warp(&self, _: usize, e: &Event<T>) -> Result<Option<Point2<T>>> {
        let r = self.inverse.at(e.t - self.t_ref);
        Ok(self
            .camera
            .project_homogeneous(&(r * self.camera.bearing(&e.position()))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cam() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(200.0, 200.0, 120.0, 90.0, 240, 180).unwrap()
    }

    #[test]
    fn minus_quarter_turn_about_optical_axis() {
        let k = cam();
        let x = k.project(&Point2::new(1.0, 0.0));
        let out = warp_rotation(&x, 0.5, 0.0, &RotationParams::new(0.0, 0.0, PI), &k).unwrap();
        let c = k.unproject(&out);
        assert!((c - Point2::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_rate_is_identity() {
        let k = cam();
        let x = Point2::new(17.0, 150.0);
        let out = warp_rotation(&x, 0.3, 0.0, &RotationParams::new(0.0, 0.0, 0.0), &k).unwrap();
        assert!((out - x).norm() < 1e-9);
    }

    proptest! {
        #[test]
        fn roll_preserves_radius(u in 0.0f64..240.0, v in 0.0f64..180.0, wz in -10.0f64..10.0, dt in -0.1f64..0.1) {
            let k = cam();
            let x = Point2::new(u, v);
            let out = warp_rotation(&x, dt, 0.0, &RotationParams::new(0.0, 0.0, wz), &k).unwrap();
            prop_assert!((k.unproject(&out).coords.norm() - k.unproject(&x).coords.norm()).abs() < 1e-12);
        }

        #[test]
        fn group_property(u in 0.0f64..240.0, v in 0.0f64..180.0,
                          wx in -2.0f64..2.0, wy in -2.0f64..2.0, wz in -2.0f64..2.0,
                          t0 in 0.0f64..0.05, t1 in 0.0f64..0.05, t2 in 0.0f64..0.05) {
            let k = cam();
            let p = RotationParams::new(wx, wy, wz);
            let x = Point2::new(u, v);
            let a = warp_rotation(&x, t0, t1, &p, &k).unwrap();
            let b = warp_rotation(&a, t1, t2, &p, &k).unwrap();
            let direct = warp_rotation(&x, t0, t2, &p, &k).unwrap();
            prop_assert!((b - direct).norm() < 1e-9);
        }

        #[test]
        fn identity_at_reference_time(u in 0.0f64..240.0, v in 0.0f64..180.0, wx in -9.0f64..9.0, t in 0.0f64..1.0) {
            let k = cam();
            let w = RotationWarp::new(RotationParams::new(wx, -wx, 0.5 * wx), t, k);
            let e = Event::new(t, u, v, crate::events::Polarity::Positive);
            let out = w.warp(0, &e).unwrap().unwrap();
            prop_assert!((out - e.position()).norm() < 1e-9);
        }
    }
}
