use nalgebra::{Matrix3, Point2, Vector3};

use super::so3::AxisRotation;
use super::{ParamVector, Warp};
use crate::error::{Error, Result};
use crate::events::{CameraIntrinsics, Event};
use crate::real::Real;

/// Unit plane normal from two angles; `(0, 0)` gives `(0, 0, 1)`.
///
/// `phi` tilts the normal towards `+x`, `psi` turns it about the x axis:
/// `n = (sin phi, cos phi sin psi, cos phi cos psi)`. The parametrization is
/// singular only at `n = (+-1, 0, 0)`, far from the `z`-facing planes seen in
/// practice.
pub fn normal_from_angles<T: Real>(phi: T, psi: T) -> Vector3<T> {
    let (sp, cp) = phi.sin_cos();
    let (ss, cs) = psi.sin_cos();
    Vector3::new(sp, cp * ss, cp * cs)
}

/// Inverse of [`normal_from_angles`] (input is normalized first); at the
/// singular directions `n = (+-1, 0, 0)` `psi` is 0.
pub fn angles_from_normal<T: Real>(n: &Vector3<T>) -> (T, T) {
    let n = n.normalize();
    let phi = n.x.max(-T::one()).min(T::one()).asin();
    let psi = if n.y.abs() < T::lit(1e-15) && n.z.abs() < T::lit(1e-15) {
        T::zero()
    } else {
        n.y.atan2(n.z)
    };
    (phi, psi)
}

/// Eight-parameter planar motion: angular velocity, translational velocity
/// over plane distance, and the plane normal angles.
///
/// The camera at `t_ref + dt` has rotation `R = exp(hat(omega) dt)` (mapping
/// reference bearings to current ones) and sits at `(v/d) dt * d` in the
/// reference frame. The plane is `n . X + d = 0` in the reference frame, so a
/// plane in front of the camera has `n.z < 0`. Then
/// `x(dt) ~ R (I + (v/d) dt n^T) x(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomographyParams<T: Real> {
    pub omega: Vector3<T>,
    pub v_over_d: Vector3<T>,
    pub phi: T,
    pub psi: T,
}

impl<T: Real> HomographyParams<T> {
    pub fn new(omega: Vector3<T>, v_over_d: Vector3<T>, normal: &Vector3<T>) -> Self {
        let (phi, psi) = angles_from_normal(normal);
        Self {
            omega,
            v_over_d,
            phi,
            psi,
        }
    }

    /// All eight parameters zero: identity warp.
    pub fn zero() -> Self {
        Self {
            omega: Vector3::zeros(),
            v_over_d: Vector3::zeros(),
            phi: T::zero(),
            psi: T::zero(),
        }
    }

    pub fn normal(&self) -> Vector3<T> {
        normal_from_angles(self.phi, self.psi)
    }

    /// `(n, v/d)` and `(-n, -v/d)` induce the same homography; this picks the
    /// representative with the plane in front of the camera (`n.z <= 0`).
    pub fn canonical(&self) -> Self {
        let n = self.normal();
        if n.z > T::zero() {
            Self::new(self.omega, -self.v_over_d, &-n)
        } else {
            Self::new(self.omega, self.v_over_d, &n)
        }
    }

    /// `H(dt)` mapping reference bearings to bearings at `t_ref + dt`.
    pub fn matrix(&self, dt: T) -> Matrix3<T> {
        let r = super::exp_so3(&(self.omega * dt));
        let c = self.v_over_d * dt;
        r * (Matrix3::identity() + c * self.normal().transpose())
    }
}

impl<T: Real> ParamVector<T> for HomographyParams<T> {
    const DIM: usize = 8;

    fn to_vec(&self) -> Vec<T> {
        let (w, v) = (self.omega, self.v_over_d);
        vec![w.x, w.y, w.z, v.x, v.y, v.z, self.phi, self.psi]
    }

    fn from_slice(v: &[T]) -> Self {
        assert_eq!(v.len(), 8);
        Self {
            omega: Vector3::new(v[0], v[1], v[2]),
            v_over_d: Vector3::new(v[3], v[4], v[5]),
            phi: v[6],
            psi: v[7],
        }
    }
}

const SINGULAR_DET: f64 = 1e-12;

#[inline]
fn apply_inverse<T: Real>(
    rt: &Matrix3<T>,
    c: &Vector3<T>,
    n: &Vector3<T>,
    bearing: &Vector3<T>,
) -> Result<Vector3<T>> {
    // H = R (I + c n^T), det H = 1 + n.c,
    // H^-1 = (I - c n^T / (1 + n.c)) R^T
    let det = T::one() + n.dot(c);
    if det.abs() < T::lit(SINGULAR_DET) {
        return Err(Error::InvalidParameter(format!("singular homography (det {det})")));
    }
    let y = rt * bearing;
    Ok(y - c * (n.dot(&y) / det))
}

/// `x' ~ H^-1(t - t_ref) K^-1 (x, 1)`.
pub fn warp_homography<T: Real>(
    x: &Point2<T>,
    t: T,
    t_ref: T,
    p: &HomographyParams<T>,
    camera: &CameraIntrinsics<T>,
) -> Result<Option<Point2<T>>> {
    let dt = t - t_ref;
    let rt = super::exp_so3(&(p.omega * -dt));
    let y = apply_inverse(&rt, &(p.v_over_d * dt), &p.normal(), &camera.bearing(x))?;
    Ok(camera.project_homogeneous(&y))
}

#[derive(Debug, Clone, Copy)]
pub struct HomographyWarp<T: Real> {
    pub params: HomographyParams<T>,
    pub t_ref: T,
    camera: CameraIntrinsics<T>,
    inverse: AxisRotation<T>,
    normal: Vector3<T>,
}

impl<T: Real> HomographyWarp<T> {
    pub fn new(params: HomographyParams<T>, t_ref: T, camera: CameraIntrinsics<T>) -> Self {
        Self {
            params,
            t_ref,
            camera,
            inverse: AxisRotation::new(&-params.omega),
            normal: params.normal(),
        }
    }
}

impl<T: Real> Warp<T> for HomographyWarp<T> {
    #[inline]
    fn warp(&self, _: usize, e: &Event<T>) -> Result<Option<Point2<T>>> {
        let dt = e.t - self.t_ref;
        let y = apply_inverse(
            &self.inverse.at(dt),
            &(self.params.v_over_d * dt),
            &self.normal,
            &self.camera.bearing(&e.position()),
        )?;
        Ok(self.camera.project_homogeneous(&y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warp::{warp_rotation, RotationParams};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cam() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(200.0, 200.0, 120.0, 90.0, 240, 180).unwrap()
    }

    #[test]
    fn zero_parameters_are_identity() {
        let p = HomographyParams::<f64>::zero();
        assert_eq!(p.matrix(0.37), Matrix3::identity());
        let x = Point2::new(31.0, 77.0);
        let out = warp_homography(&x, 0.2, 0.0, &p, &cam()).unwrap().unwrap();
        assert!((out - x).norm() < 1e-12);
    }

    #[test]
    fn rotation_only_matches_rotation_warp() {
        let k = cam();
        let p = HomographyParams {
            omega: Vector3::new(0.0, 0.0, PI),
            ..HomographyParams::zero()
        };
        let x = k.project(&Point2::new(1.0, 0.0));
        let a = warp_homography(&x, 0.5, 0.0, &p, &k).unwrap().unwrap();
        let b = warp_rotation(&x, 0.5, 0.0, &RotationParams::new(0.0, 0.0, PI), &k).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn pure_translation_shift() {
        // camera moved +0.1 plane-distances along x; plane faces the camera
        let k = cam();
        let p = HomographyParams::new(
            Vector3::zeros(),
            Vector3::new(1.0, 0.0, 0.0),
            &Vector3::new(0.0, 0.0, -1.0),
        );
        let xn = Point2::new(0.2, 0.1);
        let out = warp_homography(&k.project(&xn), 0.1, 0.0, &p, &k).unwrap().unwrap();
        let c = k.unproject(&out);
        assert!((c - Point2::new(0.3, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn singular_homography_is_an_error() {
        // 1 + n.c = 0 with n = (0, 0, -1), c = (0, 0, 1)
        let p = HomographyParams::new(
            Vector3::zeros(),
            Vector3::new(0.0, 0.0, 10.0),
            &Vector3::new(0.0, 0.0, -1.0),
        );
        assert!(warp_homography(&Point2::new(5.0, 5.0), 0.1, 0.0, &p, &cam()).is_err());
    }

    #[test]
    fn angle_conventions() {
        assert_eq!(normal_from_angles(0.0f64, 0.0), Vector3::new(0.0, 0.0, 1.0));
        let n = Vector3::new(0.07, 0.075, -0.995).normalize();
        let (phi, psi) = angles_from_normal(&n);
        assert!((normal_from_angles(phi, psi) - n).norm() < 1e-12);
        assert_eq!(angles_from_normal(&Vector3::new(1.0f64, 0.0, 0.0)).1, 0.0);
    }

    #[test]
    fn canonical_form_keeps_matrix() {
        let p = HomographyParams::new(
            Vector3::new(0.1, 0.2, -0.3),
            Vector3::new(0.5, -0.1, 0.3),
            &Vector3::new(0.1, 0.2, 0.9),
        );
        let c = p.canonical();
        assert!(c.normal().z < 0.0);
        assert!((p.matrix(0.05) - c.matrix(0.05)).abs().max() < 1e-12);
    }

    proptest! {
        #[test]
        fn unit_normals(phi in -10.0f64..10.0, psi in -10.0f64..10.0) {
            prop_assert!((normal_from_angles(phi, psi).norm() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn angle_round_trip(phi in -1.4f64..1.4, psi in -3.1f64..3.1) {
            let (a, b) = angles_from_normal(&normal_from_angles(phi, psi));
            prop_assert!((a - phi).abs() < 1e-10 && (b - psi).abs() < 1e-10);
        }

        #[test]
        fn matches_explicit_inverse(u in 0.0f64..240.0, v in 0.0f64..180.0,
                                    w in prop::array::uniform3(-1.0f64..1.0),
                                    c in prop::array::uniform3(-1.0f64..1.0),
                                    phi in -1.0f64..1.0, psi in 2.0f64..4.0, dt in 0.0f64..0.2) {
            let k = cam();
            let p = HomographyParams { omega: Vector3::from(w), v_over_d: Vector3::from(c), phi, psi };
            let x = Point2::new(u, v);
            let h = p.matrix(dt);
            let inv = h.try_inverse().unwrap();
            let expected = k.project_homogeneous(&(inv * k.bearing(&x))).unwrap();
            let got = warp_homography(&x, dt, 0.0, &p, &k).unwrap().unwrap();
            prop_assert!((got - expected).norm() < 1e-8);
        }

        #[test]
        fn without_translation_equals_rotation(u in 0.0f64..240.0, v in 0.0f64..180.0,
                                               w in prop::array::uniform3(-3.0f64..3.0),
                                               phi in -1.0f64..1.0, psi in -3.0f64..3.0,
                                               t in 0.0f64..0.1, t_ref in 0.0f64..0.1) {
            let k = cam();
            let p = HomographyParams { omega: Vector3::from(w), v_over_d: Vector3::zeros(), phi, psi };
            let x = Point2::new(u, v);
            let a = warp_homography(&x, t, t_ref, &p, &k).unwrap();
            let b = warp_rotation(&x, t, t_ref, &RotationParams { omega: Vector3::from(w) }, &k);
            match (a, b) {
                (Some(a), Some(b)) => prop_assert!((a - b).norm() < 1e-9),
                (None, None) => {}
                _ => prop_assert!(false, "view flags differ"),
            }
        }
    }
}
