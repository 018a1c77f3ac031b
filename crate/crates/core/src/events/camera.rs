use nalgebra::{Matrix2, Point2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

const UNDISTORT_MAX_ITERS: usize = 10;
const UNDISTORT_TOL_PX: f64 = 1e-8;

/// Pinhole intrinsics with radial-tangential (`k1 k2 p1 p2 k3`) distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct CameraIntrinsics<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub dist: [T; 5],
    pub width: usize,
    pub height: usize,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: usize, height: usize) -> Result<Self> {
        Self::with_distortion(fx, fy, cx, cy, [T::zero(); 5], width, height)
    }

    pub fn with_distortion(
        fx: T,
        fy: T,
        cx: T,
        cy: T,
        dist: [T; 5],
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if !(fx > T::zero() && fy > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("zero image size".into()));
        }
        let w = T::from_usize_lossy(width);
        let h = T::from_usize_lossy(height);
        if !(cx >= T::zero() && cx < w && cy >= T::zero() && cy < h) {
            return Err(Error::InvalidParameter(format!(
                "principal point ({cx}, {cy}) outside {width}x{height}"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            dist,
            width,
            height,
        })
    }

    /// Same intrinsics, distortion removed.
    pub fn pinhole(&self) -> Self {
        Self {
            dist: [T::zero(); 5],
            ..*self
        }
    }

    pub fn has_distortion(&self) -> bool {
        self.dist.iter().any(|d| *d != T::zero())
    }

    /// Pixel to normalized coordinates, ignoring distortion.
    #[inline]
    pub fn unproject(&self, px: &Point2<T>) -> Point2<T> {
        Point2::new((px.x - self.cx) / self.fx, (px.y - self.cy) / self.fy)
    }

    /// Normalized coordinates to pixel, ignoring distortion.
    #[inline]
    pub fn project(&self, xn: &Point2<T>) -> Point2<T> {
        Point2::new(self.fx * xn.x + self.cx, self.fy * xn.y + self.cy)
    }

    /// Homogeneous bearing `(x, y, 1)` of an (undistorted) pixel.
    #[inline]
    pub fn bearing(&self, px: &Point2<T>) -> Vector3<T> {
        let n = self.unproject(px);
        Vector3::new(n.x, n.y, T::one())
    }

    /// Projects a camera-frame direction; `None` when it is (nearly) parallel
    /// to the image plane.
    #[inline]
    pub fn project_homogeneous(&self, v: &Vector3<T>) -> Option<Point2<T>> {
        if v.z.abs() < T::lit(1e-9) {
            return None;
        }
        Some(self.project(&Point2::new(v.x / v.z, v.y / v.z)))
    }

    /// Applies the lens distortion model to undistorted normalized coordinates.
    pub fn distort(&self, xn: &Point2<T>) -> Point2<T> {
        let [k1, k2, p1, p2, k3] = self.dist;
        let (x, y) = (xn.x, xn.y);
        let two = T::lit(2.0);
        let r2 = x * x + y * y;
        let radial = T::one() + r2 * (k1 + r2 * (k2 + r2 * k3));
        Point2::new(
            x * radial + two * p1 * x * y + p2 * (r2 + two * x * x),
            y * radial + p1 * (r2 + two * y * y) + two * p2 * x * y,
        )
    }

    fn distortion_jacobian(&self, xn: &Point2<T>) -> Matrix2<T> {
        let [k1, k2, p1, p2, k3] = self.dist;
        let (x, y) = (xn.x, xn.y);
        let two = T::lit(2.0);
        let r2 = x * x + y * y;
        let radial = T::one() + r2 * (k1 + r2 * (k2 + r2 * k3));
        // d(radial)/d(r2)
        let dradial = k1 + r2 * (two * k2 + T::lit(3.0) * r2 * k3);
        let dxx = radial + x * dradial * two * x + two * p1 * y + p2 * T::lit(6.0) * x;
        let dxy = x * dradial * two * y + two * p1 * x + two * p2 * y;
        let dyx = y * dradial * two * x + two * p1 * x + two * p2 * y;
        let dyy = radial + y * dradial * two * y + p1 * T::lit(6.0) * y + two * p2 * x;
        Matrix2::new(dxx, dxy, dyx, dyy)
    }

    /// Inverts [`distort`](Self::distort) by Newton iteration started at the
    /// distorted point.
    pub fn undistort_normalized(&self, distorted: &Point2<T>) -> Point2<T> {
        if !self.has_distortion() {
            return *distorted;
        }
        let tol = T::lit(UNDISTORT_TOL_PX) / self.fx.max(self.fy);
        let mut x = *distorted;
        for _ in 0..UNDISTORT_MAX_ITERS {
            let residual: Vector2<T> = self.distort(&x) - distorted;
            let Some(inv) = self.distortion_jacobian(&x).try_inverse() else {
                break;
            };
            let step = inv * residual;
            x -= step;
            if step.norm() < tol {
                break;
            }
        }
        x
    }

    /// Raw sensor pixel to undistorted normalized ("calibrated") coordinates.
    pub fn pixel_to_calibrated(&self, px: &Point2<T>) -> Point2<T> {
        self.undistort_normalized(&self.unproject(px))
    }

    /// Calibrated coordinates to raw sensor pixel (distortion applied).
    pub fn calibrated_to_pixel(&self, xn: &Point2<T>) -> Point2<T> {
        self.project(&self.distort(xn))
    }

    /// Raw pixel to the pixel an ideal pinhole camera with the same `K` would see.
    pub fn undistort_pixel(&self, px: &Point2<T>) -> Point2<T> {
        self.project(&self.pixel_to_calibrated(px))
    }

    /// Whether a pixel position lies on the sensor (`[0, width) x [0, height)`).
    pub fn contains(&self, px: &Point2<T>) -> bool {
        px.x >= T::zero()
            && px.y >= T::zero()
            && px.x < T::from_usize_lossy(self.width)
            && px.y < T::from_usize_lossy(self.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(200.0, 200.0, 120.0, 90.0, 240, 180).unwrap()
    }

    #[test]
    fn principal_point_maps_to_origin() {
        let c = cam();
        let p = c.pixel_to_calibrated(&Point2::new(120.0, 90.0));
        assert_eq!(p, Point2::new(0.0, 0.0));
    }

    #[test]
    fn one_focal_length_off_center_is_unit() {
        let c = cam();
        let p = c.pixel_to_calibrated(&Point2::new(320.0, 90.0));
        assert!((p.x - 1.0).abs() < 1e-15 && p.y.abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(CameraIntrinsics::new(-1.0, 200.0, 120.0, 90.0, 240, 180).is_err());
        assert!(CameraIntrinsics::new(200.0, 200.0, 240.0, 90.0, 240, 180).is_err());
    }

    #[test]
    fn radial_round_trip_fifty_px_off_center() {
        let mut c = cam();
        c.dist[0] = -0.1;
        let px = Point2::new(170.0, 90.0);
        let back = c.calibrated_to_pixel(&c.pixel_to_calibrated(&px));
        assert!((back - px).norm() < 1e-6);
        // forward-distortion oracle: distorting the recovered point gives the input
        let xn = c.pixel_to_calibrated(&px);
        let r2 = xn.x * xn.x + xn.y * xn.y;
        let xd = xn.x * (1.0 - 0.1 * r2);
        assert!((xd * 200.0 + 120.0 - 170.0).abs() < 1e-6);
    }

    #[test]
    fn strong_distortion_round_trip_every_pixel() {
        // with fx = 200 the corners of a 240x180 sensor lie outside the range
        // of x(1 - 0.3 r^2); a longer lens keeps every pixel invertible
        for k1 in [-0.3, 0.3] {
            let mut c = CameraIntrinsics::new(320.0, 320.0, 120.0, 90.0, 240, 180).unwrap();
            c.dist = [k1, 0.01, 0.001, -0.001, 0.0];
            let mut worst: f64 = 0.0;
            for v in (0..180).step_by(7) {
                for u in (0..240).step_by(7) {
                    let px = Point2::new(u as f64, v as f64);
                    let back = c.calibrated_to_pixel(&c.pixel_to_calibrated(&px));
                    worst = worst.max((back - px).norm());
                }
            }
            assert!(worst < 1e-4, "k1={k1} worst={worst}");
        }
    }

    #[test]
    fn works_in_single_precision() {
        let c = CameraIntrinsics::<f32>::new(200.0, 200.0, 120.0, 90.0, 240, 180).unwrap();
        let px = Point2::new(33.0f32, 12.0);
        let back = c.calibrated_to_pixel(&c.pixel_to_calibrated(&px));
        assert!((back - px).norm() < 1e-4);
    }
}
