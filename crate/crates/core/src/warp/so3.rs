//! Rotation-group helpers.

use nalgebra::{Matrix3, Vector3};

use crate::real::Real;

/// Cross-product matrix: `hat(w) * v == w.cross(&v)`.
#[inline]
pub fn hat<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -w.z, w.y, w.z, z, -w.x, -w.y, w.x, z)
}

/// Exponential map `exp(hat(w))` via Rodrigues' formula, with a second
/// order Taylor expansion for `|w| < 1e-8`.
pub fn exp_so3<T: Real>(w: &Vector3<T>) -> Matrix3<T> {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(w);
    let k2 = k * k;
    if theta < T::lit(1e-8) {
        return Matrix3::identity() + k + k2 * T::lit(0.5);
    }
    let a = theta.sin() / theta;
    let b = (T::one() - theta.cos()) / theta2;
    Matrix3::identity() + k * a + k2 * b
}

/// Rotation by angle `|axis| * dt` about a fixed axis, reusing the axis'
/// cross-product matrices. Rotating many points about one axis with
/// different angles is the inner loop of the rotation and homography warps.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisRotation<T: Real> {
    rate: T,
    k: Matrix3<T>,
    k2: Matrix3<T>,
    w: Vector3<T>,
}

impl<T: Real> AxisRotation<T> {
    pub fn new(w: &Vector3<T>) -> Self {
        let rate = w.norm();
        let (k, k2) = if rate > T::zero() {
            let u = w / rate;
            let k = hat(&u);
            (k, k * k)
        } else {
            (Matrix3::zeros(), Matrix3::zeros())
        };
        Self { rate, k, k2, w: *w }
    }

    /// `exp(hat(w) * dt)`.
    #[inline]
    pub fn at(&self, dt: T) -> Matrix3<T> {
        let theta = self.rate * dt;
        if theta.abs() < T::lit(1e-8) {
            return exp_so3(&(self.w * dt));
        }
        Matrix3::identity() + self.k * theta.sin() + self.k2 * (T::one() - theta.cos())
    }
}
