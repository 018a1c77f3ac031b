use nalgebra::{Point2, Vector2};

use super::{ParamVector, Warp};
use crate::error::Result;
use crate::events::Event;
use crate::real::Real;

/// Constant image-plane velocity in pixels per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams<T: Real> {
    pub v: Vector2<T>,
}

impl<T: Real> FlowParams<T> {
    pub fn new(vx: T, vy: T) -> Self {
        Self {
            v: Vector2::new(vx, vy),
        }
    }
}

impl<T: Real> ParamVector<T> for FlowParams<T> {
    const DIM: usize = 2;

    fn to_vec(&self) -> Vec<T> {
        vec![self.v.x, self.v.y]
    }

    fn from_slice(v: &[T]) -> Self {
        assert_eq!(v.len(), 2);
        Self::new(v[0], v[1])
    }
}

/// `x' = x - (t - t_ref) v`.
#[inline]
pub fn warp_flow<T: Real>(x: &Point2<T>, t: T, t_ref: T, p: &FlowParams<T>) -> Point2<T> {
    x - p.v * (t - t_ref)
}

#[derive(Debug, Clone, Copy)]
pub struct FlowWarp<T: Real> {
    pub params: FlowParams<T>,
    pub t_ref: T,
}

impl<T: Real> FlowWarp<T> {
    pub fn new(params: FlowParams<T>, t_ref: T) -> Self {
        Self { params, t_ref }
    }
}

impl<T: Real> Warp<T> for FlowWarp<T> {
    #[inline]
    fn warp(&self, _: usize, e: &Event<T>) -> Result<Option<Point2<T>>> {
        Ok(Some(warp_flow(&e.position(), e.t, self.t_ref, &self.params)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_evaluation() {
        let x = warp_flow(&Point2::new(10.0, 5.0), 0.1, 0.0, &FlowParams::new(-40.0, 0.0));
        assert!((x - Point2::new(14.0, 5.0)).norm() < 1e-12);
    }

    #[test]
    fn identities() {
        let x = Point2::new(3.0, 4.0);
        assert_eq!(warp_flow(&x, 0.7, 0.2, &FlowParams::new(0.0, 0.0)), x);
        assert_eq!(warp_flow(&x, 0.2, 0.2, &FlowParams::new(55.0, -9.0)), x);
    }
}
