use nalgebra::{Point2, Vector3};

use super::{ParamVector, Warp};
use crate::error::{Error, Result};
use crate::events::{CameraIntrinsics, Event, EventSlice, Pose, PoseTrajectory};
use crate::real::Real;

/// Depth (meters) of a plane parallel to the reference image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthParams<T: Real> {
    pub z: T,
}

impl<T: Real> ParamVector<T> for DepthParams<T> {
    const DIM: usize = 1;

    fn to_vec(&self) -> Vec<T> {
        vec![self.z]
    }

    fn from_slice(v: &[T]) -> Self {
        assert_eq!(v.len(), 1);
        Self { z: v[0] }
    }
}

/// Per-event relative geometry between the event camera and the reference
/// view: the event bearing rotated into the reference frame (`a`) and the
/// event camera centre in the reference frame (`b`).
#[derive(Debug, Clone, Copy)]
struct Ray<T: Real> {
    a: Vector3<T>,
    b: Vector3<T>,
}

fn relative_ray<T: Real>(
    x: &Point2<T>,
    pose: &Pose<T>,
    reference: &Pose<T>,
    camera: &CameraIntrinsics<T>,
) -> Ray<T> {
    let to_ref = reference.rotation.inverse();
    Ray {
        a: to_ref * (pose.rotation * camera.bearing(x)),
        b: to_ref * (pose.translation - reference.translation),
    }
}

/// Transfer through the homography induced by the plane `Z = z` of the
/// reference view. With `R` the event-to-reference rotation and `b` the
/// event camera centre, `x_ref ~ (I + b e3^T / (z - b_z)) R x_event`.
#[inline]
fn transfer<T: Real>(ray: &Ray<T>, z: T, camera: &CameraIntrinsics<T>) -> Option<Point2<T>> {
    let eps = T::lit(1e-9);
    let denom = z - ray.b.z;
    if denom.abs() < eps {
        return None;
    }
    let x = ray.a + ray.b * (ray.a.z / denom);
    camera.project_homogeneous(&x)
}

/// Transfers one event pixel into the reference view `reference` for plane
/// depth `params.z`, interpolating the event camera pose at `t`.
pub fn warp_plane_depth<T: Real>(
    x: &Point2<T>,
    t: T,
    params: &DepthParams<T>,
    traj: &PoseTrajectory<T>,
    reference: &Pose<T>,
    camera: &CameraIntrinsics<T>,
) -> Result<Option<Point2<T>>> {
    if !(params.z > T::zero()) {
        return Err(Error::InvalidParameter(format!("depth must be positive, got {}", params.z)));
    }
    let pose = traj.interpolate(t)?;
    Ok(transfer(&relative_ray(x, &pose, reference, camera), params.z, camera))
}

/// The depth-independent part of the plane-sweep warp, computed once per
/// slice so a sweep over depths only re-evaluates the cheap transfer.
#[derive(Debug, Clone)]
pub struct DepthTransfer<T: Real> {
    rays: Vec<Ray<T>>,
    camera: CameraIntrinsics<T>,
}

impl<T: Real> DepthTransfer<T> {
    pub fn new(
        slice: &EventSlice<T>,
        traj: &PoseTrajectory<T>,
        reference: &Pose<T>,
        camera: &CameraIntrinsics<T>,
    ) -> Result<Self> {
        let rays = slice
            .events()
            .iter()
            .map(|e| {
                let pose = traj.interpolate(e.t)?;
                Ok(relative_ray(&e.position(), &pose, reference, camera))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rays,
            camera: *camera,
        })
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    /// Largest distance of an event camera centre from the reference view.
    pub fn max_baseline(&self) -> T {
        self.rays.iter().fold(T::zero(), |m, r| m.max(r.b.norm()))
    }

    pub fn at_depth(&self, z: T) -> DepthWarp<'_, T> {
        DepthWarp { transfer: self, z }
    }
}

/// [`DepthTransfer`] specialised to one depth hypothesis. Event indices
/// refer to the slice the transfer was built from.
#[derive(Debug, Clone, Copy)]
pub struct DepthWarp<'a, T: Real> {
    transfer: &'a DepthTransfer<T>,
    pub z: T,
}

impl<T: Real> Warp<T> for DepthWarp<'_, T> {
    #[inline]
    fn warp(&self, index: usize, _: &Event<T>) -> Result<Option<Point2<T>>> {
        Ok(transfer(&self.transfer.rays[index], self.z, &self.transfer.camera))
    }
}
