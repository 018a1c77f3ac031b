use nalgebra::{Matrix3, Point2, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{CameraIntrinsics, Event, Polarity, Pose, PoseTrajectory};
use crate::warp::{exp_so3, HomographyParams};

use super::{finish, Dataset, EdgeScene, GroundTruth, SynthConfig};

/// Camera motion: camera-to-world rotation and camera centre over time.
pub trait Motion: Sync {
    fn pose(&self, t: f64) -> Result<(Matrix3<f64>, Vector3<f64>)>;
}

impl Motion for PoseTrajectory<f64> {
    fn pose(&self, t: f64) -> Result<(Matrix3<f64>, Vector3<f64>)> {
        let p = self.interpolate(t)?;
        Ok((p.rotation_matrix(), p.center()))
    }
}

/// Constant scene-relative angular velocity `omega` (camera frame) and
/// camera velocity `velocity` (world frame, which is the camera frame at
/// `t = 0`). Bearings of distant points follow `exp(omega^ t) x(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantMotion {
    pub omega: [f64; 3],
    pub velocity: [f64; 3],
}

impl Motion for ConstantMotion {
    fn pose(&self, t: f64) -> Result<(Matrix3<f64>, Vector3<f64>)> {
        let w = Vector3::from(self.omega) * -t;
        Ok((exp_so3(&w), Vector3::from(self.velocity) * t))
    }
}

/// Piecewise-constant scene-relative angular velocity; `knots[i] = (t_i,
/// omega_i)` holds on `[t_i, t_{i+1})`. The first knot starts at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, [f64; 3])>", into = "Vec<(f64, [f64; 3])>")]
pub struct PiecewiseRotation {
    knots: Vec<(f64, [f64; 3])>,
    /// Camera-to-world rotation at each knot time.
    starts: Vec<Matrix3<f64>>,
}

impl TryFrom<Vec<(f64, [f64; 3])>> for PiecewiseRotation {
    type Error = Error;
    fn try_from(knots: Vec<(f64, [f64; 3])>) -> Result<Self> {
        Self::new(knots)
    }
}

impl From<PiecewiseRotation> for Vec<(f64, [f64; 3])> {
    fn from(p: PiecewiseRotation) -> Self {
        p.knots
    }
}

impl PiecewiseRotation {
    pub fn new(knots: Vec<(f64, [f64; 3])>) -> Result<Self> {
        if knots.first().map(|k| k.0) != Some(0.0) {
            return Err(Error::InvalidParameter("rate schedule must start at t = 0".into()));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParameter("rate knots must be strictly increasing".into()));
        }
        let mut starts = vec![Matrix3::identity()];
        for w in knots.windows(2) {
            let prev = *starts.last().expect("non-empty");
            starts.push(prev * exp_so3(&(Vector3::from(w[0].1) * -(w[1].0 - w[0].0))));
        }
        Ok(Self { knots, starts })
    }

    pub fn constant(omega: [f64; 3]) -> Self {
        Self::new(vec![(0.0, omega)]).expect("single knot at zero")
    }

    /// Samples `f` at the middle of consecutive `step`-long intervals.
    pub fn staircase(f: impl Fn(f64) -> [f64; 3], duration: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && duration > 0.0) {
            return Err(Error::InvalidParameter("staircase needs positive step and duration".into()));
        }
        let n = (duration / step).ceil() as usize;
        Self::new((0..n).map(|i| (i as f64 * step, f((i as f64 + 0.5) * step))).collect())
    }

    pub fn knots(&self) -> &[(f64, [f64; 3])] {
        &self.knots
    }

    fn segment(&self, t: f64) -> usize {
        self.knots.partition_point(|k| k.0 <= t).saturating_sub(1)
    }

    pub fn omega_at(&self, t: f64) -> Vector3<f64> {
        Vector3::from(self.knots[self.segment(t)].1)
    }

    pub fn peak_speed(&self) -> f64 {
        self.knots.iter().map(|k| Vector3::from(k.1).norm()).fold(0.0, f64::max)
    }

    /// Camera-to-world rotation at `t`.
    pub fn rotation_at(&self, t: f64) -> Matrix3<f64> {
        let i = self.segment(t);
        let (t0, w) = self.knots[i];
        self.starts[i] * exp_so3(&(Vector3::from(w) * -(t - t0)))
    }

    /// Pose samples every `dt` plus every knot inside `[0, duration]`; slerp
    /// between them follows the rotation exactly.
    pub fn to_trajectory(&self, duration: f64, dt: f64) -> Result<PoseTrajectory<f64>> {
        let mut times: Vec<f64> = (0..=((duration / dt).ceil() as usize))
            .map(|i| (i as f64 * dt).min(duration))
            .chain(self.knots.iter().map(|k| k.0).filter(|t| *t <= duration))
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let poses = times
            .into_iter()
            .map(|t| {
                let r = nalgebra::Rotation3::from_matrix_unchecked(self.rotation_at(t));
                Pose::new(t, UnitQuaternion::from_rotation_matrix(&r), Vector3::zeros())
            })
            .collect();
        PoseTrajectory::new(poses)
    }
}

impl Motion for PiecewiseRotation {
    fn pose(&self, t: f64) -> Result<(Matrix3<f64>, Vector3<f64>)> {
        Ok((self.rotation_at(t), Vector3::zeros()))
    }
}

/// Plane `n . X + d = 0` in the world frame plus, for constant motion,
/// the homography parameters over time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarTruth {
    pub normal: [f64; 3],
    pub d: f64,
    pub motion: Option<ConstantMotion>,
}

impl PlanarTruth {
    /// Homography parameters relative to the camera frame at `t_ref`.
    pub fn params_at(&self, t_ref: f64) -> Option<HomographyParams<f64>> {
        let m = self.motion?;
        let r_ref = exp_so3(&(Vector3::from(m.omega) * t_ref));
        let v = Vector3::from(m.velocity);
        let n = r_ref * Vector3::from(self.normal);
        let d = self.d + Vector3::from(self.normal).dot(&v) * t_ref;
        Some(HomographyParams::new(Vector3::from(m.omega), r_ref * v / d, &n).canonical())
    }

    /// Depth of a fronto-parallel plane in the world frame.
    pub fn fronto_parallel_depth(&self) -> Option<f64> {
        let n = Vector3::from(self.normal);
        (n.x.abs() < 1e-12 && n.y.abs() < 1e-12 && n.z < 0.0).then(|| self.d / -n.z)
    }
}

/// A traced edge point: world position (or direction when `at_infinity`)
/// and world tangent of its edge.
struct EdgePoint {
    x: Vector3<f64>,
    tangent: Vector3<f64>,
    sign: i8,
    phase: f64,
}

struct Projected {
    px: Point2<f64>,
    normal: nalgebra::Vector2<f64>,
}

fn project(
    camera: &CameraIntrinsics<f64>,
    rt: &Matrix3<f64>,
    c: &Vector3<f64>,
    p: &EdgePoint,
    at_infinity: bool,
) -> Option<Projected> {
    let xc = if at_infinity { rt * p.x } else { rt * (p.x - c) };
    if xc.z < 1e-6 {
        return None;
    }
    let tc = rt * p.tangent;
    let (u, v) = (xc.x / xc.z, xc.y / xc.z);
    let tu = camera.fx * (tc.x - u * tc.z) / xc.z;
    let tv = camera.fy * (tc.y - v * tc.z) / xc.z;
    let tn = tu.hypot(tv);
    if !(tn > 0.0) {
        return None;
    }
    Some(Projected {
        px: Point2::new(camera.fx * u + camera.cx, camera.fy * v + camera.cy),
        normal: nalgebra::Vector2::new(-tv / tn, tu / tn),
    })
}

/// Traces every edge point through `motion` on a fixed time grid and fires
/// an event each `1 / rate` px of normal travel. Event times are linearly
/// interpolated within a step; positions are exact at that time.
fn trace<M: Motion + ?Sized>(
    points: &[EdgePoint],
    at_infinity: bool,
    motion: &M,
    camera: &CameraIntrinsics<f64>,
    cfg: &SynthConfig,
) -> Result<Vec<Event<f64>>> {
    let steps = (cfg.duration / cfg.time_step).ceil().max(1.0) as usize;
    let dt = cfg.duration / steps as f64;
    let poses: Vec<(Matrix3<f64>, Vector3<f64>)> = (0..=steps)
        .map(|i| motion.pose(i as f64 * dt).map(|(r, c)| (r.transpose(), c)))
        .collect::<Result<_>>()?;
    let gap = 1.0 / cfg.rate;
    // events this far outside the sensor cannot be pushed back in by noise
    let slack = 1.0 + 6.0 * cfg.sigma_px;
    let (xmax, ymax) = (cfg.width as f64 + slack, cfg.height as f64 + slack);
    let inside = |q: &Point2<f64>| q.x > -slack && q.y > -slack && q.x < xmax && q.y < ymax;
    let per_point: Vec<Result<Vec<Event<f64>>>> = points
        .par_iter()
        .map(|p| {
            let mut out = Vec::new();
            let mut next = p.phase * gap;
            let mut s = 0.0;
            let mut prev = project(camera, &poses[0].0, &poses[0].1, p, at_infinity);
            for i in 1..=steps {
                let cur = project(camera, &poses[i].0, &poses[i].1, p, at_infinity);
                if let (Some(a), Some(b)) = (&prev, &cur) {
                    if !inside(&a.px) && !inside(&b.px) {
                        // skip the step, but keep the phase of the travel counter
                        let n = (a.normal + b.normal).normalize();
                        let ds = (b.px - a.px).dot(&n).abs();
                        s += ds;
                        if next <= s {
                            next += (((s - next) / gap).floor() + 1.0) * gap;
                        }
                        prev = cur;
                        continue;
                    }
                    let n = (a.normal + b.normal).normalize();
                    let dn = (b.px - a.px).dot(&n);
                    let ds = dn.abs();
                    let pol = if (p.sign > 0) == (dn > 0.0) {
                        Polarity::Positive
                    } else {
                        Polarity::Negative
                    };
                    while ds > 0.0 && s + ds >= next {
                        let t = (i as f64 - 1.0 + (next - s) / ds) * dt;
                        let (r, c) = motion.pose(t)?;
                        if let Some(q) = project(camera, &r.transpose(), &c, p, at_infinity).filter(|q| inside(&q.px)) {
                            out.push(Event::new(t, q.px.x, q.px.y, pol));
                        }
                        next += gap;
                    }
                    s += ds;
                }
                prev = cur;
            }
            Ok(out)
        })
        .collect();
    let mut raw = Vec::new();
    for r in per_point {
        raw.extend(r?);
    }
    Ok(raw)
}

/// Camera rotating in place, viewing edges on the sphere at infinity.
pub fn gen_rotation_scene(
    scene: &EdgeScene,
    omega: &PiecewiseRotation,
    camera: &CameraIntrinsics<f64>,
    cfg: &SynthConfig,
) -> Result<Dataset> {
    cfg.validate()?;
    if omega.peak_speed() * cfg.duration >= std::f64::consts::PI
        && omega.knots().len() == 1
    {
        return Err(Error::InvalidParameter("constant rotation must stay below half a turn".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let spacing = cfg.edge_spacing / camera.fx.max(camera.fy);
    let mut points = Vec::new();
    for arc in scene.arcs()? {
        let (a, b) = (Vector3::from(arc.a), Vector3::from(arc.b));
        for x in arc.samples(spacing, &mut rng) {
            // great-circle tangent at x
            let tangent = a.cross(&b).cross(&x).normalize();
            points.push(EdgePoint {
                x,
                tangent,
                sign: arc.sign,
                phase: rng.random_range(0.0..1.0),
            });
        }
    }
    let raw = trace(&points, true, omega, camera, cfg)?;
    let events = finish(raw, cfg, &mut rng);
    let trajectory = omega.to_trajectory(cfg.duration, 1e-3)?;
    Ok(Dataset {
        events,
        camera: *camera,
        trajectory: Some(trajectory),
        truth: GroundTruth::Rotation { omega: omega.clone() },
        config: cfg.clone(),
    })
}

/// Edges drawn on the plane `n . X + d = 0`, given as segments in the image
/// of the camera at `t = 0`, observed along `motion`.
///
/// Fails when the plane is not in front of that camera, or when the camera
/// crosses the plane at any traced time.
pub fn gen_planar_scene<M: Motion + ?Sized>(
    scene: &EdgeScene,
    normal: [f64; 3],
    d: f64,
    motion: &M,
    constant: Option<ConstantMotion>,
    camera: &CameraIntrinsics<f64>,
    cfg: &SynthConfig,
    trajectory: Option<PoseTrajectory<f64>>,
) -> Result<Dataset> {
    cfg.validate()?;
    let n = Vector3::from(normal);
    if !(n.norm() > 0.0) {
        return Err(Error::InvalidParameter("plane normal must be non-zero".into()));
    }
    let (n, d) = (n / n.norm(), d / n.norm());
    let steps = (cfg.duration / cfg.time_step).ceil().max(1.0) as usize;
    let (r0, c0) = motion.pose(0.0)?;
    let side = n.dot(&c0) + d;
    for i in 0..=steps {
        let (_, c) = motion.pose(cfg.duration * i as f64 / steps as f64)?;
        if (n.dot(&c) + d) * side <= 0.0 {
            return Err(Error::InvalidInput("camera crosses the scene plane".into()));
        }
    }
    let back_project = |p: &Point2<f64>| -> Result<Vector3<f64>> {
        let ray = r0 * Vector3::new((p.x - camera.cx) / camera.fx, (p.y - camera.cy) / camera.fy, 1.0);
        let denom = n.dot(&ray);
        let lambda = -(n.dot(&c0) + d) / denom;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput("scene plane is behind the camera".into()));
        }
        Ok(c0 + ray * lambda)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = Vec::new();
    for seg in scene.segments()? {
        let a = back_project(&Point2::from(seg.a))?;
        let b = back_project(&Point2::from(seg.b))?;
        let tangent = (b - a).normalize();
        for p in seg.samples(cfg.edge_spacing, &mut rng) {
            points.push(EdgePoint {
                x: back_project(&p)?,
                tangent,
                sign: seg.sign,
                phase: rng.random_range(0.0..1.0),
            });
        }
    }
    let raw = trace(&points, false, motion, camera, cfg)?;
    let events = finish(raw, cfg, &mut rng);
    let trajectory = match trajectory {
        Some(t) => Some(t),
        None => {
            let k = (cfg.duration / 1e-3).ceil() as usize;
            let poses = (0..=k)
                .map(|i| {
                    let t = (i as f64 * 1e-3).min(cfg.duration);
                    let (r, c) = motion.pose(t)?;
                    let r = nalgebra::Rotation3::from_matrix_unchecked(r);
                    Ok(Pose::new(t, UnitQuaternion::from_rotation_matrix(&r), c))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut poses = poses;
            poses.dedup_by(|a, b| (a.t - b.t).abs() < 1e-12);
            Some(PoseTrajectory::new(poses)?)
        }
    };
    Ok(Dataset {
        events,
        camera: *camera,
        trajectory,
        truth: GroundTruth::Planar(PlanarTruth {
            normal: n.into(),
            d,
            motion: constant,
        }),
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iwe::{objective, AccumMode, GridSpec, Splat};
    use crate::synth::Segment2;
    use crate::warp::{RotationParams, RotationWarp};

    fn camera() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(200.0, 200.0, 120.0, 90.0, 240, 180).unwrap()
    }

    #[test]
    fn piecewise_rotation_is_continuous_and_matches_rates() {
        let p = PiecewiseRotation::new(vec![(0.0, [0.0, 0.0, 2.0]), (0.1, [1.0, -1.0, 0.5])]).unwrap();
        let a = p.rotation_at(0.1 - 1e-9);
        let b = p.rotation_at(0.1);
        assert!((a - b).norm() < 1e-7);
        let traj = p.to_trajectory(0.2, 1e-3).unwrap();
        let w = traj.scene_angular_velocity(0.05, 1e-4).unwrap();
        assert!((w - Vector3::new(0.0, 0.0, 2.0)).norm() < 1e-6, "{w}");
        let w = traj.scene_angular_velocity(0.15, 1e-4).unwrap();
        assert!((w - Vector3::new(1.0, -1.0, 0.5)).norm() < 1e-6, "{w}");
        assert!(PiecewiseRotation::new(vec![(0.1, [0.0; 3])]).is_err());
    }

    #[test]
    fn roll_events_avoid_the_principal_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scene = EdgeScene::random_arcs(3000, (0.05, 0.2), &mut rng).unwrap();
        let cfg = SynthConfig {
            duration: 0.05,
            ..Default::default()
        };
        let d = gen_rotation_scene(&scene, &PiecewiseRotation::constant([0.0, 0.0, 2.0]), &camera(), &cfg).unwrap();
        let near = d
            .events
            .events()
            .iter()
            .filter(|e| (e.x - 120.0).hypot(e.y - 90.0) < 10.0)
            .count() as f64;
        let far = d
            .events
            .events()
            .iter()
            .filter(|e| {
                let r = (e.x - 120.0).hypot(e.y - 90.0);
                (60.0..70.0).contains(&r)
            })
            .count() as f64;
        // per unit area the outer ring is far denser
        let near_density = near / (std::f64::consts::PI * 100.0);
        let far_density = far / (std::f64::consts::PI * (4900.0 - 3600.0));
        assert!(far_density > 3.0 * near_density, "{near_density} {far_density}");
    }

    #[test]
    fn true_rotation_sharpens_the_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let scene = EdgeScene::random_arcs(3000, (0.05, 0.2), &mut rng).unwrap();
        let omega = [0.5, -1.0, 0.8];
        let cfg = SynthConfig {
            duration: 0.03,
            ..Default::default()
        };
        let d = gen_rotation_scene(&scene, &PiecewiseRotation::constant(omega), &camera(), &cfg).unwrap();
        let s = d.events.clone().with_t_ref(0.0);
        let g = GridSpec::new(240, 180);
        let f = |w: [f64; 3]| {
            objective(
                &s,
                &RotationWarp::new(RotationParams::new(w[0], w[1], w[2]), 0.0, camera()),
                g,
                AccumMode::Count,
                Splat::Bilinear,
            )
            .unwrap()
        };
        assert!(f(omega) > 2.0 * f([0.0; 3]), "{} {}", f(omega), f([0.0; 3]));
        let a = gen_rotation_scene(&scene, &PiecewiseRotation::constant(omega), &camera(), &cfg).unwrap();
        assert_eq!(a.events, d.events);
    }

    #[test]
    fn pure_translation_disparity() {
        let scene = EdgeScene::Image {
            segments: vec![Segment2::new([100.0, 20.0], [100.0, 160.0], 1)],
        };
        let (b, z, dur) = (0.2, 1.0, 0.5);
        let motion = ConstantMotion {
            omega: [0.0; 3],
            velocity: [b / dur, 0.0, 0.0],
        };
        let cfg = SynthConfig {
            duration: dur,
            ..Default::default()
        };
        let d = gen_planar_scene(&scene, [0.0, 0.0, -1.0], z, &motion, Some(motion), &camera(), &cfg, None).unwrap();
        assert!(!d.events.is_empty());
        for e in d.events.events() {
            // camera moves +x, the edge moves -x in the image
            let expected = 100.0 - 200.0 * (b / z) * (e.t / dur);
            assert!((e.x - expected).abs() < 1e-9, "{} vs {expected}", e.x);
        }
        let truth = match d.truth {
            GroundTruth::Planar(p) => p,
            _ => unreachable!(),
        };
        assert_eq!(truth.fronto_parallel_depth(), Some(1.0));
    }

    #[test]
    fn static_plane_emits_nothing_and_crossing_is_an_error() {
        let scene = EdgeScene::grid_pattern(240.0, 180.0, 20.0, 10.0);
        let still = ConstantMotion {
            omega: [0.0; 3],
            velocity: [0.0; 3],
        };
        let d = gen_planar_scene(&scene, [0.0, 0.0, -1.0], 2.0, &still, Some(still), &camera(), &SynthConfig::default(), None)
            .unwrap();
        assert!(d.events.is_empty());
        let through = ConstantMotion {
            omega: [0.0; 3],
            velocity: [0.0, 0.0, 30.0],
        };
        assert!(gen_planar_scene(&scene, [0.0, 0.0, -1.0], 2.0, &through, None, &camera(), &SynthConfig::default(), None).is_err());
        assert!(gen_planar_scene(&scene, [0.0, 0.0, 1.0], 2.0, &still, None, &camera(), &SynthConfig::default(), None).is_err());
    }

    #[test]
    fn planar_params_reference_shift() {
        let truth = PlanarTruth {
            normal: [0.0, 0.0, -1.0],
            d: 2.0,
            motion: Some(ConstantMotion {
                omega: [0.0; 3],
                velocity: [0.0, 0.0, 1.0],
            }),
        };
        // after 0.5 s the plane is 1.5 m away
        let p = truth.params_at(0.5).unwrap();
        assert!((p.v_over_d - Vector3::new(0.0, 0.0, 1.0 / 1.5)).norm() < 1e-12);
    }
}
