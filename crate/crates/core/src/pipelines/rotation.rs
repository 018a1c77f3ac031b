use std::io::Write;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::events::{slice_events, CameraIntrinsics, EventSlice, PoseTrajectory, RefTime, Windowing};
use crate::iwe::{contrast, AccumMode, GridSpec, Splat};
use crate::optimize::{conjugate_gradient_ascent, AscentOptions, BetaRule};
use crate::real::Real;
use crate::warp::{RotationParams, RotationWarp};

use super::{accumulate_auto, score};

#[derive(Debug, Clone)]
pub struct RotationConfig<T: Real> {
    /// Events per window.
    pub window: usize,
    /// Events between window starts; `None` means half a window.
    pub stride: Option<usize>,
    pub warm_start: bool,
    pub init: [T; 3],
    pub mode: AccumMode,
    pub splat: Splat<T>,
    pub ascent: AscentOptions<T>,
}

impl<T: Real> Default for RotationConfig<T> {
    fn default() -> Self {
        Self {
            window: 30_000,
            stride: None,
            warm_start: true,
            init: [T::zero(); 3],
            mode: AccumMode::Count,
            splat: Splat::Bilinear,
            ascent: AscentOptions::new(vec![T::lit(1e-3); 3]).initial_step(T::lit(100.0)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaSample<T> {
    pub t_mid: T,
    pub omega: [T; 3],
    pub f_star: T,
    pub f_zero: T,
    pub n_events: usize,
    pub discarded_fraction: T,
    pub iterations: usize,
    pub evaluations: usize,
    /// Optimum expels more than a quarter of the events, or barely beats
    /// the identity warp.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AngularVelocitySeries<T> {
    pub samples: Vec<OmegaSample<T>>,
}

impl<T: Real> AngularVelocitySeries<T> {
    /// CSV: `t, wx, wy, wz, f, n_events`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,wx,wy,wz,f,n_events")?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.t_mid, s.omega[0], s.omega[1], s.omega[2], s.f_star, s.n_events
            )?;
        }
        Ok(())
    }
}

fn estimate_window<T: Real>(
    win: &EventSlice<T>,
    camera: &CameraIntrinsics<T>,
    init: [T; 3],
    cfg: &RotationConfig<T>,
) -> Result<OmegaSample<T>> {
    let grid = GridSpec::new(camera.width, camera.height);
    let t_ref = win.t_ref();
    let warp = |w: &[T]| RotationWarp::new(RotationParams::new(w[0], w[1], w[2]), t_ref, *camera);
    let f = |w: &[T]| score(win, &warp(w), grid, cfg.mode, cfg.splat);
    let r = conjugate_gradient_ascent(f, &init, &cfg.ascent, BetaRule::PolakRibierePlus);
    let zero = [T::zero(); 3];
    let f_zero = f(&zero);
    let at_star = accumulate_auto(win, &warp(&r.theta_star), grid, cfg.mode, cfg.splat)?;
    let discarded_fraction = T::from_usize_lossy(at_star.n_discarded) / T::from_usize_lossy(win.len().max(1));
    let f_star = contrast(&at_star).f;
    Ok(OmegaSample {
        t_mid: win.mid_time(),
        omega: [r.theta_star[0], r.theta_star[1], r.theta_star[2]],
        f_star,
        f_zero,
        n_events: win.len(),
        discarded_fraction,
        iterations: r.iterations,
        evaluations: r.evaluations,
        low_confidence: discarded_fraction > T::lit(0.25) || f_star < T::lit(1.05) * f_zero,
    })
}

/// Angular velocity per sliding window of events.
///
/// With `warm_start`, windows run in order and each one starts from the
/// previous estimate; otherwise windows run in parallel from `init`.
/// Streams shorter than one window produce an empty series.
pub fn track_rotation<T: Real>(
    stream: &EventSlice<T>,
    camera: &CameraIntrinsics<T>,
    cfg: &RotationConfig<T>,
) -> Result<AngularVelocitySeries<T>> {
    if cfg.window == 0 {
        return Err(Error::InvalidParameter("window must hold at least one event".into()));
    }
    if stream.len() < cfg.window {
        return Ok(AngularVelocitySeries::default());
    }
    let stride = cfg.stride.unwrap_or((cfg.window / 2).max(1));
    let mut windows = slice_events(
        stream,
        Windowing::Count {
            size: cfg.window,
            stride,
        },
        RefTime::Midpoint,
    )?;
    windows.retain(|w| w.len() == cfg.window);
    let samples = if cfg.warm_start {
        let mut out: Vec<OmegaSample<T>> = Vec::with_capacity(windows.len());
        for w in &windows {
            let init = out.last().map(|s| s.omega).unwrap_or(cfg.init);
            out.push(estimate_window(w, camera, init, cfg)?);
        }
        out
    } else {
        windows
            .par_iter()
            .map(|w| estimate_window(w, camera, cfg.init, cfg))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(AngularVelocitySeries { samples })
}

/// Source of true angular velocity for evaluation.
pub enum RateTruth<'a, T: Real> {
    Analytic(&'a (dyn Fn(T) -> Vector3<T> + Sync)),
    /// Central differences of the interpolated rotations with step `h`
    /// (shrunk near the ends of the trajectory).
    Trajectory { traj: &'a PoseTrajectory<T>, h: T },
}

impl<T: Real> RateTruth<'_, T> {
    pub fn at(&self, t: T) -> Result<Vector3<T>> {
        match self {
            RateTruth::Analytic(f) => Ok(f(t)),
            RateTruth::Trajectory { traj, h } => {
                if !traj.covers(t) {
                    return Err(Error::OutOfRange {
                        t: t.as_f64(),
                        start: traj.start().as_f64(),
                        end: traj.end().as_f64(),
                    });
                }
                let h = h.min(t - traj.start()).min(traj.end() - t);
                if !(h > T::zero()) {
                    return Err(Error::OutOfRange {
                        t: t.as_f64(),
                        start: traj.start().as_f64(),
                        end: traj.end().as_f64(),
                    });
                }
                traj.scene_angular_velocity(t, h)
            }
        }
    }
}

/// Quartile summary of per-sample error norms within one time interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxStats<T> {
    pub t_start: T,
    pub t_end: T,
    pub n: usize,
    pub min: T,
    pub q1: T,
    pub median: T,
    pub q3: T,
    pub max: T,
    pub rms: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport<T> {
    /// RMS of the error vector norm (deg/s).
    pub rms_deg: T,
    pub per_interval: Vec<BoxStats<T>>,
    /// Error norm of each sample (deg/s).
    pub errors_deg: Vec<T>,
}

impl<T: Real> ErrorReport<T> {
    pub fn write_boxplot_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_start,t_end,n,min,q1,median,q3,max,rms")?;
        for b in &self.per_interval {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                b.t_start, b.t_end, b.n, b.min, b.q1, b.median, b.q3, b.max, b.rms
            )?;
        }
        Ok(())
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile<T: Real>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn rms<T: Real>(v: &[T]) -> T {
    if v.is_empty() {
        return T::zero();
    }
    (v.iter().map(|e| *e * *e).sum::<T>() / T::from_usize_lossy(v.len())).sqrt()
}

/// Angular velocity error against ground truth, overall and split into
/// `intervals` equal time spans (for box plots).
pub fn rms_angular_error<T: Real>(
    est: &AngularVelocitySeries<T>,
    truth: &RateTruth<'_, T>,
    intervals: usize,
) -> Result<ErrorReport<T>> {
    let deg = T::lit(180.0 / std::f64::consts::PI);
    let errors_deg = est
        .samples
        .iter()
        .map(|s| {
            let gt = truth.at(s.t_mid)?;
            Ok((Vector3::from(s.omega) - gt).norm() * deg)
        })
        .collect::<Result<Vec<T>>>()?;
    let mut per_interval = Vec::new();
    if let (Some(first), Some(last)) = (est.samples.first(), est.samples.last()) {
        let k = intervals.max(1);
        let (t0, t1) = (first.t_mid, last.t_mid);
        let span = (t1 - t0) / T::from_usize_lossy(k);
        for i in 0..k {
            let a = t0 + span * T::from_usize_lossy(i);
            let b = if i + 1 == k { t1 } else { a + span };
            let mut v: Vec<T> = est
                .samples
                .iter()
                .zip(&errors_deg)
                .filter(|(s, _)| s.t_mid >= a && (s.t_mid < b || (i + 1 == k && s.t_mid <= b)))
                .map(|(_, e)| *e)
                .collect();
            if v.is_empty() {
                continue;
            }
            v.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
            per_interval.push(BoxStats {
                t_start: a,
                t_end: b,
                n: v.len(),
                min: v[0],
                q1: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q3: quantile(&v, 0.75),
                max: v[v.len() - 1],
                rms: rms(&v),
            });
        }
    }
    Ok(ErrorReport {
        rms_deg: rms(&errors_deg),
        per_interval,
        errors_deg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_rotation_scene, EdgeScene, PiecewiseRotation, SynthConfig};
    use rand::SeedableRng;

    fn camera() -> CameraIntrinsics<f64> {
        CameraIntrinsics::new(200.0, 200.0, 120.0, 90.0, 240, 180).unwrap()
    }

    fn sample(t: f64, w: [f64; 3]) -> OmegaSample<f64> {
        OmegaSample {
            t_mid: t,
            omega: w,
            f_star: 1.0,
            f_zero: 0.5,
            n_events: 10,
            discarded_fraction: 0.0,
            iterations: 0,
            evaluations: 0,
            low_confidence: false,
        }
    }

    #[test]
    fn rms_of_exact_and_offset_series() {
        let gt = |t: f64| Vector3::new(t, 2.0 * t, -1.0);
        let truth = RateTruth::Analytic(&gt);
        let exact = AngularVelocitySeries {
            samples: (0..8).map(|i| sample(i as f64, [i as f64, 2.0 * i as f64, -1.0])).collect(),
        };
        assert_eq!(rms_angular_error(&exact, &truth, 4).unwrap().rms_deg, 0.0);
        let off = 10f64.to_radians();
        let shifted = AngularVelocitySeries {
            samples: (0..8)
                .map(|i| sample(i as f64, [i as f64 + off, 2.0 * i as f64, -1.0]))
                .collect(),
        };
        let rep = rms_angular_error(&shifted, &truth, 4).unwrap();
        assert!((rep.rms_deg - 10.0).abs() < 1e-9);
        assert_eq!(rep.per_interval.len(), 4);
        assert_eq!(rep.per_interval.iter().map(|b| b.n).sum::<usize>(), 8);
        assert!((rep.per_interval[0].median - 10.0).abs() < 1e-9);
    }

    #[test]
    fn trajectory_truth_out_of_range_is_an_error() {
        let p = PiecewiseRotation::constant([0.0, 0.0, 1.0]);
        let traj = p.to_trajectory(1.0, 0.01).unwrap();
        let truth = RateTruth::Trajectory { traj: &traj, h: 1e-3 };
        let series = AngularVelocitySeries {
            samples: vec![sample(2.0, [0.0; 3])],
        };
        assert!(rms_angular_error(&series, &truth, 1).is_err());
        assert!((truth.at(0.5).unwrap() - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn short_stream_gives_empty_series() {
        let s = EventSlice::new(vec![crate::events::Event::new(0.0, 1.0, 1.0, crate::events::Polarity::Positive)]);
        let r = track_rotation(&s, &camera(), &RotationConfig::default()).unwrap();
        assert!(r.samples.is_empty());
    }

    fn roll_stream(omega: [f64; 3], seed: u64) -> EventSlice<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let scene = EdgeScene::random_arcs(2500, (0.05, 0.2), &mut rng).unwrap();
        let cfg = SynthConfig {
            duration: 0.06,
            rate: 0.5,
            seed,
            ..Default::default()
        };
        gen_rotation_scene(&scene, &PiecewiseRotation::constant(omega), &camera(), &cfg)
            .unwrap()
            .events
    }

    #[test]
    fn constant_roll_within_three_percent() {
        let s = roll_stream([0.0, 0.0, 2.0], 4);
        let cfg = RotationConfig {
            window: 8000,
            ..Default::default()
        };
        let series = track_rotation(&s, &camera(), &cfg).unwrap();
        assert!(!series.samples.is_empty());
        for w in &series.samples {
            let err = (Vector3::from(w.omega) - Vector3::new(0.0, 0.0, 2.0)).norm() / 2.0;
            assert!(err < 0.03, "{:?}", w.omega);
        }
        for p in series.samples.windows(2) {
            assert!(p[1].t_mid > p[0].t_mid);
        }
    }

    #[test]
    fn warm_and_cold_starts_agree() {
        let s = roll_stream([1.0, -2.0, 0.5], 6);
        let warm = RotationConfig {
            window: 8000,
            ..Default::default()
        };
        let cold = RotationConfig {
            warm_start: false,
            ..warm.clone()
        };
        let a = track_rotation(&s, &camera(), &warm).unwrap();
        let b = track_rotation(&s, &camera(), &cold).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            let d = (Vector3::from(x.omega) - Vector3::from(y.omega)).norm();
            assert!(d < 0.03 * Vector3::from(x.omega).norm(), "{:?} {:?}", x, y);
        }
    }

    #[test]
    fn time_reversal_negates_rates() {
        let s = roll_stream([1.0, -2.0, 0.5], 8);
        let cfg = RotationConfig {
            window: s.len(),
            ..Default::default()
        };
        let fwd = track_rotation(&s, &camera(), &cfg).unwrap();
        let rev = track_rotation(&s.time_reversed(), &camera(), &cfg).unwrap();
        let (a, b) = (Vector3::from(fwd.samples[0].omega), Vector3::from(rev.samples[0].omega));
        assert!((a + b).norm() < 0.03 * a.norm(), "{a} {b}");
    }
}
