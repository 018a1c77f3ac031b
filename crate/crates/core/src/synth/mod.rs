//! Synthetic event streams with exact ground truth.
//!
//! Events come from a geometric model: every sample point of an edge fires
//! one event each time the edge has travelled `1 / rate` pixels along its
//! image normal since the previous one. Polarity is the edge's brightness
//! step sign times the sign of that normal motion.

mod flow;
mod motion;
mod scene;

pub use flow::gen_flow_scene;
pub use motion::{gen_planar_scene, gen_rotation_scene, ConstantMotion, Motion, PiecewiseRotation, PlanarTruth};
pub use scene::{EdgeScene, Segment2, SphereArc};

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{write_calibration, write_events, write_trajectory, CameraIntrinsics, Event, EventSlice, PoseTrajectory};

/// Sampling and noise settings shared by every generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Events per edge sample point per pixel of normal travel.
    pub rate: f64,
    /// Spacing of edge sample points, in pixels of the reference image.
    pub edge_spacing: f64,
    /// Gaussian position noise (px).
    pub sigma_px: f64,
    /// Gaussian timestamp jitter (s).
    pub jitter_s: f64,
    pub duration: f64,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Time step used to trace moving points in the 3-D generators (s).
    pub time_step: f64,
    /// Thin the result uniformly at random down to this many events.
    pub max_events: Option<usize>,
    /// Round positions to integer pixels, as a real sensor reports them.
    pub quantize: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rate: 1.0,
            edge_spacing: 1.0,
            sigma_px: 0.0,
            jitter_s: 0.0,
            duration: 0.1,
            seed: 0,
            width: 240,
            height: 180,
            time_step: 1e-4,
            max_events: None,
            quantize: false,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.rate > 0.0) {
            return bad("rate must be positive");
        }
        if !(self.edge_spacing > 0.0) {
            return bad("edge spacing must be positive");
        }
        if !(self.sigma_px >= 0.0) || !(self.jitter_s >= 0.0) {
            return bad("noise levels must be non-negative");
        }
        if !(self.duration > 0.0) || !(self.time_step > 0.0) {
            return bad("duration and time step must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("sensor size must be non-zero");
        }
        Ok(())
    }
}

/// Ground truth written next to a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum GroundTruth {
    Flow { v: [f64; 2] },
    Rotation { omega: PiecewiseRotation },
    Planar(PlanarTruth),
}

/// A generated dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub events: EventSlice<f64>,
    pub camera: CameraIntrinsics<f64>,
    pub trajectory: Option<PoseTrajectory<f64>>,
    pub truth: GroundTruth,
    pub config: SynthConfig,
}

#[derive(Serialize)]
struct GtFile<'a> {
    truth: &'a GroundTruth,
    config: &'a SynthConfig,
    seed: u64,
    n_events: usize,
}

impl Dataset {
    /// Writes `events.txt`, `calib.txt`, `poses.txt` (when there is a
    /// trajectory) and `gt.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_events(BufWriter::new(fs::File::create(dir.join("events.txt"))?), &self.events)?;
        write_calibration(fs::File::create(dir.join("calib.txt"))?, &self.camera)?;
        if let Some(traj) = &self.trajectory {
            write_trajectory(BufWriter::new(fs::File::create(dir.join("poses.txt"))?), traj)?;
        }
        let gt = GtFile {
            truth: &self.truth,
            config: &self.config,
            seed: self.config.seed,
            n_events: self.events.len(),
        };
        fs::write(dir.join("gt.json"), serde_json::to_string_pretty(&gt)?)?;
        Ok(())
    }
}

/// Applies noise, bounds, quantization and thinning, then sorts by time.
pub(crate) fn finish(mut raw: Vec<Event<f64>>, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> EventSlice<f64> {
    if cfg.sigma_px > 0.0 || cfg.jitter_s > 0.0 {
        let pos = Normal::new(0.0, cfg.sigma_px.max(f64::MIN_POSITIVE)).expect("finite sigma");
        let tim = Normal::new(0.0, cfg.jitter_s.max(f64::MIN_POSITIVE)).expect("finite jitter");
        for e in &mut raw {
            if cfg.sigma_px > 0.0 {
                e.x += pos.sample(rng);
                e.y += pos.sample(rng);
            }
            if cfg.jitter_s > 0.0 {
                e.t = (e.t + tim.sample(rng)).abs();
            }
        }
    }
    if cfg.quantize {
        for e in &mut raw {
            e.x = e.x.round();
            e.y = e.y.round();
        }
    }
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    // keep positions whose nearest pixel is on the sensor
    raw.retain(|e| e.x >= -0.5 && e.y >= -0.5 && e.x < w - 0.5 && e.y < h - 0.5);
    if let Some(n) = cfg.max_events {
        if raw.len() > n {
            // partial Fisher-Yates keeps a uniform subset
            for i in 0..n {
                let j = rng.random_range(i..raw.len());
                raw.swap(i, j);
            }
            raw.truncate(n);
        }
    }
    raw.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.x.total_cmp(&b.x)).then(a.y.total_cmp(&b.y)));
    EventSlice::new(raw)
}
