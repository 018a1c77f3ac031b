use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cmax::events::{load_calibration, load_events, load_trajectory, CameraIntrinsics, EventSlice, PoseTrajectory};
use cmax::iwe::export::{render_gray, write_pgm, write_png_gray, FloatGrid};
use cmax::iwe::{AccumMode, Iwe};
use cmax::synth::GroundTruth;
use serde::Serialize;

use crate::args::{ImageFormat, InputArgs};
use crate::UsageError;

/// Input files after resolution, all absolute.
pub struct Inputs {
    pub events: PathBuf,
    pub calib: Option<PathBuf>,
    pub poses: Option<PathBuf>,
    pub gt: Option<PathBuf>,
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).with_context(|| format!("resolving {}", p.display()))
}

impl InputArgs {
    /// Fills file paths from `--dataset` and makes them absolute, so the
    /// recorded config still resolves from another working directory.
    pub fn resolve(&mut self, need_calib: bool, need_poses: bool) -> Result<Inputs> {
        let from_dataset = |name: &str| self.dataset.as_ref().map(|d| d.join(name));
        let events = self
            .events
            .clone()
            .or_else(|| from_dataset("events.txt"))
            .ok_or_else(|| UsageError("pass --events or --dataset".into()))?;
        let calib = self.calib.clone().or_else(|| from_dataset("calib.txt").filter(|p| p.exists()));
        if need_calib && calib.is_none() {
            return Err(UsageError("this command needs a calibration: pass --calib or --dataset".into()).into());
        }
        let poses = self.poses.clone().or_else(|| from_dataset("poses.txt").filter(|p| p.exists()));
        let gt = self.gt.clone().or_else(|| from_dataset("gt.json").filter(|p| p.exists()));
        if need_poses && poses.is_none() {
            return Err(UsageError("this command needs a trajectory: pass --poses or a dataset with poses.txt".into()).into());
        }
        if self.width == 0 || self.height == 0 {
            return Err(UsageError("sensor size must be non-zero".into()).into());
        }
        for p in [Some(&events), calib.as_ref(), poses.as_ref(), gt.as_ref()].into_iter().flatten() {
            if !p.is_file() {
                return Err(UsageError(format!("input file not found: {}", p.display())).into());
            }
        }
        let inputs = Inputs {
            events: absolute(&events)?,
            calib: calib.map(|p| absolute(&p)).transpose()?,
            poses: poses.map(|p| absolute(&p)).transpose()?,
            gt: gt.map(|p| absolute(&p)).transpose()?,
        };
        self.dataset = None;
        self.events = Some(inputs.events.clone());
        self.calib = inputs.calib.clone();
        self.poses = inputs.poses.clone();
        self.gt = inputs.gt.clone();
        Ok(inputs)
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

pub fn load_camera(inputs: &Inputs, args: &InputArgs) -> Result<CameraIntrinsics<f64>> {
    let path = inputs.calib.as_ref().expect("resolved with need_calib");
    load_calibration(open(path)?, args.width, args.height).with_context(|| format!("reading {}", path.display()))
}

/// Loads the events and applies the time window and count limit.
pub fn load_slice(inputs: &Inputs, args: &InputArgs) -> Result<EventSlice<f64>> {
    let (all, stats) = load_events::<f64, _>(open(&inputs.events)?, args.width, args.height)
        .with_context(|| format!("reading {}", inputs.events.display()))?;
    if stats.out_of_bounds > 0 {
        log::warn!("{} events outside {}x{} skipped", stats.out_of_bounds, args.width, args.height);
    }
    let lo = args.t_start.unwrap_or(f64::NEG_INFINITY);
    let hi = args.t_end.unwrap_or(f64::INFINITY);
    let mut events: Vec<_> = all.into_events().into_iter().filter(|e| e.t >= lo && e.t < hi).collect();
    if let Some(n) = args.max_events {
        events.truncate(n);
    }
    if events.is_empty() {
        anyhow::bail!("no events left in {} after filtering", inputs.events.display());
    }
    log::info!("{} events loaded", events.len());
    Ok(EventSlice::new(events))
}

pub fn load_poses(inputs: &Inputs) -> Result<Option<PoseTrajectory<f64>>> {
    inputs
        .poses
        .as_ref()
        .map(|p| load_trajectory(open(p)?).with_context(|| format!("reading {}", p.display())))
        .transpose()
}

pub fn load_truth(inputs: &Inputs) -> Result<Option<GroundTruth>> {
    #[derive(serde::Deserialize)]
    struct GtFile {
        truth: GroundTruth,
    }
    let Some(path) = &inputs.gt else { return Ok(None) };
    let gt: GtFile = serde_json::from_reader(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(gt.truth))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_image(path: &Path, width: usize, height: usize, px: &[u8], format: ImageFormat) -> Result<()> {
    match format {
        ImageFormat::Png => write_png_gray(path, width, height, px)?,
        ImageFormat::Pgm => write_pgm(create(path)?, width, height, px)?,
    }
    Ok(())
}

/// Saves `name.cmaxgrid` and a grayscale `name.png`.
pub fn write_iwe(dir: &Path, name: &str, iwe: &Iwe<f64>, negative: bool) -> Result<()> {
    let grid = FloatGrid::from_iwe(iwe);
    grid.write(create(&dir.join(format!("{name}.cmaxgrid")))?)?;
    let px = render_gray(&grid.values, iwe.mode, negative);
    write_image(&dir.join(format!("{name}.png")), grid.width, grid.height, &px, ImageFormat::Png)
}

/// Grayscale of a 2-D heatmap or any non-negative field.
pub fn write_field_png(path: &Path, width: usize, height: usize, values: &[f32]) -> Result<()> {
    write_image(path, width, height, &render_gray(values, AccumMode::Count, false), ImageFormat::Png)
}
