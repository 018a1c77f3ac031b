use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cmax::iwe::{AccumMode, Splat};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "cmax", version, about = "Contrast maximization for event cameras")]
pub struct Cli {
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long, global = true, env = "CMAX_OUT")]
    pub out: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Generate a synthetic event dataset with ground truth.
    Synth(SynthArgs),
    /// Estimate a constant optical flow by grid search and refinement.
    Flow(FlowArgs),
    /// Track angular velocity over sliding event windows.
    Rotate(RotateArgs),
    /// Plane-sweep depth for a patch, optionally a semi-dense map.
    Depth(DepthArgs),
    /// Estimate planar motion (rotation, v/d and plane normal).
    Homog(HomogArgs),
    /// Render a saved IWE grid to PNG or PGM.
    Render(RenderArgs),
    /// Re-execute the command recorded in a run.json.
    #[serde(skip)]
    Run(RunArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Flow,
    Rotation,
    Planar,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub problem: Problem,
    /// Image-plane velocity (px/s) for the flow problem.
    #[arg(long, num_args = 2, value_names = ["VX", "VY"], allow_negative_numbers = true)]
    pub v: Option<Vec<f64>>,
    /// Constant angular velocity (rad/s).
    #[arg(long, num_args = 3, value_names = ["WX", "WY", "WZ"], allow_negative_numbers = true)]
    pub omega: Option<Vec<f64>>,
    /// Camera translational velocity in the world frame (m/s), planar problem.
    #[arg(long, num_args = 3, value_names = ["VX", "VY", "VZ"], allow_negative_numbers = true)]
    pub velocity: Option<Vec<f64>>,
    /// Plane normal of `n . X + d = 0`, planar problem.
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "NZ"], allow_negative_numbers = true)]
    pub normal: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    pub plane_d: f64,
    /// Edge segments (flow, planar) or great-circle arcs (rotation).
    #[arg(long)]
    pub edges: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 0.1)]
    pub duration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_px: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter_s: f64,
    #[arg(long)]
    pub max_events: Option<usize>,
    #[arg(long, default_value_t = 240)]
    pub width: usize,
    #[arg(long, default_value_t = 180)]
    pub height: usize,
    /// Focal length (px) for the rotation and planar problems.
    #[arg(long, default_value_t = 200.0)]
    pub focal: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub time_step: f64,
    #[arg(long)]
    pub quantize: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct InputArgs {
    /// Directory holding events.txt, calib.txt, poses.txt and gt.json.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub calib: Option<PathBuf>,
    #[arg(long)]
    pub poses: Option<PathBuf>,
    /// Ground truth to score against.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long, default_value_t = 240)]
    pub width: usize,
    #[arg(long, default_value_t = 180)]
    pub height: usize,
    /// Keep events with `t >= t_start`.
    #[arg(long, allow_negative_numbers = true)]
    pub t_start: Option<f64>,
    /// Keep events with `t < t_end`.
    #[arg(long, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    /// Keep at most this many events after the time filter.
    #[arg(long)]
    pub max_events: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Count,
    Polarity,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplatArg {
    Nearest,
    Bilinear,
    Gaussian,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ImageArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Count)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = SplatArg::Bilinear)]
    pub splat: SplatArg,
    /// Gaussian splat width (px).
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Render count images in negative (dark edges on white).
    #[arg(long)]
    pub negative: bool,
}

impl ImageArgs {
    pub fn mode(&self) -> AccumMode {
        match self.mode {
            ModeArg::Count => AccumMode::Count,
            ModeArg::Polarity => AccumMode::Polarity,
        }
    }

    pub fn splat(&self) -> Splat<f64> {
        match self.splat {
            SplatArg::Nearest => Splat::Nearest,
            SplatArg::Bilinear => Splat::Bilinear,
            SplatArg::Gaussian => Splat::gaussian(self.eps),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FlowArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub image: ImageArgs,
    /// Search range `[-r, r]` per component (px/s).
    #[arg(long, default_value_t = 80.0)]
    pub range: f64,
    /// Lattice points per component.
    #[arg(long, default_value_t = 41)]
    pub steps: usize,
    #[arg(long)]
    pub no_refine: bool,
    /// Keep events inside the rectangle `x0 y0 w h` only.
    #[arg(long, num_args = 4, value_names = ["X0", "Y0", "W", "H"])]
    pub roi: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RotateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub image: ImageArgs,
    /// Events per window.
    #[arg(long, default_value_t = 30_000)]
    pub window: usize,
    /// Events between window starts; half a window when omitted.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Start every window from `--init` instead of the previous estimate.
    #[arg(long)]
    pub cold_start: bool,
    #[arg(long, num_args = 3, default_values_t = [0.0, 0.0, 0.0], allow_negative_numbers = true)]
    pub init: Vec<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DepthArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub image: ImageArgs,
    /// Reference view time; the middle of the slice when omitted.
    #[arg(long)]
    pub t_ref: Option<f64>,
    #[arg(long, default_value_t = 0.45)]
    pub z_min: f64,
    #[arg(long, default_value_t = 2.4)]
    pub z_max: f64,
    #[arg(long, default_value_t = 50)]
    pub z_steps: usize,
    /// Patch centre pixel; the sensor centre when omitted.
    #[arg(long, num_args = 2, value_names = ["X", "Y"])]
    pub center: Option<Vec<i64>>,
    /// Odd patch side (px).
    #[arg(long, default_value_t = 31)]
    pub patch: usize,
    /// Also compute a semi-dense depth map over the whole sensor.
    #[arg(long)]
    pub semidense: bool,
    /// Adaptive threshold window (px) for the semi-dense map.
    #[arg(long, default_value_t = 15)]
    pub k: usize,
    #[arg(long)]
    pub no_median: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct HomogArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub image: ImageArgs,
    #[arg(long, num_args = 3, default_values_t = [0.0, 0.0, 0.0], allow_negative_numbers = true)]
    pub init_omega: Vec<f64>,
    #[arg(long, num_args = 3, default_values_t = [0.0, 0.0, 0.0], allow_negative_numbers = true)]
    pub init_v_over_d: Vec<f64>,
    #[arg(long, num_args = 3, default_values_t = [0.0, 0.0, -1.0], allow_negative_numbers = true)]
    pub init_normal: Vec<f64>,
    /// Coarse-to-fine downscale factors.
    #[arg(long, value_delimiter = ',', default_values_t = [4.0, 2.0, 1.0])]
    pub pyramid: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Png,
    Pgm,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RenderArgs {
    /// A `.cmaxgrid` file written by another subcommand.
    pub input: PathBuf,
    #[arg(long)]
    pub negative: bool,
    #[arg(long, value_enum, default_value_t = ImageFormat::Png)]
    pub format: ImageFormat,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    pub config: PathBuf,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub version: String,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub command: Command,
}
