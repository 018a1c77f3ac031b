mod depth;
mod flow;
mod homog;
mod render;
mod rotate;
mod synth;

use std::path::Path;

use anyhow::{Context, Result};

use crate::args::Command;
use crate::UsageError;

/// Runs one subcommand and returns it with inputs resolved, ready to be
/// recorded in `run.json`.
pub fn dispatch(mut command: Command, out: &Path) -> Result<Command> {
    match &mut command {
        Command::Synth(a) => synth::run(a, out)?,
        Command::Flow(a) => flow::run(a, out)?,
        Command::Rotate(a) => rotate::run(a, out)?,
        Command::Depth(a) => depth::run(a, out)?,
        Command::Homog(a) => homog::run(a, out)?,
        Command::Render(a) => render::run(a, out)?,
        Command::Run(_) => unreachable!("run is unwrapped before dispatch"),
    }
    Ok(command)
}

pub(crate) fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub(crate) fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

pub(crate) fn vec3(v: &[f64]) -> nalgebra::Vector3<f64> {
    nalgebra::Vector3::new(v[0], v[1], v[2])
}
