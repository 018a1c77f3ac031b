use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{Context, Result};
use cmax::iwe::export::{render_gray, FloatGrid};
use cmax::iwe::AccumMode;

use super::{ensure_dir, usage};
use crate::args::{ImageFormat, RenderArgs};
use crate::io::write_image;

pub fn run(a: &mut RenderArgs, out: &Path) -> Result<()> {
    if !a.input.is_file() {
        return Err(usage(format!("input file not found: {}", a.input.display())));
    }
    a.input = std::path::absolute(&a.input)?;
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let grid = FloatGrid::read(BufReader::new(file)).with_context(|| format!("reading {}", a.input.display()))?;
    let mode = grid.mode().unwrap_or(AccumMode::Count);
    let px = render_gray(&grid.values, mode, a.negative);
    let stem = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("grid");
    let ext = match a.format {
        ImageFormat::Png => "png",
        ImageFormat::Pgm => "pgm",
    };
    ensure_dir(out)?;
    write_image(&out.join(format!("{stem}.{ext}")), grid.width, grid.height, &px, a.format)
}
