//! Raw float grids and 8-bit renders.
//!
//! Raw grid layout: an ASCII header line `CMAXGRID <width> <height> <tag>`
//! followed by `width * height` little-endian `f32` values, row-major.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::real::Real;

use super::{AccumMode, Iwe};

const MAGIC: &str = "CMAXGRID";

/// A decoded raw grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatGrid {
    pub width: usize,
    pub height: usize,
    pub tag: String,
    pub values: Vec<f32>,
}

impl FloatGrid {
    pub fn from_iwe<T: Real>(iwe: &Iwe<T>) -> Self {
        Self {
            width: iwe.width(),
            height: iwe.height(),
            tag: iwe.mode.tag().to_string(),
            values: iwe.values().iter().map(|v| v.as_f64() as f32).collect(),
        }
    }

    pub fn mode(&self) -> Option<AccumMode> {
        match self.tag.as_str() {
            "count" => Some(AccumMode::Count),
            "polarity" => Some(AccumMode::Polarity),
            _ => None,
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC} {} {} {}", self.width, self.height, self.tag)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let nl = bytes
            .iter()
            .position(|b| *b == b'\n')
            .ok_or_else(|| Error::CorruptGrid("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl])
            .map_err(|_| Error::CorruptGrid("header is not utf-8".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != MAGIC {
            return Err(Error::CorruptGrid(format!("bad header {header:?}")));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::CorruptGrid(format!("bad dimension {s:?}")))
        };
        let (width, height) = (parse(fields[1])?, parse(fields[2])?);
        let body = &bytes[nl + 1..];
        if width == 0 || height == 0 || body.len() != width * height * 4 {
            return Err(Error::CorruptGrid(format!(
                "expected {} bytes of data, found {}",
                width * height * 4,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self {
            width,
            height,
            tag: fields[3].to_string(),
            values,
        })
    }
}

/// 8-bit rendering.
///
/// Count images are min-max stretched to `[0, 255]` (inverted when
/// `negative`, so empty pixels are white). Polarity images map zero to 128
/// and scale symmetrically by the largest magnitude.
pub fn render_gray(values: &[f32], mode: AccumMode, negative: bool) -> Vec<u8> {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let px: Vec<u8> = match mode {
        AccumMode::Count => {
            let min = finite.clone().fold(f32::INFINITY, f32::min);
            let max = finite.fold(f32::NEG_INFINITY, f32::max);
            let span = max - min;
            values
                .iter()
                .map(|v| {
                    if !(span > 0.0) || !v.is_finite() {
                        0
                    } else {
                        (((v - min) / span) * 255.0).round().clamp(0.0, 255.0) as u8
                    }
                })
                .collect()
        }
        AccumMode::Polarity => {
            let m = finite.fold(0.0f32, |a, b| a.max(b.abs()));
            values
                .iter()
                .map(|v| {
                    if !(m > 0.0) || !v.is_finite() {
                        128
                    } else if *v < 0.0 {
                        (128.0 + 128.0 * v / m).round().clamp(0.0, 255.0) as u8
                    } else {
                        (128.0 + 127.0 * v / m).round().clamp(0.0, 255.0) as u8
                    }
                })
                .collect()
        }
    };
    if negative {
        px.into_iter().map(|p| 255 - p).collect()
    } else {
        px
    }
}

/// Binary PGM (`P5`).
pub fn write_pgm<W: Write>(mut w: W, width: usize, height: usize, px: &[u8]) -> Result<()> {
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(px)?;
    Ok(())
}

pub fn write_png_gray(path: &std::path::Path, width: usize, height: usize, px: &[u8]) -> Result<()> {
    image::save_buffer(path, px, width as u32, height as u32, image::ExtendedColorType::L8)?;
    Ok(())
}

pub fn write_png_rgb(path: &std::path::Path, width: usize, height: usize, px: &[u8]) -> Result<()> {
    image::save_buffer(path, px, width as u32, height as u32, image::ExtendedColorType::Rgb8)?;
    Ok(())
}

/// Red (near) to blue (far) colour map over `[lo, hi]`; NaN renders black.
pub fn colorize_depth(values: &[f32], lo: f32, hi: f32) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 3);
    for v in values {
        if !v.is_finite() {
            out.extend_from_slice(&[0, 0, 0]);
            continue;
        }
        let s = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
        // jet with near = red
        let x = 1.0 - s;
        let ch = |c: f32| (1.5 - (4.0 * x - c).abs()).clamp(0.0, 1.0);
        let (r, g, b) = (ch(3.0), ch(2.0), ch(1.0));
        out.extend_from_slice(&[(r * 255.0) as u8, (g * 255.0) as u8, (b * 255.0) as u8]);
    }
    out
}
