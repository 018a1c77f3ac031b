//! Plain-text dataset formats: `events.txt`, `calib.txt` and `groundtruth.txt`.

use std::io::{BufRead, Write};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::{CameraIntrinsics, Event, EventSlice, Polarity, Pose, PoseTrajectory};
use crate::error::{Error, Result};
use crate::real::Real;

/// Bookkeeping from [`load_events`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub lines: usize,
    pub loaded: usize,
    /// Events whose pixel lies outside the declared resolution.
    pub out_of_bounds: usize,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn numbers(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("not a number: {tok:?}")))
        })
        .collect()
}

fn is_skippable(line: &str) -> bool {
    let l = line.trim();
    l.is_empty() || l.starts_with('#') || l.starts_with('%')
}

/// Reads whitespace-separated `t x y p` lines (`p` in `{0, 1}`).
///
/// Events whose nearest pixel lies outside `width x height` are counted and
/// skipped. Timestamps are
/// kept as written and must be non-decreasing.
pub fn load_events<T: Real, R: BufRead>(
    reader: R,
    width: usize,
    height: usize,
) -> Result<(EventSlice<T>, LoadStats)> {
    let mut stats = LoadStats::default();
    let mut events = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        stats.lines += 1;
        if is_skippable(&line) {
            continue;
        }
        let v = numbers(&line, lineno)?;
        if v.len() != 4 {
            return Err(parse_err(lineno, format!("expected 4 fields, got {}", v.len())));
        }
        let (t, x, y) = (v[0], v[1], v[2]);
        if !t.is_finite() || t < 0.0 {
            return Err(parse_err(lineno, format!("invalid timestamp {t}")));
        }
        if t < last_t {
            return Err(parse_err(lineno, format!("timestamp {t} decreases")));
        }
        last_t = t;
        let p = match v[3] {
            p if p == 1.0 => Polarity::Positive,
            p if p == 0.0 || p == -1.0 => Polarity::Negative,
            p => return Err(parse_err(lineno, format!("polarity must be 0 or 1, got {p}"))),
        };
        if !(x >= -0.5 && y >= -0.5 && x < width as f64 - 0.5 && y < height as f64 - 0.5) {
            stats.out_of_bounds += 1;
            continue;
        }
        events.push(Event::new(T::lit(t), T::lit(x), T::lit(y), p));
    }
    stats.loaded = events.len();
    Ok((EventSlice::new(events), stats))
}

/// Writes events in the `t x y p` format that [`load_events`] reads.
pub fn write_events<T: Real, W: Write>(mut w: W, slice: &EventSlice<T>) -> Result<()> {
    for e in slice.events() {
        let p = match e.p {
            Polarity::Positive => 1,
            Polarity::Negative => 0,
        };
        writeln!(w, "{:.9} {} {} {}", e.t.as_f64(), e.x.as_f64(), e.y.as_f64(), p)?;
    }
    Ok(())
}

/// Reads a single `fx fy cx cy [k1 k2 p1 p2 k3]` line; the image size is not
/// part of the file.
pub fn load_calibration<T: Real, R: BufRead>(
    reader: R,
    width: usize,
    height: usize,
) -> Result<CameraIntrinsics<T>> {
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let v = numbers(&line, lineno)?;
        if v.len() < 4 || v.len() > 9 {
            return Err(parse_err(
                lineno,
                format!("expected 4 to 9 calibration values, got {}", v.len()),
            ));
        }
        let mut dist = [T::zero(); 5];
        for (d, x) in dist.iter_mut().zip(&v[4..]) {
            *d = T::lit(*x);
        }
        return CameraIntrinsics::with_distortion(
            T::lit(v[0]),
            T::lit(v[1]),
            T::lit(v[2]),
            T::lit(v[3]),
            dist,
            width,
            height,
        )
        .map_err(|e| parse_err(lineno, e.to_string()));
    }
    Err(parse_err(0, "empty calibration file"))
}

pub fn write_calibration<T: Real, W: Write>(mut w: W, k: &CameraIntrinsics<T>) -> Result<()> {
    let d = k.dist.map(|x| x.as_f64());
    writeln!(
        w,
        "{} {} {} {} {} {} {} {} {}",
        k.fx.as_f64(),
        k.fy.as_f64(),
        k.cx.as_f64(),
        k.cy.as_f64(),
        d[0],
        d[1],
        d[2],
        d[3],
        d[4]
    )?;
    Ok(())
}

/// Reads `t px py pz qx qy qz qw` lines (camera-to-world poses).
pub fn load_trajectory<T: Real, R: BufRead>(reader: R) -> Result<PoseTrajectory<T>> {
    let mut poses: Vec<Pose<T>> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if is_skippable(&line) {
            continue;
        }
        let v = numbers(&line, lineno)?;
        if v.len() != 8 {
            return Err(parse_err(lineno, format!("expected 8 fields, got {}", v.len())));
        }
        let t = T::lit(v[0]);
        if let Some(prev) = poses.last() {
            if !(t > prev.t) {
                return Err(parse_err(
                    lineno,
                    format!("timestamp {} not after previous {}", v[0], prev.t),
                ));
            }
        }
        let q = Quaternion::new(T::lit(v[7]), T::lit(v[4]), T::lit(v[5]), T::lit(v[6]));
        if !(q.norm() > T::lit(1e-12)) {
            return Err(parse_err(lineno, "zero quaternion"));
        }
        poses.push(Pose::new(
            t,
            UnitQuaternion::new_normalize(q),
            Vector3::new(T::lit(v[1]), T::lit(v[2]), T::lit(v[3])),
        ));
    }
    PoseTrajectory::new(poses)
}

pub fn write_trajectory<T: Real, W: Write>(mut w: W, traj: &PoseTrajectory<T>) -> Result<()> {
    writeln!(w, "# camera-to-world: t px py pz qx qy qz qw")?;
    for p in traj.poses() {
        let q = p.rotation.into_inner();
        writeln!(
            w,
            "{:.9} {} {} {} {} {} {} {}",
            p.t.as_f64(),
            p.translation.x.as_f64(),
            p.translation.y.as_f64(),
            p.translation.z.as_f64(),
            q.i.as_f64(),
            q.j.as_f64(),
            q.k.as_f64(),
            q.w.as_f64()
        )?;
    }
    Ok(())
}
