use nalgebra::{Point2, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Straight edge in an image plane with a brightness step sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment2 {
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// `+1` or `-1`.
    pub sign: i8,
}

impl Segment2 {
    pub fn new(a: [f64; 2], b: [f64; 2], sign: i8) -> Self {
        Self { a, b, sign }
    }

    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }

    /// Unit normal: the tangent turned by +90 degrees.
    pub fn normal(&self) -> [f64; 2] {
        let l = self.length();
        [-(self.b[1] - self.a[1]) / l, (self.b[0] - self.a[0]) / l]
    }

    /// Sample points at `spacing`, offset by a random phase.
    pub(crate) fn samples(&self, spacing: f64, rng: &mut ChaCha8Rng) -> Vec<Point2<f64>> {
        let l = self.length();
        let mut s = rng.random_range(0.0..spacing);
        let mut out = Vec::new();
        while s < l {
            let u = s / l;
            out.push(Point2::new(
                self.a[0] + u * (self.b[0] - self.a[0]),
                self.a[1] + u * (self.b[1] - self.a[1]),
            ));
            s += spacing;
        }
        out
    }
}

/// Great-circle arc between two unit bearings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereArc {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub sign: i8,
}

impl SphereArc {
    pub fn angle(&self) -> f64 {
        Vector3::from(self.a).angle(&Vector3::from(self.b))
    }

    /// Points on the arc every `spacing` radians, via slerp.
    pub(crate) fn samples(&self, spacing: f64, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
        let (a, b) = (Vector3::from(self.a), Vector3::from(self.b));
        let th = self.angle();
        let mut s = rng.random_range(0.0..spacing);
        let mut out = Vec::new();
        while s < th {
            let u = s / th;
            let p = (a * ((1.0 - u) * th).sin() + b * (u * th).sin()) / th.sin();
            out.push(p.normalize());
            s += spacing;
        }
        out
    }
}

/// Edge set of a synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EdgeScene {
    /// Segments in sensor pixel coordinates (flow), or in the reference
    /// view of a plane (planar scenes).
    Image { segments: Vec<Segment2> },
    /// Arcs on the unit sphere of viewing directions (rotation scenes).
    Sphere { arcs: Vec<SphereArc> },
}

fn random_sign(rng: &mut ChaCha8Rng) -> i8 {
    if rng.random_bool(0.5) {
        1
    } else {
        -1
    }
}

impl EdgeScene {
    /// `count` segments with uniformly random centre inside
    /// `[margin, w - margin] x [margin, h - margin]`, orientation and length
    /// in `[min_len, max_len]`.
    pub fn random_segments(
        count: usize,
        width: f64,
        height: f64,
        margin: f64,
        len: (f64, f64),
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if !(len.0 > 0.0 && len.0 <= len.1) || !(2.0 * margin < width.min(height)) {
            return Err(Error::InvalidParameter("invalid segment scene bounds".into()));
        }
        let segments = (0..count)
            .map(|_| {
                let cx = rng.random_range(margin..width - margin);
                let cy = rng.random_range(margin..height - margin);
                let th = rng.random_range(0.0..std::f64::consts::PI);
                let l = if len.1 > len.0 { rng.random_range(len.0..len.1) } else { len.0 };
                let (dx, dy) = (0.5 * l * th.cos(), 0.5 * l * th.sin());
                Segment2::new([cx - dx, cy - dy], [cx + dx, cy + dy], random_sign(rng))
            })
            .collect();
        Ok(EdgeScene::Image { segments })
    }

    /// `count` short arcs with centres uniform on the sphere, random
    /// orientation and angular length in `[min, max]` radians.
    pub fn random_arcs(count: usize, len: (f64, f64), rng: &mut ChaCha8Rng) -> Result<Self> {
        if !(len.0 > 0.0 && len.0 <= len.1 && len.1 < std::f64::consts::PI) {
            return Err(Error::InvalidParameter("invalid arc length range".into()));
        }
        let arcs = (0..count)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                let r = (1.0 - z * z).sqrt();
                let c = Vector3::new(r * phi.cos(), r * phi.sin(), z);
                let helper = if c.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
                let e1 = c.cross(&helper).normalize();
                let e2 = c.cross(&e1);
                let psi = rng.random_range(0.0..std::f64::consts::TAU);
                let tangent = e1 * psi.cos() + e2 * psi.sin();
                let half = 0.5 * if len.1 > len.0 { rng.random_range(len.0..len.1) } else { len.0 };
                let a = c * half.cos() - tangent * half.sin();
                let b = c * half.cos() + tangent * half.sin();
                SphereArc {
                    a: a.into(),
                    b: b.into(),
                    sign: random_sign(rng),
                }
            })
            .collect();
        Ok(EdgeScene::Sphere { arcs })
    }

    /// A regular grid of horizontal and vertical segments, alternating signs.
    pub fn grid_pattern(width: f64, height: f64, pitch: f64, margin: f64) -> Self {
        let mut segments = Vec::new();
        let mut k = 0;
        let mut x = margin;
        while x <= width - margin {
            segments.push(Segment2::new([x, margin], [x, height - margin], if k % 2 == 0 { 1 } else { -1 }));
            x += pitch;
            k += 1;
        }
        let mut y = margin;
        while y <= height - margin {
            segments.push(Segment2::new([margin, y], [width - margin, y], if k % 2 == 0 { 1 } else { -1 }));
            y += pitch;
            k += 1;
        }
        EdgeScene::Image { segments }
    }

    pub(crate) fn segments(&self) -> Result<&[Segment2]> {
        match self {
            EdgeScene::Image { segments } => Ok(segments),
            EdgeScene::Sphere { .. } => Err(Error::InvalidInput("expected an image-plane edge scene".into())),
        }
    }

    pub(crate) fn arcs(&self) -> Result<&[SphereArc]> {
        match self {
            EdgeScene::Sphere { arcs } => Ok(arcs),
            EdgeScene::Image { .. } => Err(Error::InvalidInput("expected a sphere edge scene".into())),
        }
    }
}
