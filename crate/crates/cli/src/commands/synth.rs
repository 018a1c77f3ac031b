use std::path::Path;

use anyhow::Result;
use cmax::events::CameraIntrinsics;
use cmax::synth::{gen_flow_scene, gen_planar_scene, gen_rotation_scene, ConstantMotion, EdgeScene, PiecewiseRotation, SynthConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::usage;
use crate::args::{Problem, SynthArgs};
use crate::io::write_json;

fn triple(v: &Option<Vec<f64>>, default: [f64; 3]) -> [f64; 3] {
    v.as_ref().map(|v| [v[0], v[1], v[2]]).unwrap_or(default)
}

pub fn run(a: &mut SynthArgs, out: &Path) -> Result<()> {
    let cfg = SynthConfig {
        rate: a.rate,
        sigma_px: a.sigma_px,
        jitter_s: a.jitter_s,
        duration: a.duration,
        seed: a.seed,
        width: a.width,
        height: a.height,
        time_step: a.time_step,
        max_events: a.max_events,
        quantize: a.quantize,
        ..Default::default()
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let (w, h) = (a.width as f64, a.height as f64);
    let camera = CameraIntrinsics::new(a.focal, a.focal, (w - 1.0) / 2.0, (h - 1.0) / 2.0, a.width, a.height)
        .map_err(|e| usage(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let data = match a.problem {
        Problem::Flow => {
            let v = a.v.as_ref().map(|v| [v[0], v[1]]).unwrap_or([-40.0, 0.0]);
            let scene = EdgeScene::random_segments(a.edges.unwrap_or(30), w, h, 10.0, (15.0, 45.0), &mut rng)
                .map_err(|e| usage(e.to_string()))?;
            gen_flow_scene(&scene, v, &cfg)?
        }
        Problem::Rotation => {
            let omega = PiecewiseRotation::constant(triple(&a.omega, [0.0, 0.0, 1.0]));
            let scene = EdgeScene::random_arcs(a.edges.unwrap_or(600), (0.05, 0.2), &mut rng).map_err(|e| usage(e.to_string()))?;
            gen_rotation_scene(&scene, &omega, &camera, &cfg)?
        }
        Problem::Planar => {
            let n = super::vec3(&triple(&a.normal, [0.0, 0.0, -1.0]));
            if !(n.norm() > 0.0) || !(a.plane_d > 0.0) {
                return Err(usage("plane needs a non-zero normal and positive d"));
            }
            let motion = ConstantMotion {
                omega: triple(&a.omega, [0.0, 0.0, 0.0]),
                velocity: triple(&a.velocity, [0.4, 0.0, 0.0]),
            };
            let scene = EdgeScene::random_segments(a.edges.unwrap_or(80), w, h, 5.0, (10.0, 40.0), &mut rng)
                .map_err(|e| usage(e.to_string()))?;
            gen_planar_scene(&scene, n.normalize().into(), a.plane_d, &motion, Some(motion), &camera, &cfg, None)?
        }
    };
    data.write(out)?;
    write_json(
        &out.join("summary.json"),
        &json!({
            "problem": a.problem,
            "n_events": data.events.len(),
            "seed": a.seed,
            "truth": data.truth,
        }),
    )
}
