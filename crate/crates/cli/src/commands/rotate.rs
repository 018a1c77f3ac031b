use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use cmax::events::{slice_events, RefTime, Windowing};
use cmax::iwe::{accumulate, GridSpec};
use cmax::pipelines::{rms_angular_error, track_rotation, RateTruth, RotationConfig};
use cmax::synth::GroundTruth;
use cmax::warp::{IdentityWarp, RotationParams, RotationWarp};
use nalgebra::Vector3;
use serde_json::json;

use super::{ensure_dir, usage, vec3};
use crate::args::RotateArgs;
use crate::io::{create, load_camera, load_slice, load_truth, write_iwe, write_json};

pub fn run(a: &mut RotateArgs, out: &Path) -> Result<()> {
    if a.window == 0 || a.stride == Some(0) {
        return Err(usage("--window and --stride must be positive"));
    }
    let inputs = a.input.resolve(true, false)?;
    let camera = load_camera(&inputs, &a.input)?;
    let slice = load_slice(&inputs, &a.input)?;
    let truth = load_truth(&inputs)?;
    let cfg = RotationConfig {
        window: a.window,
        stride: a.stride,
        warm_start: !a.cold_start,
        init: [a.init[0], a.init[1], a.init[2]],
        mode: a.image.mode(),
        splat: a.image.splat(),
        ..Default::default()
    };
    let start = Instant::now();
    let series = track_rotation(&slice, &camera, &cfg)?;
    let secs = start.elapsed().as_secs_f64();
    if series.samples.is_empty() {
        anyhow::bail!("{} events is fewer than one window of {}", slice.len(), a.window);
    }

    ensure_dir(out)?;
    series.write_csv(create(&out.join("omega.csv"))?)?;

    // Window in the middle of the run, before and after correction.
    let stride = a.stride.unwrap_or((a.window / 2).max(1));
    let windows = slice_events(&slice, Windowing::Count { size: a.window, stride }, RefTime::Midpoint)?;
    let mid = series.samples.len() / 2;
    let w = &windows[mid];
    let s = &series.samples[mid];
    let grid = GridSpec::new(camera.width, camera.height);
    let warp = RotationWarp::new(RotationParams::new(s.omega[0], s.omega[1], s.omega[2]), w.t_ref(), camera);
    write_iwe(out, "iwe_identity", &accumulate(w, &IdentityWarp, grid, cfg.mode, cfg.splat)?, a.image.negative)?;
    write_iwe(out, "iwe_optimum", &accumulate(w, &warp, grid, cfg.mode, cfg.splat)?, a.image.negative)?;

    let omega_truth = match &truth {
        Some(GroundTruth::Rotation { omega }) => Some((omega.clone(), omega.peak_speed())),
        _ => None,
    };
    let mut scored = json!(null);
    if let Some((profile, peak)) = omega_truth {
        let gt = |t: f64| profile.omega_at(t);
        let rep = rms_angular_error(&series, &RateTruth::Analytic(&gt), 4)?;
        rep.write_boxplot_csv(create(&out.join("errors.csv"))?)?;
        let peak_deg = peak.to_degrees();
        scored = json!({
            "rms_deg_s": rep.rms_deg,
            "peak_deg_s": peak_deg,
            "relative_error": if peak_deg > 0.0 { Some(rep.rms_deg / peak_deg) } else { None },
        });
    }
    let mean: Vector3<f64> = series.samples.iter().map(|s| vec3(&s.omega)).sum::<Vector3<f64>>() / series.samples.len() as f64;
    let mut f = create(&out.join("estimate.csv"))?;
    writeln!(f, "wx,wy,wz")?;
    writeln!(f, "{},{},{}", mean.x, mean.y, mean.z)?;
    f.flush()?;
    write_json(
        &out.join("summary.json"),
        &json!({
            "theta_star": [mean.x, mean.y, mean.z],
            "f_star": series.samples.iter().map(|s| s.f_star).sum::<f64>() / series.samples.len() as f64,
            "windows": series.samples.len(),
            "low_confidence": series.samples.iter().filter(|s| s.low_confidence).count(),
            "evaluations": series.samples.iter().map(|s| s.evaluations).sum::<usize>(),
            "n_events": slice.len(),
            "wall_time_s": secs,
            "truth": scored,
        }),
    )
}
