use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use cmax::iwe::export::{colorize_depth, write_png_rgb, FloatGrid};
use cmax::iwe::{accumulate, GridSpec};
use cmax::pipelines::{depth_for_patch, semidense_depth, DepthConfig, SemiDenseConfig};
use cmax::synth::GroundTruth;
use cmax::warp::DepthTransfer;
use serde_json::json;

use super::{ensure_dir, usage};
use crate::args::DepthArgs;
use crate::io::{create, load_camera, load_poses, load_slice, load_truth, write_field_png, write_iwe, write_json};

/// Local maxima smaller than this fraction of the main rise are ripple.
const PEAK_PROMINENCE: f64 = 0.1;

pub fn run(a: &mut DepthArgs, out: &Path) -> Result<()> {
    if !(a.z_min > 0.0 && a.z_max > a.z_min) || a.z_steps < 2 {
        return Err(usage("depth sweep needs 0 < --z-min < --z-max and at least 2 --z-steps"));
    }
    if a.patch % 2 == 0 {
        return Err(usage("--patch must be odd"));
    }
    let inputs = a.input.resolve(true, true)?;
    let camera = load_camera(&inputs, &a.input)?;
    let slice = load_slice(&inputs, &a.input)?;
    let traj = load_poses(&inputs)?.expect("resolved with need_poses");
    let truth_z = match load_truth(&inputs)? {
        Some(GroundTruth::Planar(p)) => p.fronto_parallel_depth(),
        _ => None,
    };
    let t_ref = a.t_ref.unwrap_or_else(|| slice.mid_time());
    a.t_ref = Some(t_ref);
    let reference = traj.interpolate(t_ref)?;
    let center = a
        .center
        .as_ref()
        .map(|c| (c[0], c[1]))
        .unwrap_or((camera.width as i64 / 2, camera.height as i64 / 2));
    let cfg = DepthConfig {
        z_min: a.z_min,
        z_max: a.z_max,
        z_steps: a.z_steps,
        patch: a.patch,
        mode: a.image.mode(),
        splat: a.image.splat(),
        ..Default::default()
    };
    let start = Instant::now();
    let res = depth_for_patch(&slice, &traj, &reference, &camera, center, &cfg)?;

    ensure_dir(out)?;
    res.write_csv(create(&out.join("contrast_curve.csv"))?)?;
    let transfer = DepthTransfer::new(&slice, &traj, &reference, &camera)?;
    let grid = GridSpec::new(camera.width, camera.height);
    let z_worst = res
        .curve
        .iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|c| c.0)
        .unwrap_or(a.z_min);
    write_iwe(out, "iwe_worst", &accumulate(&slice, &transfer.at_depth(z_worst), grid, cfg.mode, cfg.splat)?, a.image.negative)?;
    write_iwe(out, "iwe_optimum", &accumulate(&slice, &transfer.at_depth(res.z_refined), grid, cfg.mode, cfg.splat)?, a.image.negative)?;

    let mut semidense = json!(null);
    if a.semidense {
        let sd = SemiDenseConfig {
            z_grid: cfg.z_samples()?,
            k: a.k,
            median: !a.no_median,
            mode: cfg.mode,
            splat: cfg.splat,
            ..Default::default()
        };
        let map = semidense_depth(&slice, &traj, &reference, &camera, &sd)?;
        let depth = map.depth_f32();
        FloatGrid {
            width: map.width,
            height: map.height,
            tag: "depth".into(),
            values: depth.clone(),
        }
        .write(create(&out.join("depth_map.cmaxgrid"))?)?;
        write_png_rgb(
            &out.join("depth_map.png"),
            map.width,
            map.height,
            &colorize_depth(&depth, a.z_min as f32, a.z_max as f32),
        )?;
        let contrast: Vec<f32> = map.contrast.iter().map(|v| *v as f32).collect();
        write_field_png(&out.join("contrast_map.png"), map.width, map.height, &contrast)?;
        let rms = truth_z.map(|z| {
            let errs: Vec<f64> = map.depth.iter().filter(|d| d.is_finite()).map(|d| (d - z).powi(2)).collect();
            (errs.iter().sum::<f64>() / errs.len().max(1) as f64).sqrt()
        });
        semidense = json!({ "selected": map.selected(), "rms_m": rms });
    }
    let secs = start.elapsed().as_secs_f64();
    write_json(
        &out.join("summary.json"),
        &json!({
            "theta_star": res.z_refined,
            "f_star": res.f_refined,
            "z_sampled": res.z_star,
            "f_sampled": res.f_star,
            "peaks": res.peak_count(PEAK_PROMINENCE),
            "evaluations": res.curve.len(),
            "t_ref": t_ref,
            "n_events": slice.len(),
            "wall_time_s": secs,
            "error_m": truth_z.map(|z| (res.z_refined - z).abs()),
            "semidense": semidense,
        }),
    )
}
