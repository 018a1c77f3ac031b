use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use cmax::iwe::AccumMode;
use cmax::optimize::AscentOptions;
use cmax::pipelines::{estimate_homography, HomographyConfig};
use cmax::synth::GroundTruth;
use cmax::warp::{HomographyParams, ParamVector};
use serde_json::json;

use super::{ensure_dir, usage, vec3};
use crate::args::HomogArgs;
use crate::io::{create, load_camera, load_slice, load_truth, write_iwe, write_json};

pub fn run(a: &mut HomogArgs, out: &Path) -> Result<()> {
    let n0 = vec3(&a.init_normal);
    if !(n0.norm() > 0.0) {
        return Err(usage("--init-normal must be non-zero"));
    }
    if a.pyramid.is_empty() || a.pyramid.iter().any(|f| !(*f >= 1.0)) {
        return Err(usage("--pyramid factors must be at least 1"));
    }
    let inputs = a.input.resolve(true, false)?;
    let camera = load_camera(&inputs, &a.input)?;
    let slice = load_slice(&inputs, &a.input)?;
    let truth = match load_truth(&inputs)? {
        Some(GroundTruth::Planar(p)) => p.params_at(slice.t_ref()),
        _ => None,
    };
    let defaults = HomographyConfig::<f64>::default();
    let cfg = HomographyConfig {
        ascent: AscentOptions { ..defaults.ascent }.max_iter(a.max_iter),
        mode: a.image.mode(),
        splat: a.image.splat(),
        pyramid: a.pyramid.clone(),
    };
    let theta0 = HomographyParams::new(vec3(&a.init_omega), vec3(&a.init_v_over_d), &n0);
    let start = Instant::now();
    let est = estimate_homography(&slice, &theta0, &camera, &cfg)?;
    let secs = start.elapsed().as_secs_f64();

    ensure_dir(out)?;
    let p = est.params;
    let n = p.normal();
    let mut f = create(&out.join("estimate.csv"))?;
    writeln!(f, "wx,wy,wz,vx_d,vy_d,vz_d,nx,ny,nz,f")?;
    writeln!(
        f,
        "{},{},{},{},{},{},{},{},{},{}",
        p.omega.x, p.omega.y, p.omega.z, p.v_over_d.x, p.v_over_d.y, p.v_over_d.z, n.x, n.y, n.z, est.f_star
    )?;
    f.flush()?;
    for (k, stage) in est.stages.iter().enumerate() {
        stage.write_trace_csv(create(&out.join(format!("trace_stage{k}.csv")))?)?;
    }
    write_iwe(out, "iwe_identity", &est.iwe_identity, a.image.negative && cfg.mode == AccumMode::Count)?;
    write_iwe(out, "iwe_optimum", &est.iwe_corrected, a.image.negative && cfg.mode == AccumMode::Count)?;

    let errors = truth.map(|gt| {
        json!({
            "omega_relative": (p.omega - gt.omega).norm() / gt.omega.norm(),
            "v_over_d_relative": (p.v_over_d - gt.v_over_d).norm() / gt.v_over_d.norm(),
            "normal_deg": n.angle(&gt.normal()).to_degrees(),
        })
    });
    write_json(
        &out.join("summary.json"),
        &json!({
            "theta_star": p.to_vec(),
            "omega": [p.omega.x, p.omega.y, p.omega.z],
            "v_over_d": [p.v_over_d.x, p.v_over_d.y, p.v_over_d.z],
            "normal": [n.x, n.y, n.z],
            "f_star": est.f_star,
            "f_zero": est.f_zero,
            "iterations": est.stages.iter().map(|s| s.iterations).collect::<Vec<_>>(),
            "evaluations": est.stages.iter().map(|s| s.evaluations).sum::<usize>(),
            "n_events": slice.len(),
            "wall_time_s": secs,
            "truth_error": errors,
        }),
    )
}
