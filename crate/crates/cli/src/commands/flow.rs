use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use cmax::events::EventSlice;
use cmax::optimize::SearchGrid;
use cmax::pipelines::{estimate_flow_patch, FlowConfig};
use cmax::synth::GroundTruth;
use serde_json::json;

use super::{ensure_dir, usage};
use crate::args::FlowArgs;
use crate::io::{create, load_slice, load_truth, write_field_png, write_iwe, write_json};

pub fn run(a: &mut FlowArgs, out: &Path) -> Result<()> {
    if !(a.range > 0.0) || a.steps < 2 {
        return Err(usage("flow search needs a positive --range and at least 2 --steps"));
    }
    let inputs = a.input.resolve(false, false)?;
    let mut slice = load_slice(&inputs, &a.input)?;
    if let Some(r) = &a.roi {
        let (x0, y0, x1, y1) = (r[0], r[1], r[0] + r[2], r[1] + r[3]);
        let kept: Vec<_> = slice
            .events()
            .iter()
            .filter(|e| e.x >= x0 && e.x < x1 && e.y >= y0 && e.y < y1)
            .copied()
            .collect();
        if kept.is_empty() {
            anyhow::bail!("no events inside the region of interest");
        }
        slice = EventSlice::new(kept);
    }
    let truth = load_truth(&inputs)?;
    let cfg = FlowConfig {
        search: SearchGrid::symmetric(2, a.range, a.steps)?,
        refine: !a.no_refine,
        mode: a.image.mode(),
        splat: a.image.splat(),
        ..Default::default()
    };
    let start = Instant::now();
    let est = estimate_flow_patch(&slice, &cfg)?;
    let secs = start.elapsed().as_secs_f64();

    ensure_dir(out)?;
    let mut f = create(&out.join("estimate.csv"))?;
    writeln!(f, "vx,vy,f")?;
    writeln!(f, "{},{},{}", est.v_star[0], est.v_star[1], est.f_star)?;
    f.flush()?;
    est.heatmap.write_csv(create(&out.join("heatmap.csv"))?)?;
    if let Some((w, h, values)) = est.heatmap.image_2d() {
        write_field_png(&out.join("heatmap.png"), w, h, &values)?;
    }
    if let Some(r) = &est.refinement {
        r.write_trace_csv(create(&out.join("trace.csv"))?)?;
    }
    write_iwe(out, "iwe_identity", &est.iwe_zero, a.image.negative)?;
    write_iwe(out, "iwe_optimum", &est.iwe_star, a.image.negative)?;

    let error = match truth {
        Some(GroundTruth::Flow { v }) => Some(((est.v_star[0] - v[0]).powi(2) + (est.v_star[1] - v[1]).powi(2)).sqrt()),
        _ => None,
    };
    write_json(
        &out.join("summary.json"),
        &json!({
            "theta_star": est.v_star,
            "f_star": est.f_star,
            "v_grid": est.v_grid,
            "f_grid": est.f_grid,
            "f_zero": est.f_zero,
            "evaluations": est.evaluations,
            "n_events": slice.len(),
            "wall_time_s": secs,
            "error_px_s": error,
        }),
    )
}
