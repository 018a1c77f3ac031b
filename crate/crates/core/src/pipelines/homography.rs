use crate::error::{Error, Result};
use crate::events::{CameraIntrinsics, EventSlice};
use crate::iwe::{contrast, AccumMode, GridSpec, Iwe, Splat};
use crate::optimize::{conjugate_gradient_ascent, AscentOptions, BetaRule, OptimResult};
use crate::real::Real;
use crate::warp::{HomographyParams, HomographyWarp, IdentityWarp, ParamVector};

use super::{accumulate_auto, score, Downscaled};

#[derive(Debug, Clone)]
pub struct HomographyConfig<T: Real> {
    pub ascent: AscentOptions<T>,
    pub mode: AccumMode,
    pub splat: Splat<T>,
    /// Coarse-to-fine downscale factors; each level starts from the
    /// previous optimum. The last level should be 1.
    pub pyramid: Vec<T>,
}

impl<T: Real> Default for HomographyConfig<T> {
    fn default() -> Self {
        Self {
            ascent: AscentOptions::new(vec![T::lit(1e-3); 8]).initial_step(T::lit(50.0)),
            mode: AccumMode::Count,
            splat: Splat::Bilinear,
            pyramid: vec![T::lit(4.0), T::lit(2.0), T::one()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct HomographyEstimate<T: Real> {
    /// Canonical form (normal facing the camera).
    pub params: HomographyParams<T>,
    pub f_star: T,
    pub f_zero: T,
    pub iwe_identity: Iwe<T>,
    pub iwe_corrected: Iwe<T>,
    pub stages: Vec<OptimResult<T>>,
}

fn level_grid<T: Real>(camera: &CameraIntrinsics<T>, factor: T) -> GridSpec {
    let w = (T::from_usize_lossy(camera.width) / factor).ceil().as_f64() as usize;
    let h = (T::from_usize_lossy(camera.height) / factor).ceil().as_f64() as usize;
    GridSpec::new(w.max(1), h.max(1))
}

/// Eight-parameter plane-induced homography maximizing the contrast over
/// the whole frame, by conjugate gradient from `theta0`.
pub fn estimate_homography<T: Real>(
    slice: &EventSlice<T>,
    theta0: &HomographyParams<T>,
    camera: &CameraIntrinsics<T>,
    cfg: &HomographyConfig<T>,
) -> Result<HomographyEstimate<T>> {
    if slice.is_empty() {
        return Err(Error::EmptySlice);
    }
    if cfg.pyramid.is_empty() || cfg.pyramid.iter().any(|s| !(*s >= T::one())) {
        return Err(Error::InvalidParameter("pyramid factors must be >= 1".into()));
    }
    let t_ref = slice.t_ref();
    let mut theta = theta0.to_vec();
    let mut stages = Vec::new();
    for &factor in &cfg.pyramid {
        let grid = level_grid(camera, factor);
        let f = |p: &[T]| {
            let warp = HomographyWarp::new(HomographyParams::from_slice(p), t_ref, *camera);
            score(
                slice,
                &Downscaled {
                    inner: &warp,
                    factor,
                },
                grid,
                cfg.mode,
                cfg.splat,
            )
        };
        let r = conjugate_gradient_ascent(f, &theta, &cfg.ascent, BetaRule::PolakRibierePlus);
        theta = r.theta_star.clone();
        stages.push(r);
    }
    let grid = GridSpec::new(camera.width, camera.height);
    let params = HomographyParams::from_slice(&theta);
    let iwe_identity = accumulate_auto(slice, &IdentityWarp, grid, cfg.mode, cfg.splat)?;
    let iwe_corrected = accumulate_auto(slice, &HomographyWarp::new(params, t_ref, *camera), grid, cfg.mode, cfg.splat)?;
    Ok(HomographyEstimate {
        params: params.canonical(),
        f_star: contrast(&iwe_corrected).f,
        f_zero: contrast(&iwe_identity).f,
        iwe_identity,
        iwe_corrected,
        stages,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, Polarity};

    #[test]
    fn static_scene_stays_at_identity() {
        let camera = CameraIntrinsics::new(200.0, 200.0, 60.0, 45.0, 120, 90).unwrap();
        let events: Vec<_> = (0..600)
            .map(|i| Event::new(i as f64 * 1e-4, 20.0 + (i % 30) as f64 * 2.0, 30.0 + (i % 7) as f64 * 5.0, Polarity::Positive))
            .collect();
        let s = EventSlice::new(events);
        let est = estimate_homography(&s, &HomographyParams::zero(), &camera, &HomographyConfig::default()).unwrap();
        assert!(est.params.omega.norm() < 1e-3, "{:?}", est.params);
        assert!(est.params.v_over_d.norm() < 1e-3, "{:?}", est.params);
        let diff: f64 = est
            .iwe_corrected
            .values()
            .iter()
            .zip(est.iwe_identity.values())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(diff < 0.01 * s.len() as f64, "{diff}");
    }
}
