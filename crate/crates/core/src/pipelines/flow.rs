use crate::error::{Error, Result};
use crate::events::EventSlice;
use crate::iwe::{AccumMode, GridSpec, Iwe, Splat};
use crate::optimize::{conjugate_gradient_ascent, grid_search, AscentOptions, BetaRule, Heatmap, OptimResult, SearchGrid, DEFAULT_GRID_BUDGET};
use crate::real::Real;
use crate::warp::{FlowParams, FlowWarp};

use super::{accumulate_auto, score};

#[derive(Debug, Clone)]
pub struct FlowConfig<T: Real> {
    pub search: SearchGrid<T>,
    pub refine: bool,
    pub mode: AccumMode,
    pub splat: Splat<T>,
    /// Splat used during refinement; `None` keeps `splat`. Bilinear
    /// contrast favours landing on pixel centres, which biases sub-cell
    /// estimates, so the default refines on the Gaussian kernel.
    pub refine_splat: Option<Splat<T>>,
    /// Pixels added around the event bounding box to form the IWE grid.
    pub margin: usize,
    pub budget: usize,
    pub ascent: AscentOptions<T>,
}

impl<T: Real> Default for FlowConfig<T> {
    fn default() -> Self {
        Self {
            search: SearchGrid::symmetric(2, T::lit(80.0), 41).expect("valid default grid"),
            refine: true,
            mode: AccumMode::Count,
            splat: Splat::Bilinear,
            refine_splat: Some(Splat::gaussian(T::one())),
            margin: 5,
            budget: DEFAULT_GRID_BUDGET,
            ascent: AscentOptions::new(vec![T::lit(0.5); 2]).initial_step(T::lit(4.0)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowEstimate<T: Real> {
    /// Final estimate (refined when refinement is on).
    pub v_star: [T; 2],
    pub f_star: T,
    pub v_grid: [T; 2],
    pub f_grid: T,
    pub f_zero: T,
    pub heatmap: Heatmap<T>,
    pub refinement: Option<OptimResult<T>>,
    pub iwe_zero: Iwe<T>,
    pub iwe_grid: Iwe<T>,
    pub iwe_star: Iwe<T>,
    pub evaluations: usize,
}

/// Grid search over the flow velocity, optionally refined by conjugate
/// gradient from the best lattice point.
pub fn estimate_flow_patch<T: Real>(slice: &EventSlice<T>, cfg: &FlowConfig<T>) -> Result<FlowEstimate<T>> {
    if slice.is_empty() {
        return Err(Error::EmptySlice);
    }
    if cfg.search.dim() != 2 {
        return Err(Error::InvalidParameter("flow search grid must be 2-D".into()));
    }
    let grid = GridSpec::bounding(slice.events(), cfg.margin);
    let t_ref = slice.t_ref();
    let warp = |v: &[T]| FlowWarp::new(FlowParams::new(v[0], v[1]), t_ref);
    let f = |v: &[T]| score(slice, &warp(v), grid, cfg.mode, cfg.splat);
    let (coarse, heatmap) = grid_search(f, &cfg.search, cfg.budget)?;
    let mut evaluations = coarse.evaluations;
    let mut v_star = coarse.theta_star.clone();
    let refinement = if cfg.refine {
        let fine = cfg.refine_splat.unwrap_or(cfg.splat);
        let g = |v: &[T]| score(slice, &warp(v), grid, cfg.mode, fine);
        let r = conjugate_gradient_ascent(g, &coarse.theta_star, &cfg.ascent, BetaRule::PolakRibierePlus);
        evaluations += r.evaluations;
        v_star = r.theta_star.clone();
        Some(r)
    } else {
        None
    };
    let f_star = f(&v_star);
    let image = |v: &[T]| accumulate_auto(slice, &warp(v), grid, cfg.mode, cfg.splat);
    let zero = [T::zero(), T::zero()];
    let iwe_zero = image(&zero)?;
    Ok(FlowEstimate {
        v_star: [v_star[0], v_star[1]],
        f_star,
        v_grid: [coarse.theta_star[0], coarse.theta_star[1]],
        f_grid: coarse.f_star,
        f_zero: crate::iwe::contrast(&iwe_zero).f,
        iwe_grid: image(&coarse.theta_star)?,
        iwe_star: image(&v_star)?,
        iwe_zero,
        heatmap,
        refinement,
        evaluations,
    })
}

/// Count mode against polarity mode on the same slice and lattice.
#[derive(Debug, Clone)]
pub struct PolarityReport<T: Real> {
    pub count: FlowEstimate<T>,
    pub polarity: FlowEstimate<T>,
    /// Lattice cells at or above half maximum.
    pub basin_count: usize,
    pub basin_polarity: usize,
    /// Grid argmaxes at most one cell apart in every dimension.
    pub argmax_agree: bool,
}

pub fn compare_polarity_modes<T: Real>(slice: &EventSlice<T>, cfg: &FlowConfig<T>) -> Result<PolarityReport<T>> {
    let run = |mode| {
        estimate_flow_patch(
            slice,
            &FlowConfig {
                mode,
                ..cfg.clone()
            },
        )
    };
    let count = run(AccumMode::Count)?;
    let polarity = run(AccumMode::Polarity)?;
    let argmax_agree = (0..2).all(|d| {
        let cell = cfg.search.cell(d);
        (count.v_grid[d] - polarity.v_grid[d]).abs() <= cell * T::lit(1.0 + 1e-9)
    });
    Ok(PolarityReport {
        basin_count: count.heatmap.half_max_cells(),
        basin_polarity: polarity.heatmap.half_max_cells(),
        count,
        polarity,
        argmax_agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Event, Polarity};
    use crate::synth::{gen_flow_scene, EdgeScene, SynthConfig};
    use rand::SeedableRng;

    fn pattern(v: [f64; 2], seed: u64) -> EventSlice<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let scene = EdgeScene::random_segments(12, 120.0, 100.0, 15.0, (10.0, 30.0), &mut rng).unwrap();
        let cfg = SynthConfig {
            rate: 2.0,
            seed,
            ..Default::default()
        };
        gen_flow_scene(&scene, v, &cfg).unwrap().events
    }

    fn small_cfg() -> FlowConfig<f64> {
        FlowConfig {
            search: SearchGrid::symmetric(2, 80.0, 21).unwrap(),
            ..Default::default()
        }
    }

    #[test]
    fn moving_edges_recovered() {
        let s = pattern([-40.0, 0.0], 1);
        let est = estimate_flow_patch(&s, &small_cfg()).unwrap();
        assert!((est.v_star[0] + 40.0).abs() < 2.0 && est.v_star[1].abs() < 2.0, "{:?}", est.v_star);
        assert!(est.f_star > est.f_zero);
    }

    #[test]
    fn static_edge_gives_zero_flow() {
        // isolated points flickering in place over 0.1 s; a straight edge
        // would leave the flow along it unobservable
        let events: Vec<_> = (0..200)
            .map(|i| {
                let k = i % 20;
                Event::new(i as f64 * 5e-4, 30.0 + (k * 7 % 20) as f64 * 3.0, 20.0 + (k * 3 % 20) as f64 * 2.0, Polarity::Positive)
            })
            .collect();
        let s = EventSlice::new(events);
        let est = estimate_flow_patch(&s, &small_cfg()).unwrap();
        assert!(est.v_star[0].abs() < 1e-6 && est.v_star[1].abs() < 1e-6, "{:?}", est.v_star);
    }

    #[test]
    fn empty_slice_is_an_error() {
        assert!(matches!(
            estimate_flow_patch(&EventSlice::<f64>::empty(), &small_cfg()),
            Err(Error::EmptySlice)
        ));
    }

    #[test]
    fn time_reversal_negates_the_estimate() {
        let s = pattern([-30.0, 20.0], 2);
        let cfg = small_cfg();
        let fwd = estimate_flow_patch(&s, &cfg).unwrap();
        let rev = s.time_reversed();
        let rev = estimate_flow_patch(&rev.clone().with_t_ref(rev.first_time().unwrap()), &cfg).unwrap();
        for d in 0..2 {
            assert!((fwd.v_star[d] + rev.v_star[d]).abs() < 2.0, "{:?} {:?}", fwd.v_star, rev.v_star);
        }
    }

    #[test]
    fn modes_agree_and_cancellation_hurts_polarity() {
        let s = pattern([-40.0, 0.0], 3);
        let rep = compare_polarity_modes(&s, &small_cfg()).unwrap();
        assert!(rep.argmax_agree);

        // every event duplicated with the opposite polarity: polarity sums vanish
        let mut balanced = s.events().to_vec();
        balanced.extend(s.events().iter().map(|e| Event::new(e.t, e.x, e.y, e.p.flipped())));
        let b = EventSlice::new(balanced);
        let cfg = FlowConfig {
            refine: false,
            ..small_cfg()
        };
        let pol = estimate_flow_patch(&b, &FlowConfig { mode: AccumMode::Polarity, ..cfg.clone() }).unwrap();
        let cnt = estimate_flow_patch(&b, &cfg).unwrap();
        assert!(pol.f_star < 1e-12);
        assert!(cnt.f_star > 0.1);
    }
}
