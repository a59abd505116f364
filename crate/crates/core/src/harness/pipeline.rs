//! Render, fit and evaluate in one place.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::energy::FitConfig;
use crate::error::Result;
use crate::hand_model::{Hand, HandModel, HandParams};
use crate::maps::{FittingTargets, FrameMaps};
use crate::oracle::{list_frames, render_sequence, GtPoint, NoiseSpec, RenderedFrame, Script};
use crate::solver::{fit_frame_from, init_first_frame, prior_alpha, FrameFit, FrameRecord, TrackerState};

use super::eval::{evaluate, EvalReport};

/// Gaussian articulation noise added to the first-frame initializer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitNoise {
    pub articulation_sigma: f64,
    pub seed: u64,
}

pub fn perturb_articulation(params: &HandParams, noise: &InitNoise) -> HandParams {
    let mut out = params.clone();
    if noise.articulation_sigma <= 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let n = Normal::new(0.0, noise.articulation_sigma).expect("sigma > 0");
    for hand in Hand::BOTH {
        for a in out.articulation_mut(hand) {
            *a += n.sample(&mut rng);
        }
    }
    out
}

/// Sequential fit over maps produced by `next_maps`. Per-frame failures are
/// kept in the output and the tracker moves on.
pub fn track<F>(
    model: &HandModel,
    frames: usize,
    mut next_maps: F,
    config: &FitConfig,
    init_noise: Option<InitNoise>,
) -> Vec<Result<FrameFit>>
where
    F: FnMut(usize) -> Result<FrameMaps>,
{
    let alpha = prior_alpha(model, config);
    let mut state = TrackerState::default();
    let mut out = Vec::with_capacity(frames);
    for i in 0..frames {
        let res = next_maps(i).and_then(|maps| {
            let targets = FittingTargets::prepare(&maps, model, config.t_c, config.t_h, alpha, config.occlusion_aware);
            let start = match (i, init_noise) {
                (0, Some(noise)) => {
                    let (init, _) = init_first_frame(model, &targets, config, alpha);
                    Some(perturb_articulation(&init, &noise))
                }
                _ => None,
            };
            fit_frame_from(model, &mut state, &targets, config, start)
        });
        if res.is_err() {
            state.frame += 1;
        }
        out.push(res);
    }
    out
}

pub fn to_records(fits: &[Result<FrameFit>], fallback: &HandParams) -> Vec<FrameRecord> {
    let mut last = fallback.clone();
    fits.iter()
        .enumerate()
        .map(|(frame, f)| match f {
            Ok(fit) => {
                last = fit.params.clone();
                FrameRecord {
                    frame,
                    params: fit.params.clone(),
                    energy: fit.energy,
                    accepted: fit.accepted,
                }
            }
            Err(_) => FrameRecord {
                frame,
                params: last.clone(),
                energy: f64::NAN,
                accepted: 0,
            },
        })
        .collect()
}

#[derive(Debug)]
pub struct PipelineRun {
    pub frames: Vec<RenderedFrame>,
    pub fits: Vec<Result<FrameFit>>,
    pub records: Vec<FrameRecord>,
    pub report: EvalReport,
    pub fit_time: Duration,
}

impl PipelineRun {
    pub fn gt(&self) -> Vec<GtPoint> {
        self.frames.iter().flat_map(|f| f.gt.iter().copied()).collect()
    }
}

/// Renders `script`, fits every frame and scores the result.
pub fn run_pipeline(
    model: &HandModel,
    script: &Script,
    noise: &NoiseSpec,
    config: &FitConfig,
    init_noise: Option<InitNoise>,
) -> Result<PipelineRun> {
    let alpha = prior_alpha(model, config);
    let frames = render_sequence(model, script, noise, alpha)?;
    fit_rendered(model, frames, config, init_noise)
}

/// Fits and scores already rendered frames.
pub fn fit_rendered(
    model: &HandModel,
    frames: Vec<RenderedFrame>,
    config: &FitConfig,
    init_noise: Option<InitNoise>,
) -> Result<PipelineRun> {
    let t0 = Instant::now();
    let fits = track(model, frames.len(), |i| Ok(frames[i].maps.clone()), config, init_noise);
    let fit_time = t0.elapsed();
    let records = to_records(&fits, &HandParams::default());
    let gt: Vec<GtPoint> = frames.iter().flat_map(|f| f.gt.iter().copied()).collect();
    let report = evaluate(model, &records, &gt, &config.intrinsics)?;
    Ok(PipelineRun {
        frames,
        fits,
        records,
        report,
        fit_time,
    })
}

/// Fits a sequence directory written by the oracle, loading one bundle at
/// a time.
pub fn fit_directory(model: &HandModel, dir: &Path, config: &FitConfig) -> Result<Vec<Result<FrameFit>>> {
    let frames = list_frames(dir)?;
    Ok(track(model, frames.len(), |i| FrameMaps::load_bundle(&frames[i]), config, None))
}
