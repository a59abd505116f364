//! Per-frame Levenberg-Marquardt fitting and the sequential tracker.

mod lm;
mod record;

pub use lm::{damped_step, jacobian, jacobian_five_point, lm_step, param_steps, LmStep};
pub use record::{load_records, read_records, record_header, save_records, write_records, FrameRecord};

use nalgebra::Vector3;

use crate::energy::{freeze_silhouette, model_overlap_pairs, EnergyContext, FitConfig};
use crate::error::Result;
use crate::hand_model::{palm_length, pose_hands, Hand, HandModel, HandParams, NUM_SHAPE};
use crate::maps::{FittingTargets, FrameMaps, KEYPOINTS_PER_HAND};

/// Depth used when the initializer has no scale evidence.
pub const DEFAULT_DEPTH: f64 = 0.5;

/// Per hand, pulls the articulation back onto the ball of radius `t_r`.
/// The global rotation and translation are left alone.
pub fn error_recovery(params: &HandParams, t_r: f64) -> HandParams {
    let mut out = params.clone();
    for hand in Hand::BOTH {
        let art = out.articulation_mut(hand);
        let norm = art.iter().map(|a| a * a).sum::<f64>().sqrt();
        // The slack keeps the map idempotent under rounding of the norm.
        if norm > t_r * (1.0 + 1e-12) {
            let s = t_r / norm;
            art.iter_mut().for_each(|a| *a *= s);
        }
    }
    out
}

/// Wrist to middle-fingertip distance of the mean-shape rest hand.
pub fn rest_hand_length(model: &HandModel) -> f64 {
    let rest = model.shaped_template(Hand::Right, &[0.0; NUM_SHAPE]);
    let joints = model.regress_joints(&rest);
    (rest[model.fingertips[2]] - joints[0]).norm()
}

/// Initial parameters from keypoint detections: rest articulation,
/// identity rotation, depth from the wrist-to-middle-tip pixel span. The
/// flag is set when no keypoint at all was detected.
pub fn init_first_frame(model: &HandModel, targets: &FittingTargets, config: &FitConfig, alpha: f64) -> (HandParams, bool) {
    let intr = &config.intrinsics;
    let scale = alpha / palm_length(model, &[0.0; NUM_SHAPE]);
    let length = rest_hand_length(model) * scale;
    let mut params = HandParams::default();
    let mut any = false;
    for hand in Hand::BOTH {
        let base = hand.index() * KEYPOINTS_PER_HAND;
        let wrist = targets.keypoints[base];
        let tip = targets.keypoints[base + 3];
        any |= targets.keypoints[base..base + KEYPOINTS_PER_HAND].iter().any(|k| k.is_some());
        let root = match wrist {
            Some(w) => {
                let z = match tip {
                    Some(t) if (t - w).norm() > 1.0 => intr.fx * length / (t - w).norm(),
                    _ => DEFAULT_DEPTH,
                };
                intr.backproject(w.x, w.y, z)
            }
            None => {
                let side = match hand {
                    Hand::Left => -1.0,
                    Hand::Right => 1.0,
                };
                Vector3::new(side * 0.1, 0.0, DEFAULT_DEPTH)
            }
        };
        params.set_global(hand, Vector3::zeros(), root);
    }
    (params, !any)
}

#[derive(Clone, Debug, Default)]
pub struct TrackerState {
    pub prev: Option<HandParams>,
    pub frame: usize,
    pub last_energy: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FrameFit {
    pub params: HandParams,
    pub energy: f64,
    pub accepted: usize,
    /// `(before, after)` energy of every LM step under its frozen boundary set.
    pub steps: Vec<(f64, f64)>,
    /// Geometry went behind the camera at the output parameters.
    pub degenerate: bool,
    /// No evidence (or no keypoints for initialization); output is a fallback.
    pub flagged: bool,
}

/// Effective palm-length prior.
pub fn prior_alpha(model: &HandModel, config: &FitConfig) -> f64 {
    config.alpha.unwrap_or_else(|| palm_length(model, &[0.0; NUM_SHAPE]))
}

/// Runs the LM iterations for one frame from `start`.
pub fn optimize(
    model: &HandModel,
    targets: &FittingTargets,
    config: &FitConfig,
    prev: Option<&HandParams>,
    start: &HandParams,
) -> Result<FrameFit> {
    let alpha = prior_alpha(model, config);
    let pairs = model_overlap_pairs(model);
    let steps_h = param_steps(config);
    let mut params = start.clone();
    let mut steps = Vec::with_capacity(config.iterations);
    let mut accepted = 0;
    let mut last = None;
    for _ in 0..config.iterations {
        let posed = pose_hands(model, &params)?;
        let silhouette = freeze_silhouette(model, &posed, &targets, &config.intrinsics).unwrap_or_default();
        let ctx = EnergyContext {
            model,
            config,
            targets,
            prev,
            silhouette: &silhouette,
            overlap_pairs: &pairs,
            alpha,
        };
        let step = lm_step(&ctx, &params, &steps_h)?;
        steps.push((step.energy_before, step.energy_after));
        accepted += step.accepted as usize;
        params = step.params.clone();
        last = Some(step);
    }
    let params = error_recovery(&params, config.t_r);
    let (energy, degenerate) = match &last {
        Some(s) => (s.energy_after, s.residuals.degenerate),
        None => (0.0, false),
    };
    Ok(FrameFit {
        params,
        energy,
        accepted,
        steps,
        degenerate,
        flagged: false,
    })
}

/// Fits one frame and advances the tracker. The first frame starts from
/// the keypoint initializer, later frames from the previous output.
pub fn fit_frame(
    model: &HandModel,
    state: &mut TrackerState,
    targets: &FittingTargets,
    config: &FitConfig,
) -> Result<FrameFit> {
    fit_frame_from(model, state, targets, config, None)
}

/// [`fit_frame`] with an explicit starting point.
pub fn fit_frame_from(
    model: &HandModel,
    state: &mut TrackerState,
    targets: &FittingTargets,
    config: &FitConfig,
    start: Option<HandParams>,
) -> Result<FrameFit> {
    let alpha = prior_alpha(model, config);
    let fit = if targets.is_empty() {
        let params = match (&start, &state.prev) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => p.clone(),
            (None, None) => init_first_frame(model, targets, config, alpha).0,
        };
        FrameFit {
            params,
            energy: 0.0,
            accepted: 0,
            steps: Vec::new(),
            degenerate: false,
            flagged: true,
        }
    } else {
        let (start, flagged) = match (start, &state.prev) {
            (Some(s), _) => (s, false),
            (None, Some(p)) => (p.clone(), false),
            (None, None) => init_first_frame(model, targets, config, alpha),
        };
        let prev = if config.temporal { state.prev.as_ref() } else { None };
        let mut fit = optimize(model, targets, config, prev, &start)?;
        fit.flagged = flagged;
        fit
    };
    state.prev = Some(fit.params.clone());
    state.frame += 1;
    state.last_energy = Some(fit.energy);
    Ok(fit)
}

/// Sequential fit over frames. A frame that fails keeps the previous
/// parameters and is reported flagged; the sequence continues.
pub fn fit_sequence<'a, I>(model: &HandModel, frames: I, config: &FitConfig) -> Vec<Result<FrameFit>>
where
    I: IntoIterator<Item = &'a FrameMaps>,
{
    let alpha = prior_alpha(model, config);
    let mut state = TrackerState::default();
    let mut out = Vec::new();
    for maps in frames {
        let targets = FittingTargets::prepare(maps, model, config.t_c, config.t_h, alpha, config.occlusion_aware);
        let res = fit_frame(model, &mut state, &targets, config);
        if res.is_err() {
            state.frame += 1;
        }
        out.push(res);
    }
    out
}
