//! Evaluation metrics, built-in scenes and end-to-end orchestration.

mod eval;
mod metrics;
mod pipeline;
mod scenes;
mod selftest;

pub use eval::{evaluate, EvalReport};
pub use metrics::{
    alignment_residual, pcf_curve, pck_curve, procrustes_align_no_rotation, threshold_grid,
};
pub use pipeline::{
    fit_directory, fit_rendered, perturb_articulation, run_pipeline, to_records, track, InitNoise,
    PipelineRun,
};
pub use scenes::{interaction_pose, interaction_script};
pub use selftest::{run_selftest, Check};
