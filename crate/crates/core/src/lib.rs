//! Two-hand model fitting from dense per-pixel predictions.
//!
//! A procedural hand surrogate is posed with linear blend skinning and fitted
//! per frame by Levenberg-Marquardt against segmentation, matching features,
//! depth maps and keypoint heatmaps. A synthetic renderer produces those maps
//! with ground truth so the pipeline can be evaluated end to end.

pub mod camera;
pub mod energy;
pub mod error;
pub mod hand_model;
pub mod harness;
pub mod maps;
pub mod oracle;
pub mod solver;

pub use camera::{CameraIntrinsics, Pixel};
pub use error::{Error, Result};
pub use hand_model::{build_model, Hand, HandModel, HandParams, PosedHands};
pub use energy::{EnergyContext, FitConfig, ResidualVector};
pub use maps::{FittingTargets, FrameMaps};
pub use solver::{fit_frame, fit_sequence, FrameFit, TrackerState};
