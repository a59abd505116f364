use crate::camera::Pixel;
use crate::hand_model::{Hand, HandModel};

use super::{
    aggregate_inter, dense_matching, distance_transforms, extract_keypoints, intra_targets,
    label_of, DistanceField, FrameMaps, InterTarget, NUM_KEYPOINTS,
};

/// Per-frame constants derived from the predictor maps. Computed once and
/// held fixed for every LM iteration of the frame.
#[derive(Clone, Debug)]
pub struct FittingTargets {
    pub height: usize,
    pub width: usize,
    /// Matched pixel per stacked vertex (left hand first).
    pub psi: Vec<Option<Pixel>>,
    /// Best matching distance per stacked vertex.
    pub match_distance: Vec<f64>,
    pub keypoints: [Option<Pixel>; NUM_KEYPOINTS],
    /// Root-relative depth target in meters per stacked vertex.
    pub intra: Vec<Option<f64>>,
    pub inter: Option<InterTarget>,
    pub dt: [Option<DistanceField>; 2],
    pub present: [bool; 2],
    /// Target segmentation, row-major.
    pub seg: Vec<u8>,
    /// Whether each hand's distance field was zeroed under the other hand.
    pub occlusion_aware: bool,
}

impl FittingTargets {
    pub fn prepare(
        maps: &FrameMaps,
        model: &HandModel,
        t_c: f64,
        t_h: f64,
        alpha: f64,
        occlusion_aware: bool,
    ) -> FittingTargets {
        let matches = dense_matching(maps, model, t_c);
        let psi: Vec<Option<Pixel>> = matches.iter().map(|m| m.pixel).collect();
        let intra = intra_targets(&maps.intra, maps.width, &psi, alpha);
        FittingTargets {
            height: maps.height,
            width: maps.width,
            match_distance: matches.iter().map(|m| m.distance).collect(),
            keypoints: extract_keypoints(maps, t_h),
            inter: aggregate_inter(&maps.inter, &maps.seg, alpha),
            dt: distance_transforms(&maps.seg, maps.height, maps.width, occlusion_aware),
            present: Hand::BOTH.map(|h| maps.has_hand(h)),
            seg: maps.seg.clone(),
            occlusion_aware,
            psi,
            intra,
        }
    }

    pub fn num_matched(&self) -> usize {
        self.psi.iter().filter(|p| p.is_some()).count()
    }

    pub fn num_keypoints(&self) -> usize {
        self.keypoints.iter().filter(|k| k.is_some()).count()
    }

    /// Whether the target segmentation labels `pixel` as the other hand of
    /// `hand`.
    pub fn shows_other_hand(&self, hand: Hand, pixel: (usize, usize)) -> bool {
        self.seg[pixel.0 * self.width + pixel.1] == label_of(hand.other())
    }

    /// True when the frame carries no usable evidence at all.
    pub fn is_empty(&self) -> bool {
        self.num_matched() == 0
            && self.num_keypoints() == 0
            && self.dt.iter().all(|d| d.is_none())
            && self.inter.is_none()
    }
}
