//! Predictor maps and their post-processing into fitting targets.

mod dense;
mod edt;
pub mod format;
mod inter;
mod keypoints;
mod targets;

use std::path::Path;

use crate::camera::Pixel;
use crate::error::{Error, Result};
use crate::hand_model::Hand;

pub use dense::{dense_matching, handedness_code, matching_distance, DenseMatch};
pub use edt::{
    distance_transforms, edge_pixels, hand_distance_transform, squared_edt, DistanceField,
};
pub use format::{load_map, save_map, DType, Raster};
pub use inter::{aggregate_inter, median, InterTarget};
pub use keypoints::{extract_keypoints, KEYPOINTS_PER_HAND, NUM_KEYPOINTS};
pub use targets::FittingTargets;

pub const BG: u8 = 0;
pub const LEFT: u8 = 1;
pub const RIGHT: u8 = 2;
pub const MATCH_CHANNELS: usize = 3;

pub fn label_of(hand: Hand) -> u8 {
    match hand {
        Hand::Left => LEFT,
        Hand::Right => RIGHT,
    }
}

pub fn hand_of_label(label: u8) -> Option<Hand> {
    match label {
        LEFT => Some(Hand::Left),
        RIGHT => Some(Hand::Right),
        _ => None,
    }
}

/// Per-frame predictor rasters, row-major with interleaved channels.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameMaps {
    pub height: usize,
    pub width: usize,
    /// Labels in {BG, LEFT, RIGHT}.
    pub seg: Vec<u8>,
    /// Matching features, 3 channels.
    pub matching: Vec<f32>,
    /// Root-relative depth in palm lengths.
    pub intra: Vec<f32>,
    /// Inter-root depth distance in palm lengths.
    pub inter: Vec<f32>,
    /// Keypoint heatmaps, 12 channels.
    pub heat: Vec<f32>,
}

pub const BUNDLE_FILES: [&str; 5] = [
    "seg.r2hm",
    "match.r2hm",
    "dintra.r2hm",
    "dinter.r2hm",
    "heat.r2hm",
];

impl FrameMaps {
    pub fn empty(height: usize, width: usize) -> Self {
        let n = height * width;
        FrameMaps {
            height,
            width,
            seg: vec![BG; n],
            matching: vec![0.0; n * MATCH_CHANNELS],
            intra: vec![0.0; n],
            inter: vec![0.0; n],
            heat: vec![0.0; n * NUM_KEYPOINTS],
        }
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let sizes = [
            ("seg", self.seg.len(), n),
            ("match", self.matching.len(), n * MATCH_CHANNELS),
            ("dintra", self.intra.len(), n),
            ("dinter", self.inter.len(), n),
            ("heat", self.heat.len(), n * NUM_KEYPOINTS),
        ];
        for (name, got, want) in sizes {
            if got != want {
                return Err(Error::DimMismatch {
                    expected: format!("{name} with {want} values"),
                    found: got.to_string(),
                });
            }
        }
        if self.seg.iter().any(|&l| l > RIGHT) {
            return Err(Error::Format("segmentation label outside {0,1,2}".into()));
        }
        if !self
            .matching
            .iter()
            .chain(&self.intra)
            .chain(&self.inter)
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("frame maps"));
        }
        Ok(())
    }

    pub fn feature(&self, idx: usize) -> [f32; 3] {
        let o = idx * MATCH_CHANNELS;
        [self.matching[o], self.matching[o + 1], self.matching[o + 2]]
    }

    /// Heatmap channel `j` as a contiguous vector.
    pub fn heat_channel(&self, j: usize) -> Vec<f32> {
        self.heat.iter().skip(j).step_by(NUM_KEYPOINTS).copied().collect()
    }

    pub fn has_hand(&self, hand: Hand) -> bool {
        let l = label_of(hand);
        self.seg.contains(&l)
    }

    pub fn save_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (h, w) = (self.height, self.width);
        save_map(&dir.join(BUNDLE_FILES[0]), &Raster::u8(h, w, 1, self.seg.clone()))?;
        save_map(
            &dir.join(BUNDLE_FILES[1]),
            &Raster::f32(h, w, MATCH_CHANNELS, self.matching.clone()),
        )?;
        save_map(&dir.join(BUNDLE_FILES[2]), &Raster::f32(h, w, 1, self.intra.clone()))?;
        save_map(&dir.join(BUNDLE_FILES[3]), &Raster::f32(h, w, 1, self.inter.clone()))?;
        save_map(
            &dir.join(BUNDLE_FILES[4]),
            &Raster::f32(h, w, NUM_KEYPOINTS, self.heat.clone()),
        )
    }

    pub fn load_bundle(dir: &Path) -> Result<FrameMaps> {
        let seg = load_map(&dir.join(BUNDLE_FILES[0]))?.expect_channels(1)?;
        let (h, w) = (seg.height, seg.width);
        let load = |name: &str, c: usize| -> Result<Vec<f32>> {
            load_map(&dir.join(name))?.expect_shape(h, w, c)?.into_f32()
        };
        let maps = FrameMaps {
            height: h,
            width: w,
            seg: seg.into_u8()?,
            matching: load(BUNDLE_FILES[1], MATCH_CHANNELS)?,
            intra: load(BUNDLE_FILES[2], 1)?,
            inter: load(BUNDLE_FILES[3], 1)?,
            heat: load(BUNDLE_FILES[4], NUM_KEYPOINTS)?,
        };
        maps.validate()?;
        Ok(maps)
    }
}

/// Root-relative metric depth targets: `alpha * D_intra(psi(x))` for every
/// matched vertex.
pub fn intra_targets(
    intra: &[f32],
    width: usize,
    psi: &[Option<Pixel>],
    alpha: f64,
) -> Vec<Option<f64>> {
    psi.iter()
        .map(|p| {
            p.map(|px| {
                let idx = px.y as usize * width + px.x as usize;
                alpha * intra[idx] as f64
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intra_target_scaling() {
        let intra = vec![0.0f32, 1.0, 0.5, 0.0];
        let psi = vec![
            Some(Pixel::new(0.0, 0.0)),
            Some(Pixel::new(1.0, 0.0)),
            None,
        ];
        let q = intra_targets(&intra, 2, &psi, 0.09);
        assert_eq!(q[0], Some(0.0));
        assert!((q[1].unwrap() - 0.09).abs() < 1e-12);
        assert_eq!(q[2], None);
    }

    #[test]
    fn bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = FrameMaps::empty(16, 20);
        m.seg[5] = LEFT;
        m.seg[6] = RIGHT;
        m.matching[15] = 0.25;
        m.intra[5] = -0.5;
        m.inter[6] = 0.125;
        m.heat[7 * NUM_KEYPOINTS + 3] = 1.0;
        m.save_bundle(dir.path()).unwrap();
        assert_eq!(FrameMaps::load_bundle(dir.path()).unwrap(), m);
    }

    #[test]
    fn bundle_missing_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        FrameMaps::empty(16, 16).save_bundle(dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("heat.r2hm")).unwrap();
        let err = FrameMaps::load_bundle(dir.path()).unwrap_err();
        assert!(err.to_string().contains("heat.r2hm"));
    }

    #[test]
    fn bundle_dim_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        FrameMaps::empty(16, 16).save_bundle(dir.path()).unwrap();
        save_map(&dir.path().join("dintra.r2hm"), &Raster::f32(16, 16, 2, vec![0.0; 512])).unwrap();
        assert!(matches!(
            FrameMaps::load_bundle(dir.path()),
            Err(Error::DimMismatch { .. })
        ));
    }
}
