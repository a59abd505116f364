//! Map corruption for robustness experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::maps::{BG, KEYPOINTS_PER_HAND, LEFT, NUM_KEYPOINTS, RIGHT};

use super::render::{splat_heatmap, RenderedFrame};
use crate::hand_model::INTERIOR_JOINTS;

/// Parsed from `match=0.01,flip=0.02,heat_jitter=2,depth=0,seed=7`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoiseSpec {
    /// Gaussian σ added to each matching-feature channel.
    pub matching: f64,
    /// Fraction of pixels whose label is replaced by another label.
    pub flip: f64,
    /// Per-axis Gaussian σ (pixels) on heatmap centers.
    pub heat_jitter: f64,
    /// Gaussian σ on both depth maps, palm lengths.
    pub depth: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn parse(s: &str) -> Result<NoiseSpec> {
        let mut spec = NoiseSpec::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("noise entry `{part}` is not key=value")))?;
            let num = || {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| *x >= 0.0 && x.is_finite())
                    .ok_or_else(|| Error::InvalidArgument(format!("noise `{k}` needs a value >= 0, got `{v}`")))
            };
            match k.trim() {
                "match" => spec.matching = num()?,
                "flip" => spec.flip = num()?,
                "heat_jitter" => spec.heat_jitter = num()?,
                "depth" => spec.depth = num()?,
                "seed" => {
                    spec.seed = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("noise seed `{v}` is not an integer")))?
                }
                other => return Err(Error::InvalidArgument(format!("unknown noise key `{other}`"))),
            }
        }
        if spec.flip > 1.0 {
            return Err(Error::InvalidArgument("flip fraction must be <= 1".into()));
        }
        Ok(spec)
    }

    pub fn is_zero(&self) -> bool {
        self.matching == 0.0 && self.flip == 0.0 && self.heat_jitter == 0.0 && self.depth == 0.0
    }
}

/// Corrupts the maps of `frame` in place. A zero spec leaves them untouched.
pub fn apply_noise(frame: &mut RenderedFrame, spec: &NoiseSpec, frame_index: usize) {
    if spec.is_zero() {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ frame_index as u64);
    let maps = &mut frame.maps;

    if spec.matching > 0.0 {
        let n = Normal::new(0.0, spec.matching).unwrap();
        for (i, v) in maps.matching.iter_mut().enumerate() {
            if maps.seg[i / 3] != BG {
                *v = (*v as f64 + n.sample(&mut rng)).clamp(0.0, 1.0) as f32;
            }
        }
    }
    if spec.depth > 0.0 {
        let n = Normal::new(0.0, spec.depth).unwrap();
        for i in 0..maps.len() {
            if maps.seg[i] != BG {
                maps.intra[i] += n.sample(&mut rng) as f32;
                maps.inter[i] += n.sample(&mut rng) as f32;
            }
        }
    }
    if spec.flip > 0.0 {
        for l in maps.seg.iter_mut() {
            if rng.random::<f64>() < spec.flip {
                let others: [u8; 2] = match *l {
                    BG => [LEFT, RIGHT],
                    LEFT => [BG, RIGHT],
                    _ => [BG, LEFT],
                };
                *l = others[rng.random_range(0..2)];
            }
        }
    }
    if spec.heat_jitter > 0.0 {
        let n = Normal::new(0.0, spec.heat_jitter).unwrap();
        maps.heat.iter_mut().for_each(|v| *v = 0.0);
        for g in frame.gt.iter().filter(|g| g.id >= INTERIOR_JOINTS.len()) {
            let j = g.hand.index() * KEYPOINTS_PER_HAND + g.id - INTERIOR_JOINTS.len();
            debug_assert!(j < NUM_KEYPOINTS);
            let mut c = g.pixel;
            c.x += n.sample(&mut rng);
            c.y += n.sample(&mut rng);
            splat_heatmap(maps, j, &c, frame.heat_sigma[g.hand.index()]);
        }
    }
}
