//! Dense matching map: per-vertex best pixel in the extended feature space
//! `[M(pixel), sigma(S(pixel))]`.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::camera::Pixel;
use crate::hand_model::{Hand, HandModel};

use super::{hand_of_label, FrameMaps};

pub const SIGMA_LEFT: f64 = 0.0;
pub const SIGMA_RIGHT: f64 = 0.5;

/// Handedness channel value appended to the matching features.
pub fn handedness_code(hand: Hand) -> f64 {
    match hand {
        Hand::Left => SIGMA_LEFT,
        Hand::Right => SIGMA_RIGHT,
    }
}

/// Matching distance between a hand pixel and a model vertex.
pub fn matching_distance(
    feature: [f32; 3],
    pixel_hand: Hand,
    eta: &Vector3<f64>,
    vertex_hand: Hand,
) -> f64 {
    let d = Vector3::new(feature[0] as f64, feature[1] as f64, feature[2] as f64) - eta;
    let s = handedness_code(pixel_hand) - handedness_code(vertex_hand);
    (d.norm_squared() + s * s).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenseMatch {
    /// Matched pixel, present only when `distance < t_c`.
    pub pixel: Option<Pixel>,
    /// Best matching distance over all hand pixels (`+inf` if none).
    pub distance: f64,
}

/// Matches every vertex of both hands (left first) against the hand pixels
/// of the frame. Background pixels are excluded; ties go to the lowest
/// row-major pixel index.
pub fn dense_matching(maps: &FrameMaps, model: &HandModel, t_c: f64) -> Vec<DenseMatch> {
    let w = maps.width;
    let pixels: Vec<(usize, [f64; 4])> = maps
        .seg
        .iter()
        .enumerate()
        .filter_map(|(i, &l)| {
            let hand = hand_of_label(l)?;
            let f = maps.feature(i);
            Some((
                i,
                [f[0] as f64, f[1] as f64, f[2] as f64, handedness_code(hand)],
            ))
        })
        .collect();
    let n = model.num_vertices();
    (0..2 * n)
        .into_par_iter()
        .map(|v| {
            let hand = Hand::from_index(v / n);
            let eta = model.match_features[v % n];
            let target = [eta.x, eta.y, eta.z, handedness_code(hand)];
            let mut best = f64::INFINITY;
            let mut best_idx = usize::MAX;
            for (idx, f) in &pixels {
                let d2 = (f[0] - target[0]).powi(2)
                    + (f[1] - target[1]).powi(2)
                    + (f[2] - target[2]).powi(2)
                    + (f[3] - target[3]).powi(2);
                if d2 < best {
                    best = d2;
                    best_idx = *idx;
                }
            }
            let distance = best.sqrt();
            let pixel = (best_idx != usize::MAX && distance < t_c)
                .then(|| Pixel::new((best_idx % w) as f64, (best_idx / w) as f64));
            DenseMatch { pixel, distance }
        })
        .collect()
}
