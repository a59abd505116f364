//! Individual residual blocks. Each pushes rows already scaled by the square
//! root of its weight, so the block's energy is the sum of squared rows.

use nalgebra::Vector3;

use crate::camera::{CameraIntrinsics, Pixel};
use crate::error::{Error, Result};
use crate::hand_model::{
    bones_adjacent, palm_length, CollisionGaussian, Hand, HandModel, HandParams, PosedHands,
    NUM_SHAPE, POSE_DIM,
};
use crate::maps::{DistanceField, InterTarget, KEYPOINTS_PER_HAND, NUM_KEYPOINTS};

/// Frozen silhouette sample: a boundary vertex and its normal weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SilhouetteVertex {
    /// Stacked vertex index.
    pub vertex: usize,
    pub hand: Hand,
    pub weight: f64,
}

#[inline]
fn project(intr: &CameraIntrinsics, x: &Vector3<f64>, degenerate: &mut bool) -> Option<Pixel> {
    if x.z > 0.0 {
        Some(intr.project_unchecked(x))
    } else {
        *degenerate = true;
        None
    }
}

/// Two rows per matched vertex: the pixel offset to its match.
pub fn phi_dense(
    out: &mut Vec<f64>,
    posed: &PosedHands,
    psi: &[Option<Pixel>],
    intr: &CameraIntrinsics,
    lambda: f64,
    degenerate: &mut bool,
) {
    let s = lambda.sqrt();
    for (x, target) in posed.vertices.iter().zip(psi) {
        let Some(q) = target else { continue };
        match project(intr, x, degenerate) {
            Some(p) => out.extend([s * (p.x - q.x), s * (p.y - q.y)]),
            None => out.extend([0.0, 0.0]),
        }
    }
}

/// One row per frozen boundary vertex: weighted distance to the hand's
/// silhouette edge in the target segmentation.
pub fn phi_sil(
    out: &mut Vec<f64>,
    posed: &PosedHands,
    boundary: &[SilhouetteVertex],
    dt: &[Option<DistanceField>; 2],
    intr: &CameraIntrinsics,
    lambda: f64,
    degenerate: &mut bool,
) {
    let s = lambda.sqrt();
    for b in boundary {
        let row = match (&dt[b.hand.index()], project(intr, &posed.vertices[b.vertex], degenerate)) {
            (Some(field), Some(p)) => s * b.weight * field.sample_bicubic(&p),
            _ => 0.0,
        };
        out.push(row);
    }
}

/// Two rows per detected keypoint.
pub fn phi_key(
    out: &mut Vec<f64>,
    model: &HandModel,
    posed: &PosedHands,
    keypoints: &[Option<Pixel>; NUM_KEYPOINTS],
    intr: &CameraIntrinsics,
    lambda: f64,
    degenerate: &mut bool,
) {
    let s = lambda.sqrt();
    for hand in Hand::BOTH {
        let model_keys = posed.keypoints(model, hand);
        for (k, x) in model_keys.iter().enumerate() {
            let Some(q) = keypoints[hand.index() * KEYPOINTS_PER_HAND + k] else {
                continue;
            };
            match project(intr, x, degenerate) {
                Some(p) => out.extend([s * (p.x - q.x), s * (p.y - q.y)]),
                None => out.extend([0.0, 0.0]),
            }
        }
    }
}

/// One row per matched vertex: root-relative depth against its target.
pub fn phi_intra(out: &mut Vec<f64>, posed: &PosedHands, intra: &[Option<f64>], lambda: f64) {
    let s = lambda.sqrt();
    let roots = Hand::BOTH.map(|h| posed.root(h).z);
    for (v, (x, q)) in posed.vertices.iter().zip(intra).enumerate() {
        if let Some(q) = q {
            let root = roots[posed.hand_of(v).index()];
            out.push(s * (q - (x.z - root)));
        }
    }
}

/// At most one row: the root depth difference against the inter-hand target.
pub fn phi_inter(out: &mut Vec<f64>, posed: &PosedHands, inter: Option<&InterTarget>, lambda: f64) {
    if let Some(t) = inter.filter(|t| t.both_visible) {
        let dz = posed.root(Hand::Left).z - posed.root(Hand::Right).z;
        out.push(lambda.sqrt() * (dz - t.q_inter));
    }
}

/// Weights used by the parameter prior.
#[derive(Clone, Copy, Debug)]
pub struct PriorWeights {
    pub lambda_beta: f64,
    pub lambda_theta: f64,
    pub lambda_tau: f64,
    pub lambda_sym: f64,
    pub t_theta: f64,
}

/// Fixed-size prior rows: shape Tikhonov (20), thresholded articulation
/// (2 x 45), temporal shape (20), temporal pose (102), shape symmetry (10).
/// Without a previous frame the temporal rows are zero.
pub fn omega_0(out: &mut Vec<f64>, params: &HandParams, prev: Option<&HandParams>, w: &PriorWeights) {
    let sb = w.lambda_beta.sqrt();
    out.extend(params.beta.iter().map(|b| sb * b));

    let st = w.lambda_theta.sqrt();
    for hand in Hand::BOTH {
        let art = params.articulation(hand);
        let norm = art.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > w.t_theta {
            out.extend(art.iter().map(|a| st * a));
        } else {
            out.extend(std::iter::repeat_n(0.0, art.len()));
        }
    }

    let sp = w.lambda_tau.sqrt();
    match prev {
        Some(p) => {
            out.extend(params.beta.iter().zip(&p.beta).map(|(b, b0)| sp * (b0 - b)));
            out.extend(params.theta.iter().zip(&p.theta).map(|(t, t0)| sp * (t0 - t)));
        }
        None => out.extend(std::iter::repeat_n(0.0, 2 * NUM_SHAPE + 2 * POSE_DIM)),
    }

    let ss = w.lambda_sym.sqrt();
    let (l, r) = (params.beta_hand(Hand::Left), params.beta_hand(Hand::Right));
    out.extend(l.iter().zip(r).map(|(a, b)| ss * (a - b)));
}

/// Integral of the product of two isotropic normalized 3D Gaussians.
pub fn gaussian_overlap(a: &CollisionGaussian, b: &CollisionGaussian) -> Result<f64> {
    if !(a.std > 0.0 && b.std > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Gaussian std must be > 0, got {} and {}",
            a.std, b.std
        )));
    }
    Ok(overlap_unchecked(a, b))
}

#[inline]
fn overlap_unchecked(a: &CollisionGaussian, b: &CollisionGaussian) -> f64 {
    let s2 = a.std * a.std + b.std * b.std;
    let d2 = (a.mean - b.mean).norm_squared();
    (2.0 * std::f64::consts::PI * s2).powf(-1.5) * (-d2 / (2.0 * s2)).exp()
}

/// Penalized Gaussian pairs over the stacked list (left bones, then right):
/// every inter-hand pair and every same-hand pair of non-adjacent bones.
pub fn overlap_pairs(gaussians: &[CollisionGaussian]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..gaussians.len() {
        for j in i + 1..gaussians.len() {
            let (a, b) = (&gaussians[i], &gaussians[j]);
            if a.hand != b.hand || !bones_adjacent(a.bone, b.bone) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

pub fn omega_overlap(
    out: &mut Vec<f64>,
    gaussians: &[CollisionGaussian],
    pairs: &[(usize, usize)],
    lambda: f64,
) {
    let s = lambda.sqrt();
    out.extend(
        pairs
            .iter()
            .map(|&(i, j)| s * overlap_unchecked(&gaussians[i], &gaussians[j])),
    );
}

/// Two rows: each hand's palm length against the prior.
pub fn omega_scale(out: &mut Vec<f64>, model: &HandModel, params: &HandParams, alpha: f64, lambda: f64) {
    let s = lambda.sqrt();
    for hand in Hand::BOTH {
        out.push(s * (palm_length(model, params.beta_hand(hand)) - alpha));
    }
}
