use nalgebra::Vector3;

use crate::camera::{CameraIntrinsics, Pixel};
use crate::error::Result;
use crate::hand_model::{pose_hands, Hand, HandModel, HandParams, PosedHands, INTERIOR_JOINTS};
use crate::maps::{label_of, FrameMaps, KEYPOINTS_PER_HAND, MATCH_CHANNELS, NUM_KEYPOINTS};

use super::raster::{hand_triangles, rasterize, RasterOutput};

/// Heatmap standard deviation as a fraction of the hand's crop size.
pub const HEATMAP_RADIUS: f64 = 0.07;
/// Surface slack (meters) before a nearer depth counts as occluding a joint.
pub const OCCLUSION_SLACK: f64 = 0.02;
/// Annotated points per hand: 14 interior joints, then the 6 fit keypoints.
pub const GT_POINTS_PER_HAND: usize = INTERIOR_JOINTS.len() + KEYPOINTS_PER_HAND;

/// One annotated point. Ids `0..14` are interior joints, `14..20` are the
/// wrist and the five fingertips.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GtPoint {
    pub frame: usize,
    pub hand: Hand,
    pub id: usize,
    pub pixel: Pixel,
    pub position: Vector3<f64>,
    pub occluded: bool,
}

impl GtPoint {
    pub fn is_interior(&self) -> bool {
        self.id < INTERIOR_JOINTS.len()
    }
}

#[derive(Clone, Debug)]
pub struct RenderedFrame {
    pub maps: FrameMaps,
    pub gt: Vec<GtPoint>,
    pub raster: RasterOutput,
    pub posed: PosedHands,
    /// Heatmap standard deviation per hand, pixels.
    pub heat_sigma: [f64; 2],
}

/// The 20 annotated 3D points of `hand` in id order.
pub fn annotation_points(model: &HandModel, posed: &PosedHands, hand: Hand) -> [Vector3<f64>; GT_POINTS_PER_HAND] {
    let joints = &posed.joints[hand.index()];
    let keys = posed.keypoints(model, hand);
    let mut out = [Vector3::zeros(); GT_POINTS_PER_HAND];
    for (i, &j) in INTERIOR_JOINTS.iter().enumerate() {
        out[i] = joints[j];
    }
    out[INTERIOR_JOINTS.len()..].copy_from_slice(&keys);
    out
}

/// Projected bounding-box size of a hand, the larger edge in pixels.
pub fn crop_size(intrinsics: &CameraIntrinsics, vertices: &[Vector3<f64>]) -> f64 {
    let mut lo = Pixel::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Pixel::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vertices {
        let p = intrinsics.project_unchecked(v);
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    }
    (hi.x - lo.x).max(hi.y - lo.y)
}

/// Writes a unit-peak Gaussian centered on the pixel nearest `center` into
/// heatmap channel `j`. Off-image centers leave the channel zero.
pub fn splat_heatmap(maps: &mut FrameMaps, j: usize, center: &Pixel, sigma: f64) {
    let (h, w) = (maps.height, maps.width);
    let (cx, cy) = (center.x.round(), center.y.round());
    if !(cx >= 0.0 && cy >= 0.0 && cx < w as f64 && cy < h as f64) || !(sigma > 0.0) {
        return;
    }
    let inv = 1.0 / (2.0 * sigma * sigma);
    for r in 0..h {
        for c in 0..w {
            let d2 = (c as f64 - cx).powi(2) + (r as f64 - cy).powi(2);
            maps.heat[(r * w + c) * NUM_KEYPOINTS + j] = (-d2 * inv).exp() as f32;
        }
    }
}

fn occluded(raster: &RasterOutput, intrinsics: &CameraIntrinsics, hand: Hand, p: &Vector3<f64>) -> bool {
    let Some((r, c)) = p
        .z
        .gt(&0.0)
        .then(|| intrinsics.project_unchecked(p))
        .and_then(|px| intrinsics.pixel_of(&px))
    else {
        return false;
    };
    let idx = r * raster.width + c;
    let d = raster.depth[idx];
    d < p.z - OCCLUSION_SLACK || (raster.label[idx] == label_of(hand.other()) && d < p.z)
}

/// Ideal predictor maps and annotations for `params`. `alpha` normalizes
/// the depth maps.
pub fn render_maps(
    model: &HandModel,
    params: &HandParams,
    intrinsics: &CameraIntrinsics,
    alpha: f64,
    frame: usize,
) -> Result<RenderedFrame> {
    let posed = pose_hands(model, params)?;
    let (tris, labels) = hand_triangles(model);
    let raster = rasterize(&posed.vertices, &tris, &labels, intrinsics)?;
    let (h, w) = (intrinsics.height, intrinsics.width);
    let n = model.num_vertices();
    let mut maps = FrameMaps::empty(h, w);
    maps.seg.copy_from_slice(&raster.label);

    let roots = Hand::BOTH.map(|hand| posed.root(hand).z);
    let visible = Hand::BOTH.map(|hand| maps.has_hand(hand));
    let inter_left = if visible[0] && visible[1] {
        (roots[0] - roots[1]) / alpha
    } else {
        0.0
    };
    for idx in 0..h * w {
        let t = raster.triangle[idx];
        if t == super::raster::NO_TRIANGLE {
            continue;
        }
        let tri = tris[t as usize];
        let b = raster.bary[idx];
        let mut eta = Vector3::zeros();
        for k in 0..3 {
            eta += model.match_features[tri[k] as usize % n] * b[k];
        }
        for k in 0..MATCH_CHANNELS {
            maps.matching[idx * MATCH_CHANNELS + k] = eta[k] as f32;
        }
        let hand = Hand::from_index(tri[0] as usize / n);
        maps.intra[idx] = ((raster.depth[idx] - roots[hand.index()]) / alpha) as f32;
        maps.inter[idx] = match hand {
            Hand::Left => inter_left,
            Hand::Right => -inter_left,
        } as f32;
    }

    let mut gt = Vec::with_capacity(2 * GT_POINTS_PER_HAND);
    let mut heat_sigma = [0.0; 2];
    for hand in Hand::BOTH {
        let sigma = HEATMAP_RADIUS * crop_size(intrinsics, posed.hand_vertices(hand));
        heat_sigma[hand.index()] = sigma;
        let points = annotation_points(model, &posed, hand);
        for (id, p) in points.iter().enumerate() {
            let pixel = intrinsics.project(p)?;
            gt.push(GtPoint {
                frame,
                hand,
                id,
                pixel,
                position: *p,
                occluded: occluded(&raster, intrinsics, hand, p),
            });
        }
        for k in 0..KEYPOINTS_PER_HAND {
            let px = intrinsics.project_unchecked(&points[INTERIOR_JOINTS.len() + k]);
            splat_heatmap(&mut maps, hand.index() * KEYPOINTS_PER_HAND + k, &px, sigma);
        }
    }
    Ok(RenderedFrame {
        maps,
        gt,
        raster,
        posed,
        heat_sigma,
    })
}
