//! Model-to-background boundary vertices and their silhouette weights.

use nalgebra::Vector3;

use crate::camera::CameraIntrinsics;
use crate::error::Result;
use crate::hand_model::{Hand, HandModel, PosedHands};
use crate::maps::{DistanceField, FittingTargets, BG};
use crate::oracle::{rasterize_hands, RasterOutput};

use super::terms::SilhouetteVertex;

/// Area-weighted vertex normals of both hands, stacked.
pub fn vertex_normals(model: &HandModel, posed: &PosedHands) -> Vec<Vector3<f64>> {
    let n = model.num_vertices();
    let mut normals = vec![Vector3::zeros(); 2 * n];
    for hand in Hand::BOTH {
        let off = hand.index() * n;
        for t in model.hand_triangles(hand) {
            let [a, b, c] = t.map(|i| off + i as usize);
            let fnorm = (posed.vertices[b] - posed.vertices[a]).cross(&(posed.vertices[c] - posed.vertices[a]));
            for v in [a, b, c] {
                normals[v] += fnorm;
            }
        }
    }
    for v in normals.iter_mut() {
        let len = v.norm();
        if len > 0.0 {
            *v /= len;
        }
    }
    normals
}

fn near_background(mask: &RasterOutput, row: usize, col: usize) -> bool {
    let (h, w) = (mask.height as isize, mask.width as isize);
    for dr in -1..=1isize {
        for dc in -1..=1isize {
            let (r, c) = (row as isize + dr, col as isize + dc);
            if r >= 0 && c >= 0 && r < h && c < w && mask.label[(r * w + c) as usize] == BG {
                return true;
            }
        }
    }
    false
}

/// Stacked indices of vertices whose projection has a background pixel of
/// the combined model mask within Chebyshev distance 1. Hand-hand contact
/// edges do not qualify.
pub fn boundary_vertices_in(mask: &RasterOutput, posed: &PosedHands, intr: &CameraIntrinsics) -> Vec<usize> {
    posed
        .vertices
        .iter()
        .enumerate()
        .filter_map(|(v, x)| {
            if x.z <= 0.0 {
                return None;
            }
            let (r, c) = intr.pixel_of(&intr.project_unchecked(x))?;
            near_background(mask, r, c).then_some(v)
        })
        .collect()
}

pub fn boundary_vertices(model: &HandModel, posed: &PosedHands, intr: &CameraIntrinsics) -> Result<Vec<usize>> {
    let mask = rasterize_hands(model, posed, intr)?;
    Ok(boundary_vertices_in(&mask, posed, intr))
}

/// Alignment of the projected outward normal with the distance-field
/// gradient, in [0, 1]. A flat field gives 1; a normal pointing along the
/// view ray gives 0.
pub fn normal_weight(
    intr: &CameraIntrinsics,
    x: &Vector3<f64>,
    normal: &Vector3<f64>,
    field: &DistanceField,
) -> f64 {
    let n2 = intr.projection_jacobian(x) * normal;
    let nn = n2.norm();
    if !(nn > 1e-12) {
        return 0.0;
    }
    let g = field.gradient(&intr.project_unchecked(x));
    let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if gn < 1e-12 {
        return 1.0;
    }
    ((n2.x * g[0] + n2.y * g[1]) / (nn * gn)).abs().min(1.0)
}

/// Boundary set with weights, frozen for one LM step. Vertices of hands
/// without a distance field are dropped. With occlusion awareness, a vertex
/// whose pixel shows the other hand in the target gets weight 0, so it is
/// not pulled toward the occlusion boundary.
pub fn freeze_silhouette(
    model: &HandModel,
    posed: &PosedHands,
    targets: &FittingTargets,
    intr: &CameraIntrinsics,
) -> Result<Vec<SilhouetteVertex>> {
    let boundary = boundary_vertices(model, posed, intr)?;
    let normals = vertex_normals(model, posed);
    Ok(boundary
        .into_iter()
        .filter_map(|v| {
            let hand = posed.hand_of(v);
            let field = targets.dt[hand.index()].as_ref()?;
            let x = &posed.vertices[v];
            let occluded = targets.occlusion_aware
                && targets.shows_other_hand(hand, intr.clamped_pixel(&intr.project_unchecked(x)));
            let weight = if occluded { 0.0 } else { normal_weight(intr, x, &normals[v], field) };
            Some(SilhouetteVertex { vertex: v, hand, weight })
        })
        .collect())
}
