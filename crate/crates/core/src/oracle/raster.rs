//! Z-buffer triangle rasterizer sampling at pixel centers.

use nalgebra::Vector3;

use crate::camera::{CameraIntrinsics, Pixel};
use crate::error::{Error, Result};
use crate::hand_model::{Hand, HandModel, PosedHands};
use crate::maps::{label_of, BG};

pub const NO_TRIANGLE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct RasterOutput {
    pub height: usize,
    pub width: usize,
    /// Camera-space depth, `+inf` on background.
    pub depth: Vec<f64>,
    pub label: Vec<u8>,
    /// Index into the triangle list passed to [`rasterize`].
    pub triangle: Vec<u32>,
    /// Perspective-correct barycentric coordinates of the visible point.
    pub bary: Vec<[f64; 3]>,
}

impl RasterOutput {
    pub fn empty(height: usize, width: usize) -> Self {
        let n = height * width;
        RasterOutput {
            height,
            width,
            depth: vec![f64::INFINITY; n],
            label: vec![BG; n],
            triangle: vec![NO_TRIANGLE; n],
            bary: vec![[0.0; 3]; n],
        }
    }

    /// Visible surface point of pixel `idx`.
    pub fn surface_point(
        &self,
        idx: usize,
        vertices: &[Vector3<f64>],
        triangles: &[[u32; 3]],
    ) -> Option<Vector3<f64>> {
        let t = self.triangle[idx];
        if t == NO_TRIANGLE {
            return None;
        }
        let tri = triangles[t as usize];
        let b = self.bary[idx];
        Some(
            vertices[tri[0] as usize] * b[0]
                + vertices[tri[1] as usize] * b[1]
                + vertices[tri[2] as usize] * b[2],
        )
    }
}

#[inline]
fn edge(a: &Pixel, b: &Pixel, p: &Pixel) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Tie rule for pixel centers exactly on an edge. An edge and its reverse
/// never both qualify, so pixels on shared edges are drawn once.
#[inline]
fn owns_edge(a: &Pixel, b: &Pixel) -> bool {
    let dy = b.y - a.y;
    dy < 0.0 || (dy == 0.0 && b.x - a.x > 0.0)
}

#[inline]
fn inside(w: f64, a: &Pixel, b: &Pixel) -> bool {
    w > 0.0 || (w == 0.0 && owns_edge(a, b))
}

/// Rasterizes `triangles` over `vertices`, labeling each covered pixel with
/// the triangle's entry in `labels`. Geometry with `z <= 0` is rejected.
pub fn rasterize(
    vertices: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    labels: &[u8],
    intrinsics: &CameraIntrinsics,
) -> Result<RasterOutput> {
    if labels.len() != triangles.len() {
        return Err(Error::DimMismatch {
            expected: format!("{} triangle labels", triangles.len()),
            found: labels.len().to_string(),
        });
    }
    let projected: Vec<Pixel> = vertices
        .iter()
        .map(|v| intrinsics.project(v))
        .collect::<Result<_>>()?;
    let (h, w) = (intrinsics.height, intrinsics.width);
    let mut out = RasterOutput::empty(h, w);
    for (ti, tri) in triangles.iter().enumerate() {
        let mut ids = [tri[0] as usize, tri[1] as usize, tri[2] as usize];
        let mut slots = [0usize, 1, 2];
        let area0 = edge(&projected[ids[0]], &projected[ids[1]], &projected[ids[2]]);
        if area0 == 0.0 || !area0.is_finite() {
            continue;
        }
        if area0 < 0.0 {
            ids.swap(1, 2);
            slots.swap(1, 2);
        }
        let area = area0.abs();
        let p = ids.map(|i| projected[i]);
        let iz = ids.map(|i| 1.0 / vertices[i].z);

        let min_x = p.iter().map(|q| q.x).fold(f64::INFINITY, f64::min);
        let max_x = p.iter().map(|q| q.x).fold(f64::NEG_INFINITY, f64::max);
        let min_y = p.iter().map(|q| q.y).fold(f64::INFINITY, f64::min);
        let max_y = p.iter().map(|q| q.y).fold(f64::NEG_INFINITY, f64::max);
        if max_x < 0.0 || max_y < 0.0 || min_x > (w - 1) as f64 || min_y > (h - 1) as f64 {
            continue;
        }
        let c0 = min_x.ceil().max(0.0) as usize;
        let c1 = max_x.floor().min((w - 1) as f64) as usize;
        let r0 = min_y.ceil().max(0.0) as usize;
        let r1 = max_y.floor().min((h - 1) as f64) as usize;

        for r in r0..=r1 {
            for c in c0..=c1 {
                let q = Pixel::new(c as f64, r as f64);
                let w0 = edge(&p[1], &p[2], &q);
                let w1 = edge(&p[2], &p[0], &q);
                let w2 = edge(&p[0], &p[1], &q);
                if !(inside(w0, &p[1], &p[2]) && inside(w1, &p[2], &p[0]) && inside(w2, &p[0], &p[1])) {
                    continue;
                }
                let l = [w0 / area, w1 / area, w2 / area];
                let inv = l[0] * iz[0] + l[1] * iz[1] + l[2] * iz[2];
                let z = 1.0 / inv;
                let idx = r * w + c;
                if z < out.depth[idx] {
                    out.depth[idx] = z;
                    out.label[idx] = labels[ti];
                    out.triangle[idx] = ti as u32;
                    let mut b = [0.0; 3];
                    for k in 0..3 {
                        b[slots[k]] = l[k] * iz[k] * z;
                    }
                    out.bary[idx] = b;
                }
            }
        }
    }
    Ok(out)
}

/// Combined triangle list of both hands over the stacked vertex array, with
/// per-triangle hand labels.
pub fn hand_triangles(model: &HandModel) -> (Vec<[u32; 3]>, Vec<u8>) {
    let n = model.num_vertices() as u32;
    let mut tris = Vec::with_capacity(2 * model.triangles.len());
    let mut labels = Vec::with_capacity(2 * model.triangles.len());
    for hand in Hand::BOTH {
        let off = n * hand.index() as u32;
        for t in model.hand_triangles(hand) {
            tris.push([t[0] + off, t[1] + off, t[2] + off]);
            labels.push(label_of(hand));
        }
    }
    (tris, labels)
}

pub fn rasterize_hands(
    model: &HandModel,
    posed: &PosedHands,
    intrinsics: &CameraIntrinsics,
) -> Result<RasterOutput> {
    let (tris, labels) = hand_triangles(model);
    rasterize(&posed.vertices, &tris, &labels, intrinsics)
}
