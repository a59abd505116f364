//! Exact Euclidean distance transform (separable lower-envelope method) and
//! the occlusion-aware per-hand silhouette distance fields.

use crate::camera::Pixel;
use crate::hand_model::Hand;

use super::label_of;

/// Pixels labeled `label` that are 4-adjacent to an in-image pixel with a
/// different label.
pub fn edge_pixels(seg: &[u8], height: usize, width: usize, label: u8) -> Vec<bool> {
    let mut out = vec![false; seg.len()];
    for r in 0..height {
        for c in 0..width {
            let i = r * width + c;
            if seg[i] != label {
                continue;
            }
            let differs = (r > 0 && seg[i - width] != label)
                || (r + 1 < height && seg[i + width] != label)
                || (c > 0 && seg[i - 1] != label)
                || (c + 1 < width && seg[i + 1] != label);
            out[i] = differs;
        }
    }
    out
}

fn lower_envelope(f: &[f64], out: &mut [f64], sites: &mut Vec<usize>, bounds: &mut Vec<f64>) {
    sites.clear();
    bounds.clear();
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        let qf = q as f64;
        loop {
            let Some(&p) = sites.last() else {
                sites.push(q);
                bounds.push(f64::NEG_INFINITY);
                break;
            };
            let pf = p as f64;
            let s = ((fq + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
            if s <= *bounds.last().unwrap() {
                sites.pop();
                bounds.pop();
                continue;
            }
            sites.push(q);
            bounds.push(s);
            break;
        }
    }
    if sites.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < sites.len() && bounds[k + 1] < qf {
            k += 1;
        }
        let d = qf - sites[k] as f64;
        *o = d * d + f[sites[k]];
    }
}

/// Squared Euclidean distance (pixels²) to the nearest feature pixel;
/// `+inf` everywhere if there are none.
pub fn squared_edt(features: &[bool], height: usize, width: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = features
        .iter()
        .map(|&f| if f { 0.0 } else { f64::INFINITY })
        .collect();
    let mut sites = Vec::new();
    let mut bounds = Vec::new();
    let mut col = vec![0.0; height];
    let mut col_out = vec![0.0; height];
    for c in 0..width {
        for r in 0..height {
            col[r] = grid[r * width + c];
        }
        lower_envelope(&col, &mut col_out, &mut sites, &mut bounds);
        for r in 0..height {
            grid[r * width + c] = col_out[r];
        }
    }
    let mut row_out = vec![0.0; width];
    for r in 0..height {
        let row = &grid[r * width..(r + 1) * width];
        lower_envelope(row, &mut row_out, &mut sites, &mut bounds);
        grid[r * width..(r + 1) * width].copy_from_slice(&row_out);
    }
    grid
}

/// Distance image (pixels) with central-difference gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    pub grad: Vec<[f64; 2]>,
}

impl DistanceField {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Self {
        let at = |r: usize, c: usize| values[r * width + c];
        let mut grad = vec![[0.0; 2]; values.len()];
        for r in 0..height {
            for c in 0..width {
                let gx = if width < 2 {
                    0.0
                } else if c == 0 {
                    at(r, 1) - at(r, 0)
                } else if c + 1 == width {
                    at(r, c) - at(r, c - 1)
                } else {
                    0.5 * (at(r, c + 1) - at(r, c - 1))
                };
                let gy = if height < 2 {
                    0.0
                } else if r == 0 {
                    at(1, c) - at(0, c)
                } else if r + 1 == height {
                    at(r, c) - at(r - 1, c)
                } else {
                    0.5 * (at(r + 1, c) - at(r - 1, c))
                };
                grad[r * width + c] = [gx, gy];
            }
        }
        DistanceField {
            height,
            width,
            values,
            grad,
        }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    fn clamp_coords(&self, px: &Pixel) -> (f64, f64) {
        (
            px.x.clamp(0.0, (self.width - 1) as f64),
            px.y.clamp(0.0, (self.height - 1) as f64),
        )
    }

    /// Value at the nearest pixel (clamped to the border).
    pub fn sample_nearest(&self, px: &Pixel) -> f64 {
        let (x, y) = self.clamp_coords(px);
        self.at(y.round() as usize, x.round() as usize)
    }

    /// Bilinear interpolation between pixel centers (clamped to the border).
    /// Equals the pixel value exactly at integer coordinates.
    pub fn sample_bilinear(&self, px: &Pixel) -> f64 {
        let (x, y) = self.clamp_coords(px);
        let (c0, r0) = (x.floor() as usize, y.floor() as usize);
        let c1 = (c0 + 1).min(self.width - 1);
        let r1 = (r0 + 1).min(self.height - 1);
        let (fx, fy) = (x - c0 as f64, y - r0 as f64);
        let top = self.at(r0, c0) * (1.0 - fx) + self.at(r0, c1) * fx;
        let bottom = self.at(r1, c0) * (1.0 - fx) + self.at(r1, c1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Catmull-Rom bicubic interpolation (clamped to the border). Continuously
    /// differentiable in the sample position, which keeps finite-difference
    /// Jacobians of the silhouette term consistent across pixel lines.
    pub fn sample_bicubic(&self, px: &Pixel) -> f64 {
        let (x, y) = self.clamp_coords(px);
        let (c0, r0) = (x.floor() as isize, y.floor() as isize);
        let (fx, fy) = (x - c0 as f64, y - r0 as f64);
        let wx = catmull_rom_weights(fx);
        let wy = catmull_rom_weights(fy);
        let clamp_r = |r: isize| r.clamp(0, self.height as isize - 1) as usize;
        let clamp_c = |c: isize| c.clamp(0, self.width as isize - 1) as usize;
        let mut acc = 0.0;
        for (i, wr) in wy.iter().enumerate() {
            let r = clamp_r(r0 - 1 + i as isize);
            let mut row = 0.0;
            for (k, wc) in wx.iter().enumerate() {
                row += wc * self.at(r, clamp_c(c0 - 1 + k as isize));
            }
            acc += wr * row;
        }
        acc
    }

    /// Gradient at the nearest pixel.
    pub fn gradient(&self, px: &Pixel) -> [f64; 2] {
        let (x, y) = self.clamp_coords(px);
        self.grad[y.round() as usize * self.width + x.round() as usize]
    }
}

fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Distance to the silhouette edge of `hand`; `None` when the hand is absent
/// or has no edge. With `zero_other`, the field is 0 on the other hand's
/// pixels.
pub fn hand_distance_transform(
    seg: &[u8],
    height: usize,
    width: usize,
    hand: Hand,
    zero_other: bool,
) -> Option<DistanceField> {
    let label = label_of(hand);
    let edges = edge_pixels(seg, height, width, label);
    if !edges.iter().any(|&e| e) {
        return None;
    }
    let other = label_of(hand.other());
    let values = squared_edt(&edges, height, width)
        .into_iter()
        .zip(seg)
        .map(|(d2, &l)| if zero_other && l == other { 0.0 } else { d2.sqrt() })
        .collect();
    Some(DistanceField::new(height, width, values))
}

/// `[DT_left, DT_right]`.
pub fn distance_transforms(
    seg: &[u8],
    height: usize,
    width: usize,
    zero_other: bool,
) -> [Option<DistanceField>; 2] {
    Hand::BOTH.map(|h| hand_distance_transform(seg, height, width, h, zero_other))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{LEFT, RIGHT};
    use proptest::prelude::*;

    fn brute(features: &[bool], h: usize, w: usize) -> Vec<f64> {
        let pts: Vec<(usize, usize)> = (0..h * w).filter(|&i| features[i]).map(|i| (i / w, i % w)).collect();
        (0..h * w)
            .map(|i| {
                let (r, c) = (i / w, i % w);
                pts.iter()
                    .map(|&(pr, pc)| {
                        let dr = r as f64 - pr as f64;
                        let dc = c as f64 - pc as f64;
                        (dr * dr + dc * dc).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn single_center_feature() {
        let mut f = vec![false; 9];
        f[4] = true;
        let d: Vec<f64> = squared_edt(&f, 3, 3).iter().map(|v| v.sqrt()).collect();
        assert_eq!(d[4], 0.0);
        assert_eq!(d[1], 1.0);
        assert!((d[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d, brute(&f, 3, 3));
    }

    #[test]
    fn no_features_is_infinite() {
        assert!(squared_edt(&[false; 12], 3, 4).iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn edge_and_occlusion_rules() {
        // 5x5: left square in the middle with a right-hand column on its side.
        let mut seg = vec![0u8; 25];
        for r in 1..4 {
            for c in 1..4 {
                seg[r * 5 + c] = LEFT;
            }
            seg[r * 5 + 4] = RIGHT;
        }
        let edges = edge_pixels(&seg, 5, 5, LEFT);
        assert!(!edges[2 * 5 + 2], "interior pixel is not an edge");
        assert!(edges[5 + 1] && edges[2 * 5 + 3]);
        let dt = hand_distance_transform(&seg, 5, 5, Hand::Left, true).unwrap();
        assert_eq!(dt.at(1, 1), 0.0);
        assert_eq!(dt.at(2, 2), 1.0);
        for r in 1..4 {
            assert_eq!(dt.at(r, 4), 0.0, "right-hand pixel inside DT_left");
        }
        let raw = hand_distance_transform(&seg, 5, 5, Hand::Left, false).unwrap();
        assert_eq!(raw.at(2, 4), 1.0);
        assert!(hand_distance_transform(&vec![0u8; 25], 5, 5, Hand::Left, true).is_none());
    }

    #[test]
    fn bilinear_matches_pixels_at_centers() {
        let f = DistanceField::new(2, 2, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(f.sample_bilinear(&Pixel::new(1.0, 1.0)), 3.0);
        assert_eq!(f.sample_bilinear(&Pixel::new(0.5, 0.5)), 1.5);
        assert_eq!(f.sample_bilinear(&Pixel::new(-4.0, 9.0)), 2.0);
        assert_eq!(f.sample_nearest(&Pixel::new(0.6, 0.2)), 1.0);
    }

    #[test]
    fn bicubic_reproduces_linear_fields() {
        let (h, w) = (6, 7);
        let values = (0..h * w).map(|i| 2.0 * (i % w) as f64 - 0.5 * (i / w) as f64).collect();
        let f = DistanceField::new(h, w, values);
        for &(x, y) in &[(2.0, 3.0), (2.25, 1.75), (3.5, 2.5), (4.9, 3.1)] {
            let v = f.sample_bicubic(&Pixel::new(x, y));
            assert!((v - (2.0 * x - 0.5 * y)).abs() < 1e-12, "{x},{y}: {v}");
        }
        assert_eq!(f.sample_bicubic(&Pixel::new(0.0, 0.0)), 0.0);
    }

    #[test]
    fn bicubic_is_smooth_across_pixel_lines() {
        let values: Vec<f64> = (0..64).map(|i| ((i * 37 % 11) as f64).sqrt()).collect();
        let f = DistanceField::new(8, 8, values);
        let d = |x: f64, h: f64| {
            (f.sample_bicubic(&Pixel::new(x + h, 3.4)) - f.sample_bicubic(&Pixel::new(x - h, 3.4))) / (2.0 * h)
        };
        let left = d(4.0 - 1e-6, 1e-7);
        let right = d(4.0 + 1e-6, 1e-7);
        assert!((left - right).abs() < 1e-4, "{left} vs {right}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn matches_brute_force(h in 1usize..24, w in 1usize..24, bits in proptest::collection::vec(0u8..12, 576)) {
            let f: Vec<bool> = bits[..h * w].iter().map(|&b| b == 0).collect();
            let fast: Vec<f64> = squared_edt(&f, h, w).iter().map(|v| v.sqrt()).collect();
            let slow = brute(&f, h, w);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a.is_infinite() && b.is_infinite()) || (a - b).abs() <= 1e-9);
            }
        }
    }
}
