use crate::camera::Pixel;

use super::FrameMaps;

pub const KEYPOINTS_PER_HAND: usize = 6;
/// Channel order: left wrist, left thumb..pinky tips, right wrist, right
/// thumb..pinky tips.
pub const NUM_KEYPOINTS: usize = 2 * KEYPOINTS_PER_HAND;

/// Heatmap maxima above `t_h`; ties go to the lowest row-major index.
pub fn extract_keypoints(maps: &FrameMaps, t_h: f64) -> [Option<Pixel>; NUM_KEYPOINTS] {
    let mut out = [None; NUM_KEYPOINTS];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut best = f32::NEG_INFINITY;
        let mut best_idx = 0usize;
        for (i, v) in maps.heat.iter().skip(j).step_by(NUM_KEYPOINTS).enumerate() {
            if *v > best {
                best = *v;
                best_idx = i;
            }
        }
        if best as f64 > t_h {
            *slot = Some(Pixel::new(
                (best_idx % maps.width) as f64,
                (best_idx / maps.width) as f64,
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(m: &mut FrameMaps, r: usize, c: usize, j: usize, v: f32) {
        m.heat[(r * m.width + c) * NUM_KEYPOINTS + j] = v;
    }

    #[test]
    fn argmax_and_threshold() {
        let mut m = FrameMaps::empty(120, 160);
        set(&mut m, 50, 100, 0, 0.9);
        set(&mut m, 10, 10, 0, 0.5);
        set(&mut m, 20, 30, 1, 0.69);
        let k = extract_keypoints(&m, 0.7);
        assert_eq!(k[0], Some(Pixel::new(100.0, 50.0)));
        assert_eq!(k[1], None);
        assert!(k[2..].iter().all(|p| p.is_none()));
    }

    #[test]
    fn threshold_is_strict() {
        let mut m = FrameMaps::empty(16, 16);
        set(&mut m, 3, 3, 4, 0.7);
        assert_eq!(extract_keypoints(&m, 0.7)[4], None);
    }

    #[test]
    fn ties_take_lowest_row_major_index() {
        let mut m = FrameMaps::empty(16, 16);
        set(&mut m, 9, 2, 7, 0.8);
        set(&mut m, 4, 12, 7, 0.8);
        set(&mut m, 4, 11, 7, 0.8);
        // Oracle: first maximum in scan order.
        let ch = m.heat_channel(7);
        let max = ch.iter().cloned().fold(f32::MIN, f32::max);
        let first = ch.iter().position(|&v| v == max).unwrap();
        let k = extract_keypoints(&m, 0.7)[7].unwrap();
        assert_eq!(k, Pixel::new((first % 16) as f64, (first / 16) as f64));
        assert_eq!(k, Pixel::new(11.0, 4.0));
    }
}
