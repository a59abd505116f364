//! Inter-hand distance aggregation by per-hand medians.

use crate::hand_model::Hand;

use super::label_of;

/// Median; mean of the two central values for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterTarget {
    /// Metric signed depth distance, left root minus right root (meters).
    pub q_inter: f64,
    /// Scale-normalized aggregate before multiplying by the palm length.
    pub d_inter: f64,
    /// Both hands were visible in the segmentation.
    pub both_visible: bool,
}

/// Summarizes the inter-hand distance image into one metric value.
/// `None` when the segmentation has no hand pixels.
pub fn aggregate_inter(inter: &[f32], seg: &[u8], alpha: f64) -> Option<InterTarget> {
    let med = |hand: Hand| {
        let label = label_of(hand);
        let mut vals: Vec<f64> = inter
            .iter()
            .zip(seg)
            .filter(|(_, &l)| l == label)
            .map(|(&v, _)| v as f64)
            .collect();
        median(&mut vals)
    };
    let (d_inter, both_visible) = match (med(Hand::Left), med(Hand::Right)) {
        (Some(l), Some(r)) => {
            let d = if l * r > 0.0 { 0.0 } else { 0.5 * (l - r) };
            (d, true)
        }
        (Some(l), None) => (l, false),
        (None, Some(r)) => (-r, false),
        (None, None) => return None,
    };
    Some(InterTarget {
        q_inter: alpha * d_inter,
        d_inter,
        both_visible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{BG, LEFT, RIGHT};

    #[test]
    fn symmetric_medians() {
        let seg = [LEFT, LEFT, RIGHT, RIGHT, BG];
        let inter = [0.4f32, 0.4, -0.4, -0.4, 7.0];
        let t = aggregate_inter(&inter, &seg, 1.0).unwrap();
        assert!((t.d_inter - 0.4).abs() < 1e-6);
        assert!(t.both_visible);
    }

    #[test]
    fn same_sign_is_zero() {
        let seg = [LEFT, RIGHT];
        let t = aggregate_inter(&[0.3, 0.2], &seg, 0.09).unwrap();
        assert_eq!(t.d_inter, 0.0);
        assert_eq!(t.q_inter, 0.0);
    }

    #[test]
    fn metric_scaling() {
        let seg = [LEFT, RIGHT];
        let t = aggregate_inter(&[0.4, -0.4], &seg, 0.09).unwrap();
        assert!((t.q_inter - 0.036).abs() < 1e-7);
    }

    #[test]
    fn single_hand_and_empty() {
        let t = aggregate_inter(&[0.25, 0.0], &[RIGHT, BG], 1.0).unwrap();
        assert_eq!(t.d_inter, -0.25);
        assert!(!t.both_visible);
        assert!(aggregate_inter(&[0.1, 0.2], &[BG, BG], 1.0).is_none());
    }

    #[test]
    fn median_ignores_outlier_minority() {
        // 51 clean pixels, 49 corrupted.
        let mut seg = vec![LEFT; 100];
        seg.extend([RIGHT; 3]);
        let mut inter: Vec<f32> = (0..100).map(|i| if i < 49 { 50.0 * (i as f32 - 20.0) } else { 0.3 }).collect();
        inter.extend([-0.3f32; 3]);
        let clean = aggregate_inter(&[0.3, -0.3], &[LEFT, RIGHT], 1.0).unwrap();
        let noisy = aggregate_inter(&inter, &seg, 1.0).unwrap();
        assert_eq!(clean, noisy);
    }
}
