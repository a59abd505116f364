use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Least-squares scale and translation (no rotation) taking `est` onto `gt`.
pub fn procrustes_align_no_rotation(est: &[Vector3<f64>], gt: &[Vector3<f64>]) -> Result<(f64, Vector3<f64>)> {
    if est.len() != gt.len() {
        return Err(Error::DimMismatch {
            expected: format!("{} points", gt.len()),
            found: est.len().to_string(),
        });
    }
    if est.len() < 2 {
        return Err(Error::Degenerate(format!("alignment needs >= 2 points, got {}", est.len())));
    }
    let n = est.len() as f64;
    let em = est.iter().sum::<Vector3<f64>>() / n;
    let gm = gt.iter().sum::<Vector3<f64>>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (e, g) in est.iter().zip(gt) {
        num += (e - em).dot(&(g - gm));
        den += (e - em).norm_squared();
    }
    if den <= f64::EPSILON * n {
        return Err(Error::Degenerate("estimated points coincide; scale undefined".into()));
    }
    let s = num / den;
    Ok((s, gm - em * s))
}

/// Sum of squared residuals after applying `(s, t)`.
pub fn alignment_residual(est: &[Vector3<f64>], gt: &[Vector3<f64>], s: f64, t: &Vector3<f64>) -> f64 {
    est.iter().zip(gt).map(|(e, g)| (e * s + t - g).norm_squared()).sum()
}

/// Thresholds `0, step, ..., max`.
pub fn threshold_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).round() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// Fraction of errors strictly below each threshold.
pub fn pck_curve(errors: &[f64], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if errors.is_empty() {
        return Err(Error::Empty("error list"));
    }
    let n = errors.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| (t, errors.iter().filter(|&&e| e < t).count() as f64 / n))
        .collect())
}

/// Fraction of frames whose largest error is strictly below each threshold.
pub fn pcf_curve(frame_max: &[f64], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if frame_max.is_empty() {
        return Err(Error::Empty("frame list"));
    }
    pck_curve(frame_max, thresholds)
}
