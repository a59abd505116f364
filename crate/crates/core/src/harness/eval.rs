use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::hand_model::{pose_hands, Hand, HandModel};
use crate::oracle::{annotation_points, GtPoint};
use crate::solver::FrameRecord;

use super::metrics::{pcf_curve, pck_curve, procrustes_align_no_rotation, threshold_grid};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub frames: usize,
    /// Mean 2D error over annotated interior joints, pixels.
    pub mean_2d: f64,
    /// Mean aligned 3D error over visible interior joints, millimeters.
    pub mean_3d_mm: f64,
    pub mean_3d_mm_per_hand: [f64; 2],
    pub pck_2d: Vec<(f64, f64)>,
    pub pcf_2d: Vec<(f64, f64)>,
    pub pck_3d: Vec<(f64, f64)>,
    pub pcf_3d: Vec<(f64, f64)>,
    /// Evaluated frame ids, parallel to the per-frame maxima.
    pub frame_ids: Vec<usize>,
    pub frame_max_2d: Vec<f64>,
    /// NaN where alignment failed.
    pub frame_max_3d: Vec<f64>,
    /// Interior joints excluded from the 3D error.
    pub occluded: usize,
    /// Ground-truth frames with no prediction.
    pub missing_frames: usize,
    /// Frames skipped for 3D because alignment was degenerate.
    pub unaligned_frames: usize,
}

#[derive(Default)]
struct Acc {
    errs: Vec<f64>,
    per_hand: [Vec<f64>; 2],
    frame_max: Vec<f64>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Scores predictions against ground truth annotations. Only interior
/// joints are scored; 3D positions are aligned per frame (scale and
/// translation, both hands jointly) before measuring.
pub fn evaluate(
    model: &HandModel,
    predictions: &[FrameRecord],
    gt: &[GtPoint],
    intrinsics: &CameraIntrinsics,
) -> Result<EvalReport> {
    let mut by_frame: BTreeMap<usize, Vec<&GtPoint>> = BTreeMap::new();
    for g in gt.iter().filter(|g| g.is_interior()) {
        by_frame.entry(g.frame).or_default().push(g);
    }
    if by_frame.is_empty() {
        return Err(Error::Empty("ground-truth annotations"));
    }
    let preds: BTreeMap<usize, &FrameRecord> = predictions.iter().map(|r| (r.frame, r)).collect();

    let mut e2 = Acc::default();
    let mut e3 = Acc::default();
    let (mut occluded, mut missing, mut unaligned) = (0, 0, 0);
    let mut frame_ids = Vec::new();
    for (frame, points) in &by_frame {
        let Some(rec) = preds.get(frame) else {
            missing += 1;
            continue;
        };
        let posed = pose_hands(model, &rec.params)?;
        let est = Hand::BOTH.map(|h| annotation_points(model, &posed, h));

        let mut fmax = 0.0f64;
        for g in points {
            let p = est[g.hand.index()][g.id];
            let px = intrinsics.project(&p).map(|q| (q - g.pixel).norm()).unwrap_or(f64::INFINITY);
            e2.errs.push(px);
            e2.per_hand[g.hand.index()].push(px);
            fmax = fmax.max(px);
        }
        e2.frame_max.push(fmax);
        frame_ids.push(*frame);

        let visible: Vec<&&GtPoint> = points.iter().filter(|g| !g.occluded).collect();
        occluded += points.len() - visible.len();
        let est3: Vec<Vector3<f64>> = visible.iter().map(|g| est[g.hand.index()][g.id]).collect();
        let gt3: Vec<Vector3<f64>> = visible.iter().map(|g| g.position).collect();
        match procrustes_align_no_rotation(&est3, &gt3) {
            Ok((s, t)) => {
                let mut fmax = 0.0f64;
                for ((e, g), gp) in est3.iter().zip(&gt3).zip(&visible) {
                    let mm = 1000.0 * (e * s + t - g).norm();
                    e3.errs.push(mm);
                    e3.per_hand[gp.hand.index()].push(mm);
                    fmax = fmax.max(mm);
                }
                e3.frame_max.push(fmax);
            }
            Err(_) => {
                unaligned += 1;
                e3.frame_max.push(f64::NAN);
            }
        }
    }
    if e2.errs.is_empty() {
        return Err(Error::Empty("frames with both predictions and annotations"));
    }
    let grid = threshold_grid(50.0, 1.0);
    let (pck_3d, pcf_3d) = if e3.errs.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        (pck_curve(&e3.errs, &grid)?, pcf_curve(&e3.frame_max, &grid)?)
    };
    Ok(EvalReport {
        frames: by_frame.len(),
        mean_2d: mean(&e2.errs),
        mean_3d_mm: mean(&e3.errs),
        mean_3d_mm_per_hand: [mean(&e3.per_hand[0]), mean(&e3.per_hand[1])],
        pck_2d: pck_curve(&e2.errs, &grid)?,
        pcf_2d: pcf_curve(&e2.frame_max, &grid)?,
        pck_3d,
        pcf_3d,
        frame_ids,
        frame_max_2d: e2.frame_max,
        frame_max_3d: e3.frame_max,
        occluded,
        missing_frames: missing,
        unaligned_frames: unaligned,
    })
}

impl EvalReport {
    /// CSV tables: summary, then 2D and 3D curves.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        s.push_str(&format!("frames,{}\n", self.frames));
        s.push_str(&format!("mean_2d_px,{:.6}\n", self.mean_2d));
        s.push_str(&format!("mean_3d_mm,{:.6}\n", self.mean_3d_mm));
        s.push_str(&format!("mean_3d_mm_left,{:.6}\n", self.mean_3d_mm_per_hand[0]));
        s.push_str(&format!("mean_3d_mm_right,{:.6}\n", self.mean_3d_mm_per_hand[1]));
        s.push_str(&format!("occluded_joints,{}\n", self.occluded));
        s.push_str(&format!("missing_frames,{}\n", self.missing_frames));
        s.push_str(&format!("unaligned_frames,{}\n", self.unaligned_frames));
        s.push_str("\nthreshold_px,pck_2d,pcf_2d\n");
        for (a, b) in self.pck_2d.iter().zip(&self.pcf_2d) {
            s.push_str(&format!("{},{:.6},{:.6}\n", a.0, a.1, b.1));
        }
        s.push_str("\nthreshold_mm,pck_3d,pcf_3d\n");
        for (a, b) in self.pck_3d.iter().zip(&self.pcf_3d) {
            s.push_str(&format!("{},{:.6},{:.6}\n", a.0, a.1, b.1));
        }
        s.push_str("\nframe,max_2d_px,max_3d_mm\n");
        for ((f, m), m3) in self.frame_ids.iter().zip(&self.frame_max_2d).zip(&self.frame_max_3d) {
            s.push_str(&format!("{f},{m:.6},{m3:.6}\n"));
        }
        s
    }
}
