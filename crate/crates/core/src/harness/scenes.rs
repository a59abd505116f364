//! Built-in keyframe scripts for demos, the self-test and the acceptance
//! suite.

use nalgebra::Vector3;

use crate::camera::CameraIntrinsics;
use crate::hand_model::{Hand, HandParams};
use crate::oracle::Script;

/// Finger flexion pattern at phase `t` in [0, 1]. Articulation slot `3(j-1)`
/// holds joint `j`; finger `f` owns joints `1 + 3f ..= 3 + 3f`.
fn articulate(p: &mut HandParams, hand: Hand, t: f64, curl: f64) {
    let a = p.articulation_mut(hand);
    for f in 1..5 {
        let mcp = 3 * f;
        a[3 * mcp] = 0.2 + curl * t * (f as f64 / 4.0);
        a[3 * (mcp + 1)] = 0.15 + 0.2 * t;
        a[3 * (mcp + 2)] = 0.1;
        // Slight spread about the palm normal.
        a[3 * mcp + 2] = 0.04 * (f as f64 - 2.5);
    }
    a[1] = 0.2 * t;
    a[3] = 0.1;
    a[6] = 0.1 * t;
}

/// Two hands facing the camera about half a meter away, the right hand
/// in front, partly overlapping the left in the image. `overlap` moves the
/// hands toward each other (meters).
pub fn interaction_pose(t: f64, overlap: f64) -> HandParams {
    let mut p = HandParams::default();
    p.set_global(
        Hand::Right,
        Vector3::new(0.1 + 0.1 * t, 0.15 * t, 0.05),
        Vector3::new(0.035 - overlap - 0.01 * t, 0.075 + 0.005 * t, 0.44 + 0.01 * t),
    );
    p.set_global(
        Hand::Left,
        Vector3::new(-0.05, -0.1 * t, -0.05 + 0.05 * t),
        Vector3::new(-0.03 + overlap + 0.01 * t, 0.08, 0.505 - 0.005 * t),
    );
    articulate(&mut p, Hand::Right, t, 0.3);
    articulate(&mut p, Hand::Left, 1.0 - t, 0.25);
    for hand in Hand::BOTH {
        // Shape variation within typical range.
        let b = p.beta_hand_mut(hand);
        b[1] = 0.3;
        b[4] = -0.2;
    }
    p
}

/// `frames`-long sequence through three keyframes.
pub fn interaction_script(frames: usize, overlap: f64) -> Script {
    assert!(frames >= 3, "need at least three frames");
    let last = frames - 1;
    let mid = last / 2;
    Script {
        intrinsics: CameraIntrinsics::default(),
        alpha: None,
        keyframes: vec![
            (0, interaction_pose(0.0, overlap)),
            (mid, interaction_pose(0.5, overlap)),
            (last, interaction_pose(1.0, overlap)),
        ],
    }
}
