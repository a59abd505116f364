use nalgebra::Vector3;

use super::*;
use crate::camera::CameraIntrinsics;
use crate::hand_model::{build_model, Hand, HandModel, HandParams};
use crate::harness::interaction_pose;
use crate::maps::{aggregate_inter, label_of, FittingTargets, FrameMaps, KEYPOINTS_PER_HAND, NUM_KEYPOINTS};

const ALPHA: f64 = 0.09;

fn frame(model: &HandModel, params: &HandParams) -> RenderedFrame {
    render_maps(model, params, &CameraIntrinsics::default(), ALPHA, 0).unwrap()
}

fn right_only() -> HandParams {
    let mut p = interaction_pose(0.5, 0.0);
    p.set_global(Hand::Left, Vector3::zeros(), Vector3::new(0.0, 0.0, -1.0));
    p
}

#[test]
fn intra_depth_reconstructs_the_depth_buffer() {
    let model = build_model(0);
    let f = frame(&model, &interaction_pose(0.5, 0.04));
    let mut checked = 0;
    for (i, &l) in f.maps.seg.iter().enumerate() {
        let Some(hand) = crate::maps::hand_of_label(l) else { continue };
        let z = f.maps.intra[i] as f64 * ALPHA + f.posed.root(hand).z;
        assert!((z - f.raster.depth[i]).abs() < 1e-6);
        checked += 1;
    }
    assert!(checked > 1000);
}

#[test]
fn inter_target_recovers_root_offset() {
    let model = build_model(0);
    let p = interaction_pose(0.5, 0.04);
    let f = frame(&model, &p);
    let t = aggregate_inter(&f.maps.inter, &f.maps.seg, ALPHA).unwrap();
    let dz = f.posed.root(Hand::Left).z - f.posed.root(Hand::Right).z;
    assert!(t.both_visible);
    assert!((t.q_inter - dz).abs() < 1e-7, "{} vs {dz}", t.q_inter);
}

#[test]
fn single_visible_hand_has_zero_inter() {
    let model = build_model(0);
    let f = render_maps(&model, &right_only(), &CameraIntrinsics::default(), ALPHA, 0);
    // The left hand sits behind the camera, which the rasterizer rejects.
    assert!(f.is_err());

    let mut p = interaction_pose(0.5, 0.0);
    p.set_global(Hand::Left, Vector3::zeros(), Vector3::new(5.0, 0.0, 0.5));
    let f = frame(&model, &p);
    assert!(!f.maps.has_hand(Hand::Left) && f.maps.has_hand(Hand::Right));
    let right = label_of(Hand::Right);
    assert!(f.maps.seg.iter().zip(&f.maps.inter).filter(|(l, _)| **l == right).all(|(_, v)| *v == 0.0));
    let t = aggregate_inter(&f.maps.inter, &f.maps.seg, ALPHA).unwrap();
    assert!(!t.both_visible);
}

#[test]
fn heatmaps_peak_at_one_on_the_keypoint_pixel() {
    let model = build_model(0);
    let f = frame(&model, &interaction_pose(0.3, 0.0));
    let k = CameraIntrinsics::default();
    for g in f.gt.iter().filter(|g| !g.is_interior()) {
        let j = g.hand.index() * KEYPOINTS_PER_HAND + g.id - 14;
        let ch = f.maps.heat_channel(j);
        let (r, c) = k.pixel_of(&g.pixel).unwrap();
        assert_eq!(ch[r * k.width + c], 1.0);
        assert!(ch.iter().all(|v| *v <= 1.0));
    }
    let keys = crate::maps::extract_keypoints(&f.maps, 0.7);
    assert_eq!(keys.iter().filter(|k| k.is_some()).count(), NUM_KEYPOINTS);
}

#[test]
fn heatmap_width_follows_crop_size() {
    let model = build_model(0);
    let near = frame(&model, &interaction_pose(0.5, 0.0));
    let mut p = interaction_pose(0.5, 0.0);
    for hand in Hand::BOTH {
        let t = p.translation(hand);
        p.set_global(hand, p.global_rotation(hand), t * 1.5);
    }
    let far = frame(&model, &p);
    for hand in Hand::BOTH {
        let ratio = near.heat_sigma[hand.index()] / far.heat_sigma[hand.index()];
        assert!((ratio - 1.5).abs() < 0.1, "{ratio}");
    }
}

#[test]
fn occlusion_flags_have_a_nearer_surface() {
    let model = build_model(0);
    let k = CameraIntrinsics::default();
    let mut flagged = 0;
    for t in [0.0, 0.5, 1.0] {
        let f = frame(&model, &interaction_pose(t, 0.04));
        for g in f.gt.iter().filter(|g| g.occluded) {
            let (r, c) = k.pixel_of(&g.pixel).unwrap();
            assert!(f.raster.depth[r * k.width + c] < g.position.z);
            flagged += 1;
        }
        for g in f.gt.iter().filter(|g| !g.occluded) {
            if let Some((r, c)) = k.pixel_of(&g.pixel) {
                let i = r * k.width + c;
                assert!(f.raster.depth[i] >= g.position.z - OCCLUSION_SLACK);
            }
        }
    }
    assert!(flagged > 0);
}

#[test]
fn matches_agree_with_visibility() {
    let model = build_model(0);
    let f = frame(&model, &interaction_pose(0.7, 0.02));
    let k = CameraIntrinsics::default();
    let t = FittingTargets::prepare(&f.maps, &model, 0.04, 0.7, ALPHA, true);
    let (mut visible, mut matched) = (0, 0);
    for (v, x) in f.posed.vertices.iter().enumerate() {
        let Some((r, c)) = k.pixel_of(&k.project(x).unwrap()) else { continue };
        let i = r * k.width + c;
        if f.maps.seg[i] == label_of(f.posed.hand_of(v)) && (f.raster.depth[i] - x.z).abs() < 1e-3 {
            visible += 1;
            matched += t.psi[v].is_some() as usize;
        }
    }
    assert!(matched as f64 >= 0.95 * visible as f64, "{matched} of {visible}");
}

#[test]
fn zero_noise_is_bitwise_identity() {
    let model = build_model(0);
    let clean = frame(&model, &interaction_pose(0.2, 0.0));
    let mut noisy = clean.clone();
    apply_noise(&mut noisy, &NoiseSpec { seed: 4, ..NoiseSpec::default() }, 0);
    assert_eq!(noisy.maps, clean.maps);

    let spec = NoiseSpec::parse("match=0.01,flip=0.02,heat_jitter=2,depth=0.01,seed=4").unwrap();
    apply_noise(&mut noisy, &spec, 0);
    assert_ne!(noisy.maps.seg, clean.maps.seg);
    assert_ne!(noisy.maps.matching, clean.maps.matching);
    assert_ne!(noisy.maps.intra, clean.maps.intra);
    assert_ne!(noisy.maps.heat, clean.maps.heat);
    let mut again = clean.clone();
    apply_noise(&mut again, &spec, 0);
    assert_eq!(again.maps, noisy.maps, "noise is seeded");
}

#[test]
fn flip_fraction_is_respected() {
    let model = build_model(0);
    let clean = frame(&model, &interaction_pose(0.2, 0.0));
    let mut noisy = clean.clone();
    apply_noise(&mut noisy, &NoiseSpec::parse("flip=0.02,seed=1").unwrap(), 3);
    let changed = noisy.maps.seg.iter().zip(&clean.maps.seg).filter(|(a, b)| a != b).count();
    let frac = changed as f64 / clean.maps.seg.len() as f64;
    assert!((frac - 0.02).abs() < 0.003, "{frac}");
}

#[test]
fn sequence_on_disk() {
    let model = build_model(0);
    let dir = tempfile::tempdir().unwrap();
    let a = interaction_pose(0.0, 0.0);
    let b = interaction_pose(1.0, 0.0);
    let script = Script {
        intrinsics: CameraIntrinsics::default(),
        alpha: None,
        keyframes: vec![(0, a), (9, b)],
    };
    let n = generate_sequence(&model, &script, &NoiseSpec::default(), ALPHA, dir.path()).unwrap();
    assert_eq!(n, 10);
    let frames = list_frames(dir.path()).unwrap();
    assert_eq!(frames.len(), 10);
    let gt = load_gt(&dir.path().join(GT_FILE)).unwrap();
    assert_eq!(gt.len(), 10 * 2 * GT_POINTS_PER_HAND);
    let first = FrameMaps::load_bundle(&frames[0]).unwrap();
    assert_eq!(first, frame(&model, &script.frames()[0]).maps);

    std::fs::remove_dir_all(frame_dir(dir.path(), 4)).unwrap();
    let err = list_frames(dir.path()).unwrap_err().to_string();
    assert!(err.contains("missing frame 4"), "{err}");
}
