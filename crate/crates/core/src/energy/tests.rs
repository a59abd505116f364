use nalgebra::Vector3;
use proptest::prelude::*;

use super::*;
use crate::camera::{CameraIntrinsics, Pixel};
use crate::hand_model::{build_model, palm_length, CollisionGaussian, Hand, HandModel, HandParams, PosedHands, NUM_JOINTS};
use crate::harness::interaction_pose;
use crate::maps::{DistanceField, FittingTargets, InterTarget, NUM_KEYPOINTS};
use crate::oracle::render_maps;

fn two_point_pose(left: Vector3<f64>, right: Vector3<f64>) -> PosedHands {
    PosedHands {
        vertices: vec![left, right],
        joints: [[left; NUM_JOINTS], [right; NUM_JOINTS]],
        per_hand: 1,
    }
}

fn gaussian(mean: Vector3<f64>, std: f64) -> CollisionGaussian {
    CollisionGaussian {
        mean,
        std,
        hand: Hand::Left,
        bone: 1,
    }
}

struct Scene {
    model: HandModel,
    config: FitConfig,
    gt: HandParams,
    targets: FittingTargets,
    silhouette: Vec<SilhouetteVertex>,
    pairs: Vec<(usize, usize)>,
}

impl Scene {
    fn new(overlap: f64, occlusion_aware: bool) -> Scene {
        let model = build_model(0);
        let config = FitConfig {
            alpha: Some(0.09),
            occlusion_aware,
            ..FitConfig::default()
        };
        let gt = interaction_pose(0.5, overlap);
        let frame = render_maps(&model, &gt, &config.intrinsics, 0.09, 0).unwrap();
        let targets = FittingTargets::prepare(&frame.maps, &model, config.t_c, config.t_h, 0.09, occlusion_aware);
        let silhouette = freeze_silhouette(&model, &frame.posed, &targets, &config.intrinsics).unwrap();
        let pairs = model_overlap_pairs(&model);
        Scene {
            model,
            config,
            gt,
            targets,
            silhouette,
            pairs,
        }
    }

    fn ctx(&self) -> EnergyContext<'_> {
        EnergyContext {
            model: &self.model,
            config: &self.config,
            targets: &self.targets,
            prev: Some(&self.gt),
            silhouette: &self.silhouette,
            overlap_pairs: &self.pairs,
            alpha: 0.09,
        }
    }
}

#[test]
fn dense_three_four_five() {
    let k = CameraIntrinsics::default();
    let x = k.backproject(100.0, 50.0, 0.5);
    let posed = two_point_pose(x, x);
    let psi = [Some(Pixel::new(97.0, 46.0)), None];
    let mut out = Vec::new();
    let mut degenerate = false;
    phi_dense(&mut out, &posed, &psi, &k, 0.003, &mut degenerate);
    let e: f64 = out.iter().map(|r| r * r).sum();
    assert_eq!(out.len(), 2);
    assert!((e - 0.003 * 25.0).abs() < 1e-12);
    assert!(!degenerate);

    out.clear();
    phi_dense(&mut out, &posed, &[None, None], &k, 0.003, &mut degenerate);
    assert!(out.is_empty());
}

#[test]
fn dense_behind_camera_flags() {
    let k = CameraIntrinsics::default();
    let posed = two_point_pose(Vector3::new(0.0, 0.0, -0.1), Vector3::new(0.0, 0.0, 0.5));
    let mut out = Vec::new();
    let mut degenerate = false;
    phi_dense(&mut out, &posed, &[Some(Pixel::new(1.0, 1.0)), None], &k, 1.0, &mut degenerate);
    assert!(degenerate);
    assert_eq!(out, vec![0.0, 0.0]);
}

#[test]
fn keypoint_offset_by_two_rows() {
    let model = build_model(0);
    let k = CameraIntrinsics::default();
    let mut p = HandParams::default();
    p.set_global(Hand::Left, Vector3::zeros(), Vector3::new(-0.1, 0.0, 0.5));
    p.set_global(Hand::Right, Vector3::zeros(), Vector3::new(0.1, 0.0, 0.5));
    let posed = pose_hands(&model, &p).unwrap();
    let mut keys = [None; NUM_KEYPOINTS];
    for hand in Hand::BOTH {
        for (i, x) in posed.keypoints(&model, hand).iter().enumerate() {
            keys[hand.index() * 6 + i] = Some(k.project(x).unwrap());
        }
    }
    let energy = |keys: &[Option<Pixel>; NUM_KEYPOINTS]| {
        let mut out = Vec::new();
        phi_key(&mut out, &model, &posed, keys, &k, 0.005, &mut false);
        out.iter().map(|r| r * r).sum::<f64>()
    };
    assert!(energy(&keys) < 1e-20);
    keys[8] = keys[8].map(|q| q + Pixel::new(0.0, 2.0));
    assert!((energy(&keys) - 0.005 * 4.0).abs() < 1e-12);
    let mut out = Vec::new();
    phi_key(&mut out, &model, &posed, &[None; NUM_KEYPOINTS], &k, 0.005, &mut false);
    assert!(out.is_empty());
}

#[test]
fn intra_depth_offset() {
    let root = Vector3::new(0.0, 0.0, 0.5);
    let mut posed = two_point_pose(root, root);
    posed.vertices[0].z = 0.55;
    let mut out = Vec::new();
    phi_intra(&mut out, &posed, &[Some(0.02), Some(0.0)], 0.3);
    assert!((out[0] * out[0] - 0.3 * 9e-4).abs() < 1e-12);
    assert_eq!(out[1], 0.0);
}

#[test]
fn inter_depth_difference() {
    let posed = two_point_pose(Vector3::new(0.0, 0.0, 0.55), Vector3::new(0.0, 0.0, 0.5));
    let target = |q| InterTarget {
        q_inter: q,
        d_inter: q,
        both_visible: true,
    };
    let mut out = Vec::new();
    phi_inter(&mut out, &posed, Some(&target(0.02)), 0.1);
    assert!((out[0] * out[0] - 0.1 * 9e-4).abs() < 1e-12);
    out.clear();
    phi_inter(&mut out, &posed, Some(&target(0.05)), 0.1);
    assert!(out[0].abs() < 1e-15);
    out.clear();
    let single = InterTarget {
        both_visible: false,
        ..target(0.05)
    };
    phi_inter(&mut out, &posed, Some(&single), 0.1);
    phi_inter(&mut out, &posed, None, 0.1);
    assert!(out.is_empty());
}

fn weights() -> PriorWeights {
    PriorWeights {
        lambda_beta: 0.025,
        lambda_theta: 0.0375,
        lambda_tau: 0.3,
        lambda_sym: 0.5,
        t_theta: 0.1,
    }
}

#[test]
fn thresholded_pose_rows() {
    let mut p = HandParams::default();
    p.articulation_mut(Hand::Left)[4] = 0.05;
    let mut out = Vec::new();
    omega_0(&mut out, &p, None, &weights());
    assert_eq!(out.len(), 20 + 90 + 20 + 102 + 10);
    assert!(out.iter().all(|v| *v == 0.0), "below the threshold nothing is penalized");

    p.articulation_mut(Hand::Right)[7] = 0.3;
    out.clear();
    omega_0(&mut out, &p, None, &weights());
    let right = &out[20 + 45..20 + 90];
    assert_eq!(right[7], 0.0375f64.sqrt() * 0.3);
    assert!(out[20..20 + 45].iter().all(|v| *v == 0.0));
}

#[test]
fn temporal_and_symmetry_rows() {
    let mut p = HandParams::default();
    let mut prev = HandParams::default();
    p.beta[3] = 0.4;
    p.beta[13] = 0.4;
    prev.theta[60] = 0.2;
    let mut out = Vec::new();
    omega_0(&mut out, &p, Some(&prev), &weights());
    let sym = &out[20 + 90 + 20 + 102..];
    assert!(sym.iter().all(|v| *v == 0.0), "equal shapes give zero symmetry rows");
    let s = 0.3f64.sqrt();
    assert_eq!(out[20 + 90 + 3], s * -0.4);
    assert_eq!(out[20 + 90 + 20 + 60], s * 0.2);

    out.clear();
    omega_0(&mut out, &HandParams::default(), None, &weights());
    assert!(out.iter().all(|v| *v == 0.0));
}

#[test]
fn overlap_closed_form() {
    let a = gaussian(Vector3::zeros(), 0.01);
    let v = gaussian_overlap(&a, &a).unwrap();
    let expected = (4.0 * std::f64::consts::PI * 1e-4).powf(-1.5);
    assert!((v - expected).abs() / expected < 1e-12);

    let far = gaussian(Vector3::new(1.0, 0.0, 0.0), 0.01);
    assert!(gaussian_overlap(&a, &far).unwrap() < 1e-300);
    assert!(gaussian_overlap(&a, &gaussian(Vector3::zeros(), 0.0)).is_err());
    assert!(gaussian_overlap(&gaussian(Vector3::zeros(), -1.0), &a).is_err());
}

#[test]
fn overlap_pairs_skip_adjacent_bones() {
    let mut gs = vec![gaussian(Vector3::zeros(), 0.01); 3];
    gs[0].bone = 1;
    gs[1].bone = 2;
    gs[2].bone = 2;
    gs[2].hand = Hand::Right;
    assert_eq!(overlap_pairs(&gs), vec![(0, 2), (1, 2)]);
}

#[test]
fn scale_rows() {
    let model = build_model(0);
    let p = HandParams::default();
    let alpha = palm_length(&model, p.beta_hand(Hand::Left));
    let mut out = Vec::new();
    omega_scale(&mut out, &model, &p, alpha, 1e3);
    assert!(out.iter().all(|v| v.abs() < 1e-15));
    out.clear();
    omega_scale(&mut out, &model, &p, alpha + 1e-3, 1e3);
    assert!((out[0] * out[0] - 1e3 * 1e-6).abs() < 1e-12);
}

#[test]
fn silhouette_samples_distance_and_respects_zeroing() {
    let k = CameraIntrinsics::default();
    let mut values = vec![0.0; k.width * k.height];
    values[120 * k.width + 100] = 5.0;
    let field = DistanceField::new(k.height, k.width, values);
    let on = k.backproject(100.0, 120.0, 0.5);
    let off = k.backproject(30.0, 30.0, 0.5);
    let posed = two_point_pose(on, off);
    let boundary = [
        SilhouetteVertex {
            vertex: 0,
            hand: Hand::Left,
            weight: 1.0,
        },
        SilhouetteVertex {
            vertex: 1,
            hand: Hand::Right,
            weight: 1.0,
        },
    ];
    let dt = [Some(field.clone()), Some(field)];
    let mut out = Vec::new();
    phi_sil(&mut out, &posed, &boundary, &dt, &k, 0.0045, &mut false);
    assert!((out[0] - 0.0045f64.sqrt() * 5.0).abs() < 1e-9);
    assert_eq!(out[1], 0.0);
    out.clear();
    phi_sil(&mut out, &posed, &boundary, &[None, None], &k, 0.0045, &mut false);
    assert_eq!(out, vec![0.0, 0.0]);
}

#[test]
fn energy_is_sum_of_blocks() {
    let s = Scene::new(0.0, true);
    let ctx = s.ctx();
    let mut p = s.gt.clone();
    p.articulation_mut(Hand::Left)[10] += 0.1;
    p.beta[2] = 0.3;
    let r = ctx.residuals(&p).unwrap();
    let by_block: f64 = Block::ALL.iter().map(|&b| r.block_energy(b)).sum();
    assert!((r.energy() - by_block).abs() <= 1e-9 * r.energy().max(1.0));
    assert_eq!(r.offsets[12], r.len());
    assert_eq!(r.block(Block::ThresholdTheta).len(), 90);
    assert_eq!(r.block(Block::Scale).len(), 2);
    assert!(r.energy() >= 0.0);
}

#[test]
fn doubling_dense_weight_doubles_dense_energy() {
    let mut s = Scene::new(0.0, true);
    let mut p = s.gt.clone();
    p.theta[p.theta.len() - 46] += 0.005;
    let before = s.ctx().residuals(&p).unwrap().block_energy(Block::Dense);
    s.config.lambda_dense *= 2.0;
    let after = s.ctx().residuals(&p).unwrap().block_energy(Block::Dense);
    assert!((after - 2.0 * before).abs() <= 1e-12 * after);
}

#[test]
fn inter_ignores_finger_articulation() {
    let s = Scene::new(0.0, true);
    let ctx = s.ctx();
    let mut p = s.gt.clone();
    let base = ctx.residuals(&p).unwrap().block(Block::Inter).to_vec();
    for a in p.articulation_mut(Hand::Right).iter_mut().skip(3) {
        *a += 0.2;
    }
    assert_eq!(ctx.residuals(&p).unwrap().block(Block::Inter), base.as_slice());
}

#[test]
fn vertices_over_the_other_hand_contribute_nothing() {
    let count = |aware: bool| {
        let s = Scene::new(0.04, aware);
        let k = &s.config.intrinsics;
        let r = s.ctx().residuals(&s.gt).unwrap();
        let posed = pose_hands(&s.model, &s.gt).unwrap();
        let mut over = 0;
        let mut nonzero = 0;
        for (b, row) in s.silhouette.iter().zip(r.block(Block::Sil)) {
            let px = k.clamped_pixel(&k.project(&posed.vertices[b.vertex]).unwrap());
            if s.targets.shows_other_hand(b.hand, px) {
                over += 1;
                nonzero += (*row != 0.0) as usize;
            }
        }
        (over, nonzero)
    };
    let (over, nonzero) = count(true);
    assert!(over > 0, "scene should place boundary vertices over the other hand");
    assert_eq!(nonzero, 0);
    let (over, nonzero) = count(false);
    assert!(over > 0 && nonzero > 0, "without zeroing those vertices are pulled");
}

#[test]
fn boundary_vertices_hug_the_mask_edge() {
    let model = build_model(0);
    let k = CameraIntrinsics::default();
    let mut p = HandParams::default();
    p.set_global(Hand::Left, Vector3::zeros(), Vector3::new(-0.1, 0.0, 0.4));
    p.set_global(Hand::Right, Vector3::zeros(), Vector3::new(0.1, 0.0, 0.4));
    let posed = pose_hands(&model, &p).unwrap();
    let mask = crate::oracle::rasterize_hands(&model, &posed, &k).unwrap();
    let edge: Vec<(f64, f64)> = (0..k.height * k.width)
        .filter(|&i| {
            mask.label[i] != crate::maps::BG && {
                let (r, c) = (i / k.width, i % k.width);
                [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)].iter().any(|(dr, dc)| {
                    let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                    rr < 0
                        || cc < 0
                        || rr >= k.height as i64
                        || cc >= k.width as i64
                        || mask.label[rr as usize * k.width + cc as usize] == crate::maps::BG
                })
            }
        })
        .map(|i| ((i % k.width) as f64, (i / k.width) as f64))
        .collect();
    let boundary = boundary_vertices_in(&mask, &posed, &k);
    assert!(!boundary.is_empty());
    for v in &boundary {
        let q = k.project(&posed.vertices[*v]).unwrap();
        let d = edge.iter().map(|(x, y)| ((q.x - x).powi(2) + (q.y - y).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
        assert!(d <= 2.5, "vertex {v} is {d:.2} px from the mask edge");
    }
    // The palm center is never on the boundary.
    let center = k.project(&posed.root(Hand::Right)).unwrap();
    let interior = boundary
        .iter()
        .filter(|v| (k.project(&posed.vertices[**v]).unwrap() - center).norm() < 3.0)
        .count();
    assert!(interior < boundary.len());
}

#[test]
fn temporal_rows_vanish_when_disabled() {
    let mut s = Scene::new(0.0, true);
    let mut p = s.gt.clone();
    p.theta[5] += 0.01;
    assert!(s.ctx().residuals(&p).unwrap().block_energy(Block::TemporalTheta) > 0.0);
    s.config.temporal = false;
    assert_eq!(s.ctx().residuals(&p).unwrap().block_energy(Block::TemporalTheta), 0.0);
}

#[test]
fn normal_weight_extremes() {
    let k = CameraIntrinsics::default();
    let flat = DistanceField::new(4, 4, vec![1.0; 16]);
    let x = Vector3::new(0.0, 0.0, 0.5);
    assert_eq!(normal_weight(&k, &x, &Vector3::new(1.0, 0.0, 0.0), &flat), 1.0);
    let ramp = DistanceField::new(4, 4, (0..16).map(|i| (i % 4) as f64).collect());
    assert_eq!(normal_weight(&k, &Vector3::new(0.0, 0.0, 0.5), &Vector3::new(0.0, 0.0, 1.0), &ramp), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn overlap_is_symmetric(
        m in proptest::array::uniform6(-0.05f64..0.05),
        sa in 0.001f64..0.03,
        sb in 0.001f64..0.03,
    ) {
        let a = gaussian(Vector3::new(m[0], m[1], m[2]), sa);
        let b = gaussian(Vector3::new(m[3], m[4], m[5]), sb);
        prop_assert_eq!(gaussian_overlap(&a, &b).unwrap(), gaussian_overlap(&b, &a).unwrap());
        prop_assert!(gaussian_overlap(&a, &b).unwrap() >= 0.0);
    }

    #[test]
    fn prior_energy_matches_formula(betas in proptest::array::uniform20(-1.0f64..1.0), a in -0.3f64..0.3) {
        let mut p = HandParams::default();
        p.beta = betas;
        p.articulation_mut(Hand::Left)[0] = a;
        let w = weights();
        let mut out = Vec::new();
        omega_0(&mut out, &p, None, &w);
        let e: f64 = out.iter().map(|r| r * r).sum();
        let sym: f64 = (0..10).map(|i| (betas[i] - betas[10 + i]).powi(2)).sum();
        let pose = if a.abs() > w.t_theta { a * a } else { 0.0 };
        let expected = w.lambda_beta * betas.iter().map(|b| b * b).sum::<f64>() + w.lambda_theta * pose + w.lambda_sym * sym;
        prop_assert!((e - expected).abs() <= 1e-9);
    }
}
