//! Fast invariant checks behind the `selftest` command.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::energy::{gaussian_overlap, FitConfig};
use crate::hand_model::{build_model, CollisionGaussian, Hand, HandParams};
use crate::maps::{
    aggregate_inter, extract_keypoints, squared_edt, FrameMaps, LEFT, NUM_KEYPOINTS, RIGHT,
};
use crate::oracle::render_maps;
use crate::solver::error_recovery;

use super::metrics::{pck_curve, procrustes_align_no_rotation};
use super::scenes::interaction_pose;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn edt_vs_brute(rng: &mut ChaCha8Rng) -> Check {
    let (h, w) = (24, 32);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let feats: Vec<bool> = (0..h * w).map(|_| rng.random::<f64>() < 0.03).collect();
        let fast = squared_edt(&feats, h, w);
        let pts: Vec<usize> = (0..h * w).filter(|&i| feats[i]).collect();
        for i in 0..h * w {
            let brute = pts
                .iter()
                .map(|&p| {
                    let (dr, dc) = ((i / w) as f64 - (p / w) as f64, (i % w) as f64 - (p % w) as f64);
                    dr * dr + dc * dc
                })
                .fold(f64::INFINITY, f64::min);
            if brute.is_finite() {
                worst = worst.max((brute.sqrt() - fast[i].sqrt()).abs());
            }
        }
    }
    check("edt_exact", worst < 1e-9, format!("max deviation {worst:.2e}"))
}

fn gaussian_pdf(g: &CollisionGaussian, x: &Vector3<f64>) -> f64 {
    let s2 = g.std * g.std;
    (2.0 * std::f64::consts::PI * s2).powf(-1.5) * (-(x - g.mean).norm_squared() / (2.0 * s2)).exp()
}

/// Monte Carlo estimate of the product integral, sampling from `a`.
pub(crate) fn overlap_monte_carlo(a: &CollisionGaussian, b: &CollisionGaussian, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut acc = 0.0;
    for _ in 0..samples {
        let z = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
        acc += gaussian_pdf(b, &(a.mean + z * a.std));
    }
    acc / samples as f64
}

fn gaussian_overlap_mc(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let a = CollisionGaussian {
            mean: Vector3::zeros(),
            std: rng.random_range(0.005..0.02),
            hand: Hand::Left,
            bone: 0,
        };
        let b = CollisionGaussian {
            mean: Vector3::new(rng.random_range(0.0..0.02), 0.0, 0.0),
            std: rng.random_range(0.005..0.02),
            hand: Hand::Right,
            bone: 0,
        };
        let exact = gaussian_overlap(&a, &b).unwrap();
        let mc = overlap_monte_carlo(&a, &b, 200_000, rng);
        worst = worst.max((mc - exact).abs() / exact);
    }
    check("gaussian_overlap", worst < 0.03, format!("max relative MC deviation {worst:.4}"))
}

fn map_processing() -> Check {
    let mut m = FrameMaps::empty(8, 8);
    m.heat[(2 * 8 + 3) * NUM_KEYPOINTS] = 0.71;
    m.heat[(4 * 8 + 4) * NUM_KEYPOINTS + 1] = 0.7;
    let k = extract_keypoints(&m, 0.7);
    let keys_ok = k[0].is_some() && k[1].is_none();
    let mut m = FrameMaps::empty(1, 4);
    m.seg = vec![LEFT, LEFT, RIGHT, RIGHT];
    m.inter = vec![0.5, 0.5, 0.5, 0.5];
    let same_sign = aggregate_inter(&m.inter, &m.seg, 0.09).map(|t| t.q_inter) == Some(0.0);
    check(
        "map_processing",
        keys_ok && same_sign,
        format!("keypoint threshold {keys_ok}, same-sign inter {same_sign}"),
    )
}

fn metrics() -> Check {
    let gt = vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 2.0, 3.0), Vector3::new(-1.0, 0.5, 0.0)];
    let est: Vec<_> = gt.iter().map(|p| p * 2.0).collect();
    let s = procrustes_align_no_rotation(&est, &gt).map(|r| r.0).unwrap_or(f64::NAN);
    let pck = pck_curve(&[1.0, 3.0, 9.0], &[5.0]).map(|c| c[0].1).unwrap_or(f64::NAN);
    check(
        "metrics",
        (s - 0.5).abs() < 1e-12 && (pck - 2.0 / 3.0).abs() < 1e-12,
        format!("procrustes scale {s}, pck@5 {pck:.4}"),
    )
}

fn recovery() -> Check {
    let mut p = HandParams::default();
    p.articulation_mut(Hand::Left)[0] = 3.0;
    let once = error_recovery(&p, 2.3);
    let twice = error_recovery(&once, 2.3);
    let n = once.articulation(Hand::Left).iter().map(|a| a * a).sum::<f64>().sqrt();
    check("error_recovery", (n - 2.3).abs() < 1e-12 && once == twice, format!("norm after {n:.6}"))
}

fn closure() -> Check {
    let model = build_model(0);
    let cfg = FitConfig::default();
    let gt = interaction_pose(0.5, 0.0);
    let res = render_maps(&model, &gt, &cfg.intrinsics, 0.09, 0).and_then(|f| {
        let t = crate::maps::FittingTargets::prepare(&f.maps, &model, cfg.t_c, cfg.t_h, 0.09, true);
        Ok((t.num_matched(), t.num_keypoints(), t.inter.map(|i| i.q_inter), f.posed))
    });
    match res {
        Ok((matched, keys, q, posed)) => {
            let dz = posed.root(Hand::Left).z - posed.root(Hand::Right).z;
            let q_ok = q.is_some_and(|q| (q - dz).abs() < 1e-6);
            check(
                "oracle_closure",
                matched > 200 && keys == NUM_KEYPOINTS && q_ok,
                format!("{matched} matched vertices, {keys} keypoints, inter target {q:?} vs {dz:.6}"),
            )
        }
        Err(e) => check("oracle_closure", false, e.to_string()),
    }
}

/// Runs every check; takes a few seconds.
pub fn run_selftest() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    vec![
        edt_vs_brute(&mut rng),
        gaussian_overlap_mc(&mut rng),
        map_processing(),
        metrics(),
        recovery(),
        closure(),
    ]
}
