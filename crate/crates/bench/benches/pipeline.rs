use criterion::{criterion_group, criterion_main, Criterion};

use handfit::energy::{freeze_silhouette, model_overlap_pairs};
use handfit::hand_model::pose_hands;
use handfit::harness::interaction_pose;
use handfit::oracle::{render_maps, rasterize_hands, RenderedFrame};
use handfit::solver::{jacobian, optimize, param_steps};
use handfit::{build_model, EnergyContext, FitConfig, FittingTargets, HandModel, HandParams};

const ALPHA: f64 = 0.09;

fn scene() -> (HandModel, FitConfig, HandParams, RenderedFrame) {
    let model = build_model(0);
    let config = FitConfig {
        alpha: Some(ALPHA),
        ..FitConfig::default()
    };
    let gt = interaction_pose(0.5, 0.04);
    let frame = render_maps(&model, &gt, &config.intrinsics, ALPHA, 0).unwrap();
    (model, config, gt, frame)
}

fn pipeline(c: &mut Criterion) {
    let (model, config, gt, frame) = scene();
    let targets = FittingTargets::prepare(&frame.maps, &model, config.t_c, config.t_h, ALPHA, true);

    c.bench_function("rasterize", |b| b.iter(|| rasterize_hands(&model, &frame.posed, &config.intrinsics).unwrap()));
    c.bench_function("prepare_targets", |b| {
        b.iter(|| FittingTargets::prepare(&frame.maps, &model, config.t_c, config.t_h, ALPHA, true))
    });

    let pairs = model_overlap_pairs(&model);
    let posed = pose_hands(&model, &gt).unwrap();
    let silhouette = freeze_silhouette(&model, &posed, &targets, &config.intrinsics).unwrap();
    let ctx = EnergyContext {
        model: &model,
        config: &config,
        targets: &targets,
        prev: None,
        silhouette: &silhouette,
        overlap_pairs: &pairs,
        alpha: ALPHA,
    };
    let steps = param_steps(&config);
    let rows = ctx.residuals(&gt).unwrap().len();
    c.bench_function("residuals", |b| b.iter(|| ctx.residuals(&gt).unwrap()));
    c.bench_function("jacobian", |b| b.iter(|| jacobian(&ctx, &gt, rows, &steps).unwrap()));

    let mut start = gt.clone();
    start.articulation_mut(handfit::Hand::Left)[4] += 0.1;
    let short = FitConfig {
        iterations: 3,
        ..config.clone()
    };
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("three_iterations", |b| {
        b.iter(|| optimize(&model, &targets, &short, None, &start).unwrap())
    });
    group.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
