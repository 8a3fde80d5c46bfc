use hybridzo::estimator::{estimate_x_gradient, smoothed_gradient_reference, ZoConfig};
use hybridzo::numeric::MeanVar;
use hybridzo::objectives::{BlockQuadratic, CoshObjective, FiniteSumObjective};
use hybridzo::optimizer::{write_trace_csv, BlockModes, HybridSgd, LearningRates, OptimizerConfig, UpdateMode};
use hybridzo::planner::{estimate_constants, plan_rates, PlanInputs};
use hybridzo::probe::{trajectory_scan, write_probe_csv, ProbeConfig, ProbeTarget};
use hybridzo::{BlockLayout, HybridPoint, RngStream};

#[test]
fn forward_estimator_agrees_with_antithetic_reference() {
    let layout = BlockLayout::new(3, 1).unwrap();
    let mut rng = RngStream::new(1, 200);
    let obj = CoshObjective::random(layout, 2, 0.3, &mut rng).unwrap();
    let w = HybridPoint::new(layout, vec![0.4, -0.2, 0.1, 0.5]).unwrap();
    let mu = 0.05;
    let reference = smoothed_gradient_reference(&obj, &w, 1, mu, 200_000, &mut rng).unwrap();
    let cfg = ZoConfig::new(mu, 1).unwrap();
    let mut stats = vec![MeanVar::new(); 3];
    for _ in 0..200_000 {
        for (s, g) in stats
            .iter_mut()
            .zip(estimate_x_gradient(&obj, &w, 1, &cfg, &mut rng).unwrap())
        {
            s.push(g);
        }
    }
    for (j, s) in stats.iter().enumerate() {
        let se = (s.std_error().powi(2) + reference.std_error[j].powi(2)).sqrt();
        assert!((s.mean() - reference.mean[j]).abs() < 4.0 * se, "coordinate {j}");
    }
}

#[test]
fn probe_plan_optimize_pipeline() {
    let layout = BlockLayout::new(6, 3).unwrap();
    let mut rng = RngStream::new(2, 200);
    let obj = BlockQuadratic::random(layout, 8, 20.0, 2.0, 0.1, &mut rng).unwrap();
    let w0 = HybridPoint::from_blocks(&[0.2; 6], &[5.0; 3]).unwrap();
    let constants = estimate_constants(
        &obj,
        &ProbeConfig::default(),
        std::slice::from_ref(&w0),
        Some(obj.optimal_value_bound()),
        &mut rng,
    )
    .unwrap();
    assert!((constants.l_x - 20.0).abs() < 1e-6);
    assert!((constants.l_y - 2.0).abs() < 1e-6);
    let plan = plan_rates(&PlanInputs {
        constants,
        n: 8,
        epochs: 100,
        d_x: 6,
    })
    .unwrap();
    assert!(plan.eta_x.value < plan.eta_y.value);

    let mut cfg = OptimizerConfig::new(
        LearningRates::new(plan.eta_x.value, plan.eta_y.value).unwrap(),
        BlockModes::HYBRID,
        100,
    );
    cfg.zo = ZoConfig::new(plan.mu.value, 1).unwrap();
    let opt = HybridSgd::new(&obj, cfg, &w0).unwrap();
    let (outcome, checkpoints) = opt.run_with_checkpoints(&w0, &mut cfg.rng(), 100).unwrap();
    assert!(!outcome.diverged());
    assert!(outcome.final_f() < outcome.initial.f_value);
    assert_eq!(checkpoints.len(), 9);

    let points: Vec<HybridPoint> = checkpoints.into_iter().map(|c| c.point).collect();
    let scan = trajectory_scan(
        &obj,
        &points,
        &ProbeConfig::default().with_target(ProbeTarget::Y),
        &mut rng,
    )
    .unwrap();
    for e in &scan {
        assert!((e.report.operator_lb - 2.0).abs() < 1e-6);
    }
    let mut csv = Vec::new();
    write_probe_csv(&mut csv, &scan.into_iter().enumerate().collect::<Vec<_>>()).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 10);
}

#[test]
fn frozen_block_never_moves_and_traces_replay() {
    let layout = BlockLayout::new(4, 2).unwrap();
    let mut rng = RngStream::new(3, 200);
    let obj = BlockQuadratic::random(layout, 5, 3.0, 1.0, 1.0, &mut rng).unwrap();
    let w0 = HybridPoint::new(layout, rng.sample_gaussian(6).unwrap()).unwrap();
    let modes = BlockModes {
        x: UpdateMode::Frozen,
        y: UpdateMode::Zo,
    };
    let mut cfg = OptimizerConfig::new(LearningRates::uniform(0.05).unwrap(), modes, 10);
    cfg.seed = 9;
    let opt = HybridSgd::new(&obj, cfg, &w0).unwrap();
    let a = opt.run(&w0, &mut cfg.rng()).unwrap();
    let b = opt.run(&w0, &mut cfg.rng()).unwrap();
    assert_eq!(a.final_point.x(), w0.x());
    assert_ne!(a.final_point.y(), w0.y());
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    write_trace_csv(&mut ca, &a.trace).unwrap();
    write_trace_csv(&mut cb, &b.trace).unwrap();
    assert_eq!(ca, cb);
    assert_eq!(obj.n_samples() * 10, a.trace.len());
}
