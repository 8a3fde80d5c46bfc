use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use hybridzo::estimator::{estimate_x_gradient, ZoConfig};
use hybridzo::numeric::{relative_error, MeanVar};
use hybridzo::objectives::{
    BlockQuadratic, CoshObjective, DenseQuadratic, FiniteSumObjective, LinearObjective, ObjectiveSpec,
};
use hybridzo::optimizer::format_float;
use hybridzo::oracle::{
    check_estimator_bounds, check_hybrid_smoothness, dense_hessian, fd_gradient, BoundCheckReport, Target,
};
use hybridzo::planner::{epoch_budget, plan_rates, PlanInputs, SmoothnessConstants};
use hybridzo::probe::{estimate_block_lipschitz, ProbeConfig, ProbeTarget};
use hybridzo::{BlockLayout, HybridPoint, Result, RngStream};

use crate::error::{CliError, CliResult, Status};
use crate::output::write_file;

type Check = fn(&mut RngStream) -> Result<Vec<BoundCheckReport>>;

const GRADIENT_SPECS: [&str; 5] = [
    r#"{"kind": "block_quadratic", "d_x": 4, "d_y": 3, "n": 5, "a_x": 10.0, "a_y": 1.0, "seed": 1}"#,
    r#"{"kind": "dense_quadratic", "d_x": 3, "d_y": 3, "n": 4, "seed": 2}"#,
    r#"{"kind": "cosh", "d_x": 3, "d_y": 2, "n": 3, "seed": 3, "spread": 0.5}"#,
    r#"{"kind": "logistic", "d_x": 4, "d_y": 2, "n": 30, "seed": 4, "lambda": 0.01}"#,
    r#"{"kind": "linear", "d_x": 5, "d_y": 2, "n": 3, "seed": 5}"#,
];

fn gradient_checks(rng: &mut RngStream) -> Result<Vec<BoundCheckReport>> {
    GRADIENT_SPECS
        .iter()
        .map(|text| {
            let spec = ObjectiveSpec::from_json(text)?;
            let obj = spec.build()?;
            let layout = obj.layout();
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let w = HybridPoint::new(layout, rng.sample_gaussian(layout.dim())?)?;
                worst = worst.max(relative_error(
                    &fd_gradient(obj.as_ref(), &w, Target::Full, 1e-5)?,
                    &obj.grad_full(&w)?,
                ));
                for i in 0..obj.n_samples() {
                    let fd = fd_gradient(obj.as_ref(), &w, Target::Sample(i), 1e-5)?;
                    worst = worst.max(relative_error(&fd, &obj.grad_sample(&w, i)?));
                }
            }
            let kind = text.split('"').nth(3).unwrap_or("objective");
            Ok(BoundCheckReport::new(
                format!("gradient_fd({kind})"),
                worst,
                1e-6,
                0.0,
                10,
                0.0,
            ))
        })
        .collect()
}

fn unbiasedness(rng: &mut RngStream) -> Result<Vec<BoundCheckReport>> {
    let layout = BlockLayout::new(5, 1)?;
    let obj = LinearObjective::random(layout, 1, 1.0, rng)?;
    let w = HybridPoint::new(layout, rng.sample_gaussian(6)?)?;
    let trials = 100_000;
    let mut stats = vec![MeanVar::new(); 5];
    let cfg = ZoConfig::default();
    for _ in 0..trials {
        for (s, g) in stats.iter_mut().zip(estimate_x_gradient(&obj, &w, 0, &cfg, rng)?) {
            s.push(g);
        }
    }
    let worst = stats
        .iter()
        .zip(&obj.slopes()[0])
        .map(|(s, c)| (s.mean() - c).abs() / s.std_error())
        .fold(0.0, f64::max);
    Ok(vec![BoundCheckReport::new(
        "estimator_unbiased(linear,d_x=5) [z-score]",
        worst,
        4.0,
        0.0,
        trials,
        0.0,
    )])
}

fn lemma_bounds(rng: &mut RngStream) -> Result<Vec<BoundCheckReport>> {
    let mut out = Vec::new();
    for d_x in [2, 8] {
        let layout = BlockLayout::new(d_x, 2)?;
        let linear = LinearObjective::random(layout, 2, 1.0, rng)?;
        let quad = BlockQuadratic::random(layout, 3, 10.0, 1.0, 1.0, rng)?;
        let objs: [(&str, &dyn FiniteSumObjective, f64); 2] =
            [("linear", &linear, 0.0), ("block_quadratic", &quad, 10.0)];
        for (name, obj, l) in objs {
            let w = HybridPoint::new(layout, rng.sample_gaussian(layout.dim())?)?;
            for mu in [1e-2, 1e-3, 1e-4] {
                for mut r in check_estimator_bounds(obj, &w, 0, mu, l, 10_000, rng)? {
                    r.name = format!("{r}[{name}]", r = r.name);
                    out.push(r);
                }
            }
        }
    }
    Ok(out)
}

fn probe_exactness(rng: &mut RngStream) -> Result<Vec<BoundCheckReport>> {
    let layout = BlockLayout::new(10, 10)?;
    let obj = BlockQuadratic::identical(layout, 4, 100.0, 1.0, vec![0.0; 20])?;
    let w = HybridPoint::zeros(layout);
    let mut out = Vec::new();
    for (target, a) in [(ProbeTarget::X, 100.0), (ProbeTarget::Y, 1.0)] {
        let r = estimate_block_lipschitz(&obj, &w, &ProbeConfig::default().with_target(target), rng)?;
        out.push(BoundCheckReport::new(
            format!("probe_operator_lb({}) |err|", target.name()),
            (r.operator_lb - a).abs(),
            0.0,
            0.0,
            r.directions,
            1e-9,
        ));
    }
    let dense = DenseQuadratic::random(BlockLayout::new(3, 3)?, 2, 1.0, rng)?;
    let z = HybridPoint::zeros(dense.layout());
    let exact = dense_hessian(&dense, &z, 1e-4)?.frobenius();
    let r = estimate_block_lipschitz(&dense, &z, &ProbeConfig::new(1e-5, 1000, ProbeTarget::Full)?, rng)?;
    out.push(BoundCheckReport::new(
        "probe_frobenius(dense 6x6) rel err",
        (r.frobenius_scaled - exact).abs() / exact,
        0.1,
        0.0,
        r.directions,
        0.0,
    ));
    Ok(out)
}

fn ball(layout: BlockLayout, radius: f64, count: usize, rng: &mut RngStream) -> Result<Vec<HybridPoint>> {
    (0..count)
        .map(|_| {
            let dir = rng.sample_unit_sphere(layout.dim())?;
            let r = radius * rng.next_f64().powf(1.0 / layout.dim() as f64);
            HybridPoint::new(layout, dir.into_iter().map(|v| r * v).collect())
        })
        .collect()
}

fn envelopes(rng: &mut RngStream) -> Result<Vec<BoundCheckReport>> {
    let layout = BlockLayout::new(3, 2)?;
    let quad = BlockQuadratic::random(layout, 4, 100.0, 1.0, 1.0, rng)?;
    let points = ball(layout, 3.0, 10, rng)?;
    let mut q = check_hybrid_smoothness(&quad, &points, &|_| 100.0, &|_| 1.0, 1e-4, 1e-6)?.report;
    q.name = "envelope(block_quadratic, l = a)".into();

    let cosh = CoshObjective::random(layout, 1, 0.5, rng)?;
    let points = ball(layout, 3.0, 100, rng)?;
    let ell = |u: f64| 1.0 + u;
    let mut c = check_hybrid_smoothness(&cosh, &points, &ell, &ell, 1e-5, 1e-6)?.report;
    c.name = "envelope(cosh, l(u) = 1 + u)".into();
    Ok(vec![q, c])
}

fn planner_examples(_: &mut RngStream) -> Result<Vec<BoundCheckReport>> {
    let constants = SmoothnessConstants {
        l_x: 1.0,
        l_y: 1.0,
        l_x_max: 1.0,
        l_y_max: 1.0,
        g: 1.0,
        sigma: 1.0,
        f_gap: 1.0,
    };
    let plan = plan_rates(&PlanInputs {
        constants,
        n: 10,
        epochs: 100,
        d_x: 4,
    })?;
    let t = epoch_budget(0.1, 0.5, 1.0, 1.0, 10)?;
    Ok(vec![
        BoundCheckReport::new(
            "planner_eta_x(example) |err|",
            (plan.eta_x.value - 1.0 / 15360.0).abs(),
            0.0,
            0.0,
            1,
            0.0,
        ),
        BoundCheckReport::new(
            "planner_epochs(example) |err|",
            (t as f64 - 4413.0).abs(),
            0.0,
            0.0,
            1,
            0.0,
        ),
    ])
}

fn negative_control(rng: &mut RngStream) -> Result<Vec<BoundCheckReport>> {
    let layout = BlockLayout::new(3, 2)?;
    let quad = BlockQuadratic::random(layout, 4, 100.0, 1.0, 1.0, rng)?;
    let points = ball(layout, 3.0, 5, rng)?;
    let mut r = check_hybrid_smoothness(&quad, &points, &|_| 50.0, &|_| 1.0, 1e-4, 1e-6)?.report;
    r.name = "negative_control(block_quadratic, l_x = a_x/2)".into();
    Ok(vec![r])
}

/// All checks, each on its own stream of `seed`, in a fixed order.
pub fn run_checks(seed: u64, with_negative_control: bool) -> Result<Vec<BoundCheckReport>> {
    let mut checks: Vec<Check> = vec![
        gradient_checks,
        unbiasedness,
        lemma_bounds,
        probe_exactness,
        envelopes,
        planner_examples,
    ];
    if with_negative_control {
        checks.push(negative_control);
    }
    let results: Vec<Result<Vec<BoundCheckReport>>> = checks
        .par_iter()
        .enumerate()
        .map(|(k, check)| check(&mut RngStream::new(seed, 0xc4ec_0000 + k as u64)))
        .collect();
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

pub const CHECK_HEADER: &str = "name,empirical_lhs,theoretical_rhs,stderr,trials,tolerance,pass";

pub fn cmd_check(seed: Option<u64>, negative_control: bool, out: Option<&Path>) -> CliResult<Status> {
    let reports = run_checks(seed.unwrap_or(0), negative_control)?;
    for r in &reports {
        println!(
            "{}  {:<52} lhs={} rhs={} stderr={}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            format_float(r.empirical_lhs),
            format_float(r.theoretical_rhs),
            format_float(r.stderr)
        );
    }
    if let Some(path) = out {
        write_file(path, |w| {
            writeln!(w, "{CHECK_HEADER}")?;
            reports.iter().try_for_each(|r| {
                writeln!(
                    w,
                    "\"{}\",{},{},{},{},{},{}",
                    r.name,
                    format_float(r.empirical_lhs),
                    format_float(r.theoretical_rhs),
                    format_float(r.stderr),
                    r.trials,
                    format_float(r.tolerance),
                    r.pass
                )
            })
        })?;
    }
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.name.as_str()).collect();
    println!("checks={} failed={}", reports.len(), failed.len());
    if failed.is_empty() {
        Ok(Status::Success)
    } else {
        Err(CliError::check_failed(format!("failing checks: {}", failed.join("; "))))
    }
}
