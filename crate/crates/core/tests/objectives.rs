use hybridzo::numeric::{norm_sq, relative_error};
use hybridzo::objectives::{FiniteSumObjective, ObjectiveSpec};
use hybridzo::oracle::{dense_hessian, fd_gradient, Target};
use hybridzo::{HybridPoint, RngStream};

const SPECS: [&str; 5] = [
    r#"{"kind": "block_quadratic", "d_x": 3, "d_y": 2, "n": 4, "a_x": 5.0, "a_y": 0.5, "seed": 11}"#,
    r#"{"kind": "dense_quadratic", "d_x": 2, "d_y": 3, "n": 3, "seed": 12}"#,
    r#"{"kind": "cosh", "d_x": 2, "d_y": 2, "n": 2, "seed": 13}"#,
    r#"{"kind": "logistic", "d_x": 3, "d_y": 2, "n": 20, "seed": 14, "lambda": 0.1}"#,
    r#"{"kind": "linear", "d_x": 4, "d_y": 1, "n": 2, "seed": 15}"#,
];

fn build(text: &str) -> Box<dyn FiniteSumObjective> {
    ObjectiveSpec::from_json(text).unwrap().build().unwrap()
}

fn random_point(obj: &dyn FiniteSumObjective, rng: &mut RngStream) -> HybridPoint {
    HybridPoint::new(obj.layout(), rng.sample_gaussian(obj.layout().dim()).unwrap()).unwrap()
}

#[test]
fn analytic_gradients_match_central_differences() {
    let mut rng = RngStream::new(1, 100);
    for text in SPECS {
        let obj = build(text);
        for _ in 0..5 {
            let w = random_point(obj.as_ref(), &mut rng);
            let fd = fd_gradient(obj.as_ref(), &w, Target::Full, 1e-5).unwrap();
            assert!(relative_error(&fd, &obj.grad_full(&w).unwrap()) < 1e-6, "{text}");
            for i in 0..obj.n_samples() {
                let fd = fd_gradient(obj.as_ref(), &w, Target::Sample(i), 1e-5).unwrap();
                assert!(relative_error(&fd, &obj.grad_sample(&w, i).unwrap()) < 1e-6, "{text}");
            }
        }
    }
}

#[test]
fn full_objective_is_the_sample_mean() {
    let mut rng = RngStream::new(2, 100);
    for text in SPECS {
        let obj = build(text);
        let w = random_point(obj.as_ref(), &mut rng);
        let n = obj.n_samples() as f64;
        let mean: f64 = (0..obj.n_samples())
            .map(|i| obj.eval_sample(&w, i).unwrap())
            .sum::<f64>()
            / n;
        assert!((obj.eval_full(&w).unwrap() - mean).abs() <= 1e-12 * mean.abs().max(1.0));
    }
}

#[test]
fn sample_variance_matches_direct_sum() {
    let mut rng = RngStream::new(3, 100);
    for text in SPECS {
        let obj = build(text);
        let w = random_point(obj.as_ref(), &mut rng);
        let full = obj.grad_full(&w).unwrap();
        let direct = (0..obj.n_samples())
            .map(|i| {
                let g = obj.grad_sample(&w, i).unwrap();
                norm_sq(&g.iter().zip(&full).map(|(a, b)| a - b).collect::<Vec<_>>())
            })
            .sum::<f64>()
            / obj.n_samples() as f64;
        let got = obj.sample_variance(&w).unwrap();
        assert!(
            (got - direct).abs() <= 1e-9 * direct.max(1.0),
            "{text}: {got} vs {direct}"
        );
    }
}

#[test]
fn value_bound_is_below_sampled_values() {
    let mut rng = RngStream::new(4, 100);
    for text in SPECS.iter().filter(|t| !t.contains("linear")) {
        let obj = build(text);
        let bound = obj.optimal_value_bound();
        for _ in 0..20 {
            let w = random_point(obj.as_ref(), &mut rng);
            assert!(obj.eval_full(&w).unwrap() >= bound, "{text}");
        }
    }
}

#[test]
fn hessians_are_symmetric_and_psd_for_convex_objectives() {
    let mut rng = RngStream::new(5, 100);
    for text in SPECS {
        let obj = build(text);
        let w = random_point(obj.as_ref(), &mut rng);
        let h = dense_hessian(obj.as_ref(), &w, 1e-4).unwrap();
        assert!(h.asymmetry < 1e-6, "{text}: asymmetry {}", h.asymmetry);
        let min = h.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        assert!(min > -1e-6, "{text}: eigenvalue {min}");
    }
}
