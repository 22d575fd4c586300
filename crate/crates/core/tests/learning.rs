use elastic_core::elastic::{elastic_inner_product, elastic_linear, ElasticParams};
use elastic_core::learn::{
    epoch_order, error_rate, finite_diff_check, init_params, sgd_step, train, Example, Hyperparams, Label,
    LossKind, Schedule,
};
use elastic_core::seed;
use elastic_core::{Error, TimeSeries, WeightMatrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_series(rng: &mut ChaCha8Rng, len: usize) -> TimeSeries {
    TimeSeries::new((0..len).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

/// Bound on the generalized gradient norm of the margin perceptron loss at `x`.
fn gradient_bound_sq(x: &TimeSeries, cols: usize) -> f64 {
    let sq = TimeSeries::new(x.iter().map(|v| v * v).collect()).unwrap();
    let ones = WeightMatrix::identical_rows(x.len(), &vec![1.0; cols]).unwrap();
    1.0 + elastic_inner_product(&sq, &ones).unwrap()
}

fn planted_problem(rng: &mut ChaCha8Rng, margin: f64) -> (Vec<Example>, usize, usize) {
    let n = rng.random_range(3..=8);
    let m = rng.random_range(1..=3);
    let w = WeightMatrix::random_uniform(n, m, 1.0, rng).unwrap();
    let pool: Vec<TimeSeries> = (0..200).map(|_| random_series(rng, n)).collect();
    let mut sigmas: Vec<f64> = pool.iter().map(|x| elastic_inner_product(x, &w).unwrap()).collect();
    let scores = sigmas.clone();
    sigmas.sort_by(f64::total_cmp);
    let planted = ElasticParams::new(w, -sigmas[sigmas.len() / 2]).unwrap();
    let data: Vec<Example> = pool
        .into_iter()
        .zip(scores)
        .filter_map(|(x, s)| {
            let f = s + planted.bias;
            let label = if f >= margin {
                Label::Positive
            } else if f <= -margin {
                Label::Negative
            } else {
                return None;
            };
            Some(Example::new(x, label))
        })
        .take(30)
        .collect();
    for ex in &data {
        assert!(ex.label.sign() * elastic_linear(&ex.series, &planted).unwrap() >= margin);
    }
    (data, n, m)
}

#[test]
fn margin_perceptron_separates_planted_problems() {
    let mut rng = seed::rng(21);
    let margin = 0.25;
    for trial in 0..10 {
        let (data, n, m) = planted_problem(&mut rng, margin);
        let c_sq = data
            .iter()
            .map(|ex| gradient_bound_sq(&ex.series, m))
            .fold(0.0, f64::max);
        let hyper = Hyperparams {
            learning_rate: margin / c_sq,
            margin,
            max_epochs: 5000,
            shuffle_seed: trial,
            ..Hyperparams::default()
        };
        let theta0 = ElasticParams::zeros(n, m).unwrap();
        let (theta, report) = train(&theta0, &data, LossKind::MarginPerceptron, &hyper).unwrap();
        assert!(report.epochs_run < hyper.max_epochs, "trial {trial} did not converge");
        assert_eq!(error_rate(&theta, &data).unwrap(), 0.0);
        assert_eq!(report.final_train_error_rate, 0.0);
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = seed::rng(22);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 100 {
        attempts += 1;
        assert!(attempts < 2000, "too few smooth points");
        let kind = LossKind::ALL[attempts % 4];
        let k = rng.random_range(1..=6);
        let n = k + rng.random_range(0..=2);
        let m = rng.random_range(1..=4);
        let theta = ElasticParams::new(
            WeightMatrix::random_uniform(n, m, 1.0, &mut rng).unwrap(),
            rng.random_range(-1.0..1.0),
        )
        .unwrap();
        let label = if rng.random_bool(0.5) { Label::Positive } else { Label::Negative };
        let ex = Example::new(random_series(&mut rng, k), label);
        let hyper = Hyperparams {
            margin: rng.random_range(0.0..2.0),
            regularization: rng.random_range(0.0..0.5),
            ..Hyperparams::default()
        };
        match finite_diff_check(kind, &ex, &theta, &hyper, 1e-6) {
            Ok(c) => {
                assert!(c.max_rel_deviation <= 1e-5, "{kind}: {c:?}");
                assert_eq!(c.entries_checked, n * m + 1);
                checked += 1;
            }
            Err(Error::NonUniqueActivePath { .. } | Error::NonSmoothPoint(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn logistic_inverse_t_loss_settles() {
    let mut rng = seed::rng(23);
    let data: Vec<Example> = (0..20)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
            let shift = label.sign();
            let x = TimeSeries::new((0..6).map(|_| shift + rng.random_range(-0.5..0.5)).collect()).unwrap();
            Example::new(x, label)
        })
        .collect();
    let theta0 = init_params(6, 2, &mut rng).unwrap();
    let hyper = Hyperparams {
        learning_rate: 0.05,
        max_epochs: 200,
        schedule: Schedule::InverseT { horizon: 20.0 },
        shuffle_seed: 5,
        ..Hyperparams::default()
    };
    let (_, report) = train(&theta0, &data, LossKind::Logistic, &hyper).unwrap();
    let trace = &report.loss_trace;
    assert_eq!(trace.len(), 200);
    assert!(trace.last().unwrap() < &trace[0]);
    // eventually non-increasing
    for w in trace[100..].windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

/// Textbook perceptron over raw sample vectors, one weight per position.
fn reference_perceptron(
    w: &mut [f64],
    b: &mut f64,
    data: &[Example],
    eta: f64,
    seed: u64,
    epochs: usize,
) -> Vec<(Vec<f64>, f64)> {
    let mut trajectory = Vec::new();
    for epoch in 0..epochs {
        let mut updates = 0;
        for idx in epoch_order(seed, epoch, data.len()) {
            let ex = &data[idx];
            let mut dot = 0.0;
            for (xi, wi) in ex.series.iter().zip(w.iter()) {
                dot += xi * wi;
            }
            let y = ex.label.sign();
            if -y * (*b + dot) > 0.0 {
                for (wi, xi) in w.iter_mut().zip(ex.series.iter()) {
                    *wi += eta * y * xi;
                }
                *b += eta * y;
                updates += 1;
            }
            trajectory.push((w.to_vec(), *b));
        }
        if updates == 0 {
            break;
        }
    }
    trajectory
}

#[test]
fn single_column_trajectory_is_the_standard_perceptron() {
    let mut rng = seed::rng(24);
    let data: Vec<Example> = (0..15)
        .map(|_| {
            let len = rng.random_range(3..=7);
            let label = if rng.random_bool(0.5) { Label::Positive } else { Label::Negative };
            Example::new(random_series(&mut rng, len), label)
        })
        .collect();
    let theta0 = init_params(7, 1, &mut rng).unwrap();
    let eta = 0.1;
    let mut w = theta0.weights.to_row_major();
    let mut b = theta0.bias;
    let trajectory = reference_perceptron(&mut w, &mut b, &data, eta, 3, 4);

    let hyper = Hyperparams {
        learning_rate: eta,
        shuffle_seed: 3,
        max_epochs: 4,
        ..Hyperparams::default()
    };
    // step by step through the elastic update
    let mut theta = theta0.clone();
    let mut step = 0;
    'outer: for epoch in 0..4 {
        for idx in epoch_order(3, epoch, data.len()) {
            if step == trajectory.len() {
                break 'outer;
            }
            theta = sgd_step(&theta, &data[idx], eta, LossKind::Perceptron, &hyper).unwrap();
            let (w_ref, b_ref) = &trajectory[step];
            assert_eq!(&theta.weights.to_row_major(), w_ref, "step {step}");
            assert_eq!(theta.bias.to_bits(), b_ref.to_bits(), "step {step}");
            step += 1;
        }
    }
    assert_eq!(step, trajectory.len());

    let (trained, _) = train(&theta0, &data, LossKind::Perceptron, &hyper).unwrap();
    let (w_end, b_end) = trajectory.last().unwrap();
    assert_eq!(&trained.weights.to_row_major(), w_end);
    assert_eq!(trained.bias.to_bits(), b_end.to_bits());
}
