use approx::{assert_abs_diff_eq, assert_relative_eq};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::data::{generate_synthetic, Dataset};

fn p(v: &[f64]) -> Point<f64> {
    Point::new(v.to_vec()).unwrap()
}

fn ds(rows: &[(&[f64], i8)]) -> Dataset<f64> {
    Dataset::new(
        "test",
        rows.iter()
            .map(|(z, y)| Sample::new(p(z), *y).unwrap())
            .collect(),
    )
    .unwrap()
}

fn small_synthetic(seed: u64) -> Dataset<f64> {
    generate_synthetic(6, 80, 1, 4.0, seed).unwrap().train
}

#[test]
fn sample_rejects_bad_label() {
    assert!(Sample::new(p(&[1.0]), 0).is_err());
    assert!(Sample::new(p(&[1.0]), 2).is_err());
}

#[test]
fn covariance_examples() {
    let one = ds(&[(&[1.0, 2.0], 1)]);
    assert!((0..2).all(|i| (0..2).all(|j| covariance(&one).unwrap().get(i, j) == 0.0)));
    let pair = ds(&[(&[1.0, 0.0], 1), (&[-1.0, 0.0], -1)]);
    assert_eq!(covariance(&pair).unwrap(), SymMatrix::from_diagonal(&[1.0, 0.0]));
}

#[test]
fn covariance_of_random_data_is_psd() {
    let data = small_synthetic(3);
    let s = covariance(&data).unwrap();
    assert!(s.is_symmetric(1e-12));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let v: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(s.quad_form(&p(&v)).unwrap() >= -1e-12);
    }
}

#[test]
fn f_value_grad_examples() {
    let s = SymMatrix::identity(2);
    let (v, g) = f_value_grad(&p(&[0.0, 0.0]), 0.5, &s).unwrap();
    assert_eq!((v, g), (0.0, p(&[0.0, 0.0])));
    let (v, g) = f_value_grad(&p(&[3.0, 4.0]), 0.5, &s).unwrap();
    assert_eq!(v, 12.5);
    assert_eq!(g, p(&[3.0, 4.0]));
    assert!(f_value_grad(&p(&[1.0]), 0.5, &s).is_err());
}

#[test]
fn f_gradient_matches_finite_differences() {
    let data = small_synthetic(4);
    let sigma = covariance(&data).unwrap();
    let x = p(&[0.3, -0.7, 1.1, 0.2, -0.4, 0.9]);
    let (_, g) = f_value_grad(&x, 0.8, &sigma).unwrap();
    let h = 1e-6;
    for i in 0..6 {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fd = (f_value_grad(&xp, 0.8, &sigma).unwrap().0 - f_value_grad(&xm, 0.8, &sigma).unwrap().0)
            / (2.0 * h);
        assert!((fd - g[i]).abs() <= 1e-8 * g[i].abs().max(1.0));
    }
}

#[test]
fn oracle_inactive_hinge_gives_quadratic_gradient() {
    let sigma = SymMatrix::from_diagonal(&[2.0, 1.0]);
    let batch = [
        Sample::new(p(&[2.0, 0.0]), 1).unwrap(),
        Sample::new(p(&[0.0, -3.0]), -1).unwrap(),
    ];
    let x = p(&[1.0, 1.0]);
    let b = stochastic_oracle(&x, &batch, 0.1, 0.5, &sigma).unwrap();
    let (_, g) = f_value_grad(&x, 0.5, &sigma).unwrap();
    assert_eq!(b.grad, g);
    assert_eq!(b.u_mean, 0.0);
}

#[test]
fn oracle_single_active_sample() {
    let sigma = SymMatrix::<f64>::zeros(3);
    let batch = [Sample::new(p(&[1.0, 0.0, 0.0]), 1).unwrap()];
    let b = stochastic_oracle(&p(&[0.0, 0.0, 0.0]), &batch, 0.1, 0.0, &sigma).unwrap();
    assert_abs_diff_eq!(b.value, 0.95, epsilon = 1e-15);
    assert_eq!(b.grad, p(&[-1.0, 0.0, 0.0]));
    assert_eq!(b.u_mean, 1.0);
    assert!(stochastic_oracle(&p(&[0.0, 0.0, 0.0]), &[], 0.1, 0.0, &sigma).is_err());
}

#[test]
fn batch_gradient_is_mean_of_single_gradients() {
    let data = small_synthetic(5);
    let sigma = covariance(&data).unwrap();
    let x = p(&[0.5, -0.2, 0.1, 0.8, -0.6, 0.3]);
    let batch = &data.samples()[..7];
    let full = stochastic_oracle(&x, batch, 0.3, 0.5, &sigma).unwrap();
    let mut mean = Point::zeros(6);
    for s in batch {
        let single = stochastic_oracle(&x, std::slice::from_ref(s), 0.3, 0.5, &sigma).unwrap();
        mean.axpy(1.0 / 7.0, &single.grad);
    }
    assert!(full.grad.dist(&mean) < 1e-14);
}

#[test]
fn sparse_batch_path_matches_dense_path() {
    let data = small_synthetic(6);
    let model = SvmModel::new(&data, 0.5, 4.0).unwrap();
    let x = p(&[0.5, -0.2, 0.1, 0.8, -0.6, 0.3]);
    let idx = [3usize, 3, 17, 42, 0, 79];
    let picked: Vec<Sample<f64>> = idx.iter().map(|&i| data.samples()[i].clone()).collect();
    let dense = stochastic_oracle(&x, &picked, 0.2, 0.5, model.sigma()).unwrap();
    let sparse = model.batch_at_indices(&x, 0.2, &idx).unwrap();
    assert_relative_eq!(dense.value, sparse.value, max_relative = 1e-14);
    assert!(dense.grad.dist(&sparse.grad) < 1e-14);
    assert_eq!(dense.u_mean, sparse.u_mean);
}

#[test]
fn large_batches_are_thread_count_independent() {
    let data = generate_synthetic(30, 3000, 1, 10.0, 9).unwrap().train;
    let model = SvmModel::new(&data, 0.5, 10.0).unwrap();
    let oracle = model.oracle(0.05).unwrap();
    let x = p(&vec![0.1; 30]);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            oracle.sample_batch(&x, 5000, &mut rng).unwrap()
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn exact_objective_examples() {
    let sep = ds(&[(&[2.0, 0.0], 1), (&[-1.0, 0.0], -1)]);
    let s0 = SymMatrix::zeros(2);
    assert_eq!(exact_objective(&p(&[1.0, 0.0]), &sep, 0.0, &s0).unwrap(), 0.0);
    let on_boundary = ds(&[(&[1.0, 1.0], 1)]);
    assert_eq!(exact_objective(&p(&[1.0, -1.0]), &on_boundary, 0.0, &s0).unwrap(), 1.0);
}

#[test]
fn exact_minus_smoothed_within_mu_omega() {
    let data = small_synthetic(7);
    let model = SvmModel::new(&data, 0.5, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-0.8..0.8)).collect();
        let mu = rng.random_range(1e-3..2.0);
        let x = p(&x);
        let d = model.exact_objective(&x).unwrap() - model.smoothed_objective(&x, mu).unwrap();
        assert!(d >= -1e-12 && d <= mu * OMEGA + 1e-12);
        let dense = exact_objective(&x, &data, 0.5, model.sigma()).unwrap();
        assert_relative_eq!(dense, model.exact_objective(&x).unwrap(), max_relative = 1e-13);
    }
}

#[test]
fn a_norm_examples() {
    let same = ds(&[(&[1.0, 0.0], 1), (&[1.0, 0.0], 1), (&[1.0, 0.0], 1)]);
    assert_eq!(estimate_a_norm(&same).unwrap(), 1.0);
    let two = ds(&[(&[1.0, 0.0], 1), (&[0.0, 1.0], -1)]);
    assert_abs_diff_eq!(estimate_a_norm(&two).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
    let mirrored = ds(&[(&[0.4, 2.0], 1), (&[0.4, 2.0], -1)]);
    assert_eq!(estimate_a_norm(&mirrored).unwrap(), 0.0);
    let model = SvmModel::new(&mirrored, 0.5, 1.0).unwrap();
    assert!(matches!(
        model.structure_constants(1.0).and_then(|c| crate::smoothing::batch_size(10, &c)),
        Err(Error::DegenerateOperator)
    ));
}

#[test]
fn sigma2_examples() {
    let same = ds(&[(&[1.0, -1.0][..], 1); 20]);
    let model = SvmModel::new(&same, 0.5, 2.0).unwrap();
    assert_eq!(model.estimate_sigma2(0.1, 3).unwrap(), 0.0);

    let data = small_synthetic(8);
    let model = SvmModel::new(&data, 0.5, 4.0).unwrap();
    let a = model.estimate_sigma2(0.1, 5).unwrap();
    assert_eq!(a, model.estimate_sigma2(0.1, 5).unwrap());
    assert!(a > 0.0);
}

#[test]
fn sigma2_two_sample_enumeration() {
    // 1-D: z1 = 2 (y = +1), z2 = 1 (y = -1); at x = 0.25 margins are 0.5 and -0.25.
    let data = ds(&[(&[2.0], 1), (&[1.0], -1)]);
    let model = SvmModel::new(&data, 0.0, 1.0).unwrap();
    let mu = 0.1;
    // both margins are below 1 - mu, so u = 1 and the gradients are -y z = -2 and +1
    let (g1, g2) = (-2.0, 1.0);
    let mean = 0.5 * (g1 + g2);
    let expected = 0.5 * ((g1 - mean) * (g1 - mean) + (g2 - mean) * (g2 - mean));
    let got = model.gradient_variance_at(&p(&[0.25]), mu, &[0, 1]).unwrap();
    assert_abs_diff_eq!(got, expected, epsilon = 1e-15);
    assert_eq!(got, 2.25);
}

#[test]
fn lf_examples() {
    assert_relative_eq!(estimate_lf(0.5, &SymMatrix::identity(3), 1e-10).unwrap(), 1.0);
    assert_relative_eq!(
        estimate_lf(1.0, &SymMatrix::from_diagonal(&[3.0, 1.0]), 1e-10).unwrap(),
        6.0,
        max_relative = 1e-9
    );
    assert_eq!(estimate_lf(0.0, &SymMatrix::identity(3), 1e-10).unwrap(), 0.0);
}

#[test]
fn accuracy_examples() {
    let data = ds(&[(&[1.0, 0.0], 1), (&[-1.0, 0.0], -1), (&[0.0, 1.0], 1), (&[0.0, -1.0], 1)]);
    assert_eq!(predict_accuracy(&p(&[1.0, 0.0]), &data).unwrap(), 1.0);
    assert_eq!(predict_accuracy(&p(&[1.0, 1.0]), &data).unwrap(), 0.75);
    assert_eq!(predict_accuracy(&p(&[0.0, 0.0]), &data).unwrap(), data.positive_fraction());
}

#[test]
fn smoothed_gradient_matches_finite_differences_away_from_kinks() {
    let data = small_synthetic(10);
    let model = SvmModel::new(&data, 0.5, 4.0).unwrap();
    let mu = 0.3;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    while checked < 20 {
        let x = p(&(0..6).map(|_| rng.random_range(-0.7..0.7)).collect::<Vec<_>>());
        let near_kink = (0..model.num_samples()).any(|i| {
            let s = model.margin(i, &x);
            (s - 1.0).abs() < 1e-4 || (s - (1.0 - mu)).abs() < 1e-4
        });
        if near_kink {
            continue;
        }
        let g = model.full_oracle(&x, mu).unwrap().grad;
        let h = 1e-6;
        for i in 0..6 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (model.smoothed_objective(&xp, mu).unwrap()
                - model.smoothed_objective(&xm, mu).unwrap())
                / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * g.norm().max(1e-3));
        }
        checked += 1;
    }
}

#[test]
fn smoothed_gradient_lipschitz_bound() {
    let data = small_synthetic(11);
    let model = SvmModel::new(&data, 0.5, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mu = rng.random_range(0.01..1.0);
        let x1 = p(&(0..6).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
        let x2 = p(&(0..6).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>());
        let idx: Vec<usize> = (0..10).map(|_| rng.random_range(0..80)).collect();
        let g1 = model.batch_at_indices(&x1, mu, &idx).unwrap().grad;
        let g2 = model.batch_at_indices(&x2, mu, &idx).unwrap().grad;
        let bound = (model.l_f() + model.max_row_norm_sq() / mu) * x1.dist(&x2);
        assert!(g1.dist(&g2) <= bound + 1e-12);
    }
}

#[test]
fn dual_value_examples() {
    let data = small_synthetic(12);
    let model = SvmModel::new(&data, 0.5, 4.0).unwrap();
    assert_abs_diff_eq!(dual_value(&model, 0.0, DUAL_TOL).unwrap(), 0.0, epsilon = 1e-14);

    let one = ds(&[(&[1.0, 0.0], 1)]);
    let linear = SvmModel::new(&one, 0.0, 1.0).unwrap();
    assert_abs_diff_eq!(dual_value(&linear, 1.0, DUAL_TOL).unwrap(), 0.0, epsilon = 1e-12);
    assert!(dual_value(&linear, 1.5, DUAL_TOL).is_err());
}

#[test]
fn weak_duality_on_random_pairs() {
    let data = small_synthetic(13);
    let model = SvmModel::new(&data, 0.5, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..30 {
        let x = model
            .set()
            .project(&p(&(0..6).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<_>>()))
            .unwrap();
        let u = rng.random_range(0.0..1.0);
        assert!(duality_gap(&model, &x, u, DUAL_TOL).unwrap() >= -1e-8);
    }
}

#[test]
fn gap_vanishes_at_saddle_point() {
    // min 0.5 ||x||^2 + max(0, 1 - x1): primal optimum x = e1 (value 0.5),
    // dual phi(u) = u - u^2 / 2 maximized at u = 1 (value 0.5)
    let one = ds(&[(&[1.0, 0.0], 1)]);
    let model = SvmModel::with_covariance(&one, 0.5, 4.0, SymMatrix::identity(2)).unwrap();
    let gap = duality_gap(&model, &p(&[1.0, 0.0]), 1.0, DUAL_TOL).unwrap();
    assert!(gap.abs() <= 1e-8);
}
