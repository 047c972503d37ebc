use msns::data::{generate_synthetic, load_csv, write_csv};
use msns::pipeline::{solve, Overrides, SolveSpec};
use msns::{Dataset, SolverKind};
use proptest::prelude::*;

fn spec(solver: SolverKind, eps: f64) -> SolveSpec {
    SolveSpec {
        lambda1: 0.5,
        t: 4.0,
        eps: Some(eps),
        solver,
        overrides: Overrides::default(),
        trace_stride: Some(5),
    }
}

#[test]
fn csv_round_trip_gives_identical_run() {
    let data = generate_synthetic(6, 300, 200, 4.0, 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    std::fs::write(&path, write_csv(&data.train)).unwrap();
    let loaded = load_csv::<f64>(&path, None).unwrap();
    assert_eq!(loaded.dropped, 0);
    assert_eq!(loaded.dataset.samples(), data.train.samples());

    let a = solve(&data.train, &data.test, &spec(SolverKind::Msns, 0.3), 5).unwrap();
    let b = solve(&loaded.dataset, &data.test, &spec(SolverKind::Msns, 0.3), 5).unwrap();
    assert_eq!(a.report.x_hat, b.report.x_hat);
    assert_eq!(a.estimate, b.estimate);
}

#[test]
fn single_precision_tracks_double() {
    let data = generate_synthetic(5, 400, 400, 4.0, 3).unwrap();
    let train32: Dataset<f32> = data.train.cast();
    let test32: Dataset<f32> = data.test.cast();
    let s = spec(SolverKind::Msns, 0.3);
    let d = solve(&data.train, &data.test, &s, 9).unwrap();
    let f = solve(&train32, &test32, &s, 9).unwrap();
    assert_eq!(d.estimate.params.n_iter, f.estimate.params.n_iter);
    assert!((d.evaluation.train_exact - f64::from(f.evaluation.train_exact)).abs() < 1e-2);
    assert!(f.report.x_hat.norm_sq() <= 4.0 + 1e-4);
}

#[test]
fn baselines_spend_the_same_budget() {
    let data = generate_synthetic(4, 200, 100, 4.0, 21).unwrap();
    let calls: Vec<usize> = [SolverKind::Msns, SolverKind::Mmdsa, SolverKind::Rspg]
        .into_iter()
        .map(|k| solve(&data.train, &data.test, &spec(k, 0.4), 2).unwrap().report.oracle_calls)
        .collect();
    assert!(calls.windows(2).all(|w| w[0] == w[1]), "{calls:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_solver_stays_feasible_and_gap_is_nonnegative(
        n in 1usize..5,
        data_seed in 0u64..1000,
        run_seed in 0u64..1000,
        eps in 0.2f64..1.0,
        k in 0usize..3,
    ) {
        let kind = [SolverKind::Msns, SolverKind::Mmdsa, SolverKind::Rspg][k];
        let data = generate_synthetic(n, 60, 30, 4.0, data_seed).unwrap();
        let out = solve(&data.train, &data.test, &spec(kind, eps), run_seed).unwrap();
        prop_assert!(out.report.x_hat.norm_sq() <= 4.0 + 1e-9);
        if let Some(gap) = out.evaluation.gap {
            prop_assert!(gap >= -1e-8);
        }
        prop_assert!(out.evaluation.train_smoothed <= out.evaluation.train_exact + 1e-12);
    }
}
