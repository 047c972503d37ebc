//! Mini-batch stochastic Nesterov smoothing.
//!
//! Each iteration `k = 0..=N` draws one batch of `m` oracle samples at `x_k` and
//! produces three points:
//!
//! * `y_k`: a prox step from `x_k` along the batch gradient with step `gamma_k`;
//! * `z_k`: the minimizer over the ball of `(L / sigma_d) d(x)` plus the
//!   half-weighted linear models collected so far;
//! * `x_{k+1} = tau_k z_k + (1 - tau_k) y_k`.
//!
//! The output is `y_N`. Only the accumulated gradient `G = sum_i grad_i / 2` is
//! kept for `z_k`; the constant parts of the linear models do not move its argmin.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ball::ProxSetup;
use crate::error::{Error, Result};
use crate::oracle::{OracleBatch, StochasticOracle};
use crate::point::Point;
use crate::report::{RunOptions, RunReport, SolverKind, TraceRecorder};
use crate::scalar::Scalar;
use crate::schedule::Schedule;
use crate::smoothing::SmoothingParams;

#[derive(Debug, Clone, PartialEq)]
pub struct MsnsState<T> {
    pub k: usize,
    pub x: Point<T>,
    pub y: Point<T>,
    pub z: Point<T>,
    /// Accumulated linear coefficient `sum_{i<=k} alpha_i grad_i`.
    pub g_acc: Point<T>,
    /// Running sum of batch-mean maximizers.
    pub u_bar_acc: T,
    pub lipschitz: T,
}

impl<T: Scalar> MsnsState<T> {
    pub fn new(x0: Point<T>, lipschitz: T) -> Self {
        let dim = x0.dim();
        Self {
            k: 0,
            y: x0.clone(),
            z: x0.clone(),
            x: x0,
            g_acc: Point::zeros(dim),
            u_bar_acc: T::zero(),
            lipschitz,
        }
    }
}

/// `y_k = argmin_{y in X} <grad, y - x_k> + ||y - x_k||^2 / (2 gamma_k)`.
pub fn y_step<T: Scalar>(
    state: &MsnsState<T>,
    batch: &OracleBatch<T>,
    sched: &Schedule<T>,
    prox: &ProxSetup<T>,
) -> Result<Point<T>> {
    prox.set.prox_step(&state.x, &batch.grad, sched.gamma)
}

/// `z_k = argmin_{x in X} (L / sigma_d) d(x) + <G, x>` for the Euclidean `d`.
pub fn z_step<T: Scalar>(state: &MsnsState<T>, prox: &ProxSetup<T>) -> Result<Point<T>> {
    let l = state.lipschitz;
    if !(l.is_finite() && l > T::zero()) {
        return Err(Error::invalid("L", "Lipschitz constant must be finite and positive"));
    }
    let unconstrained = prox.center.add_scaled(-(prox.sigma_d / l), &state.g_acc);
    prox.set.project(&unconstrained)
}

/// `x_{k+1} = tau z + (1 - tau) y`.
pub fn x_step<T: Scalar>(z: &Point<T>, y: &Point<T>, tau: T) -> Result<Point<T>> {
    y.ensure_dim(z.dim())?;
    if !(tau > T::zero() && tau <= T::one()) {
        return Err(Error::invalid("tau", "mixing weight must lie in (0, 1]"));
    }
    Ok(z.lerp(tau, y))
}

fn ensure_feasible<T: Scalar>(prox: &ProxSetup<T>, p: &Point<T>, what: &'static str) -> Result<()> {
    if prox.set.contains(p) {
        Ok(())
    } else {
        Err(Error::invalid(what, "point left the feasible set"))
    }
}

/// Runs `N + 1` iterations with batches of `m` samples.
///
/// The oracle stream is `ChaCha8Rng::seed_from_u64(seed)`, so a deterministic
/// oracle reproduces bit-identical iterates.
pub fn msns_run<T: Scalar, O: StochasticOracle<T>>(
    oracle: &O,
    prox: &ProxSetup<T>,
    params: &SmoothingParams<T>,
    x0: &Point<T>,
    seed: u64,
    opts: &RunOptions<'_, T>,
) -> Result<RunReport<T>> {
    x0.ensure_dim(prox.dim())?;
    if oracle.dim() != prox.dim() {
        return Err(Error::DimensionMismatch {
            expected: prox.dim(),
            got: oracle.dim(),
        });
    }
    ensure_feasible(prox, x0, "x0")?;
    let n = params.n_iter;
    let m = params.batch;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = MsnsState::new(x0.clone(), params.l_total);
    let mut recorder = TraceRecorder::new(opts, n);
    let mut calls = 0usize;

    for k in 0..=n {
        state.k = k;
        let sched = Schedule::at(k, params.l_total)?;
        let batch = oracle
            .sample_batch(&state.x, m, &mut rng)
            .map_err(|e| Error::Oracle { k, source: Box::new(e) })?;
        if !batch.grad.is_finite() || !batch.value.is_finite() {
            return Err(Error::Oracle {
                k,
                source: Box::new(Error::NonFinite("oracle output")),
            });
        }
        calls += m;

        state.y = y_step(&state, &batch, &sched, prox)?;
        state.g_acc.axpy(sched.alpha, &batch.grad);
        state.u_bar_acc += batch.u_mean;
        state.z = z_step(&state, prox)?;
        let next_x = x_step(&state.z, &state.y, sched.tau)?;

        ensure_feasible(prox, &state.y, "y_k")?;
        ensure_feasible(prox, &state.z, "z_k")?;
        ensure_feasible(prox, &next_x, "x_k")?;
        recorder.observe(k, calls, &state.y);
        state.x = next_x;
    }

    let wall_time = recorder.elapsed();
    Ok(RunReport {
        solver: SolverKind::Msns,
        x_hat: state.y,
        u_hat: state.u_bar_acc / T::from_usize_lossy(n + 1),
        gap: None,
        trace: recorder.rows,
        oracle_calls: calls,
        wall_time,
        n_iter: n,
        batch: m,
        stop_index: None,
        stepsize: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::BallSet;
    use crate::oracle::toy::{QuadraticOracle, ZeroOracle};
    use approx::assert_abs_diff_eq;

    fn p(v: &[f64]) -> Point<f64> {
        Point::new(v.to_vec()).unwrap()
    }

    fn prox(t: f64, dim: usize) -> ProxSetup<f64> {
        ProxSetup::euclidean(BallSet::new(t, dim).unwrap())
    }

    fn batch(grad: &[f64]) -> OracleBatch<f64> {
        OracleBatch {
            value: 0.0,
            grad: p(grad),
            u_mean: 0.0,
            m: 1,
        }
    }

    fn params(n: usize, m: usize, l: f64) -> SmoothingParams<f64> {
        SmoothingParams {
            mu: 1.0,
            l_h_mu: 0.0,
            l_total: l,
            n_iter: n,
            batch: m,
        }
    }

    #[test]
    fn y_step_examples() {
        let px = prox(25.0, 2);
        let mut st = MsnsState::new(p(&[1.0, -2.0]), 1.0);
        let s0 = Schedule::at(0, 1.0).unwrap();
        assert_eq!(y_step(&st, &batch(&[0.0, 0.0]), &s0, &px).unwrap(), st.x);

        st.x = p(&[0.0, 0.0]);
        let y = y_step(&st, &batch(&[1.0, 0.0]), &s0, &px).unwrap();
        assert_abs_diff_eq!(y[0], -(2f64.sqrt()), epsilon = 1e-15);
        assert_eq!(y[1], 0.0);

        st.x = p(&[3.0, 4.0]);
        let y = y_step(&st, &batch(&[-30.0, -40.0]), &s0, &px).unwrap();
        assert_abs_diff_eq!(y.norm(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn z_step_examples() {
        let px = prox(1.0, 2);
        let mut st = MsnsState::new(p(&[0.0, 0.0]), 1.0);
        assert_eq!(z_step(&st, &px).unwrap(), p(&[0.0, 0.0]));
        st.g_acc = p(&[2.0, 0.0]);
        assert_eq!(z_step(&st, &px).unwrap(), p(&[-1.0, 0.0]));
        st.lipschitz = 10.0;
        assert_eq!(z_step(&st, &px).unwrap(), p(&[-0.2, 0.0]));
        st.lipschitz = 0.0;
        assert!(z_step(&st, &px).is_err());
    }

    #[test]
    fn x_step_examples() {
        let z = p(&[1.0, 0.0]);
        let y = p(&[0.0, 1.0]);
        assert_eq!(x_step(&z, &z, 0.5).unwrap(), z);
        assert_eq!(x_step(&z, &y, 0.5).unwrap(), p(&[0.5, 0.5]));
        let s = Schedule::at(98, 1.0).unwrap();
        let x = x_step(&z, &y, s.tau).unwrap();
        assert_abs_diff_eq!(x[0], 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 0.99, epsilon = 1e-15);
        assert!(x_step(&z, &p(&[1.0]), 0.5).is_err());
    }

    #[test]
    fn zero_gradient_run_returns_start() {
        let px = prox(4.0, 3);
        let x0 = p(&[0.5, -1.0, 0.25]);
        let rep = msns_run(&ZeroOracle { dim: 3 }, &px, &params(0, 1, 1.0), &x0, 1, &RunOptions::default())
            .unwrap();
        assert_eq!(rep.x_hat, x0);
        assert_eq!(rep.oracle_calls, 1);
    }

    #[test]
    fn accounting_and_trace_stride() {
        let px = prox(4.0, 2);
        let x0 = p(&[0.0, 0.0]);
        let oracle = QuadraticOracle {
            target: p(&[0.3, 0.1]),
            curvature: 1.0,
            noise: 0.5,
        };
        let opts = RunOptions::with_evaluator(&oracle);
        let rep = msns_run(&oracle, &px, &params(1200, 3, 2.0), &x0, 9, &opts).unwrap();
        assert_eq!(rep.oracle_calls, 1201 * 3);
        // stride ceil(1201 / 500) = 3, rows at k = 0, 3, ..., 1200
        assert_eq!(rep.trace.len(), 401);
        assert_eq!(rep.trace.last().unwrap().k, 1200);
        assert!(rep.trace.windows(2).all(|w| w[0].oracle_calls < w[1].oracle_calls));
        assert!(oracle.value(&rep.x_hat) < 1e-3);
    }

    #[test]
    fn deterministic_oracle_is_bit_reproducible() {
        let px = prox(9.0, 2);
        let oracle = QuadraticOracle {
            target: p(&[5.0, 1.0]),
            curvature: 1.0,
            noise: 0.0,
        };
        let x0 = p(&[0.0, 0.0]);
        let a = msns_run(&oracle, &px, &params(50, 1, 1.0), &x0, 3, &RunOptions::default()).unwrap();
        let b = msns_run(&oracle, &px, &params(50, 1, 1.0), &x0, 4, &RunOptions::default()).unwrap();
        assert_eq!(a.x_hat, b.x_hat);
        // constrained minimizer is the radial projection of the target
        let proj = px.set.project(&oracle.target).unwrap();
        assert!(a.x_hat.dist(&proj) < 5e-2);
    }

    #[test]
    fn infeasible_start_rejected() {
        let px = prox(1.0, 2);
        let r = msns_run(
            &ZeroOracle { dim: 2 },
            &px,
            &params(3, 1, 1.0),
            &p(&[2.0, 0.0]),
            0,
            &RunOptions::default(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn runs_in_single_precision() {
        let px = ProxSetup::euclidean(BallSet::new(4.0f32, 2).unwrap());
        let oracle = QuadraticOracle {
            target: Point::new(vec![0.5f32, -0.5]).unwrap(),
            curvature: 1.0,
            noise: 0.0,
        };
        let prm = SmoothingParams {
            mu: 1.0f32,
            l_h_mu: 0.0,
            l_total: 1.0,
            n_iter: 200,
            batch: 1,
        };
        let rep = msns_run(&oracle, &px, &prm, &Point::zeros(2), 0, &RunOptions::default()).unwrap();
        assert!(oracle.value(&rep.x_hat) < 1e-3);
    }
}
