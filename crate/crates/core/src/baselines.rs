//! Comparison solvers run on the same smoothed problem and oracle budget:
//! mini-batch mirror-descent SA with a constant step (Euclidean prox) and
//! single-phase randomized stochastic projected gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ball::ProxSetup;
use crate::error::{Error, Result};
use crate::oracle::StochasticOracle;
use crate::point::Point;
use crate::report::{RunOptions, RunReport, SolverKind, TraceRecorder};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

/// Number of batch gradients at `x0` used to estimate the M-MDSA step.
pub const MDSA_PROBE_BATCHES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepsizePolicy {
    /// `gamma = sqrt(2 D / sigma_d) / (G sqrt(N + 1))`.
    ConstantMdsa,
    /// `gamma = 1 / (2 L)` with a random stopping index.
    RspgHalfOverL,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineParams<T> {
    pub n_iter: usize,
    pub batch: usize,
    pub policy: StepsizePolicy,
    pub lipschitz: T,
    pub seed: u64,
}

impl<T: Scalar> BaselineParams<T> {
    fn validate(&self, expected: StepsizePolicy) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::invalid("m", "batch size must be at least 1"));
        }
        if !(self.lipschitz.is_finite() && self.lipschitz > T::zero()) {
            return Err(Error::invalid("L", "Lipschitz constant must be finite and positive"));
        }
        if self.policy != expected {
            return Err(Error::invalid("policy", format!("expected {expected:?}")));
        }
        Ok(())
    }
}

fn check_start<T: Scalar, O: StochasticOracle<T>>(
    oracle: &O,
    prox: &ProxSetup<T>,
    x0: &Point<T>,
) -> Result<()> {
    x0.ensure_dim(prox.dim())?;
    if oracle.dim() != prox.dim() {
        return Err(Error::DimensionMismatch {
            expected: prox.dim(),
            got: oracle.dim(),
        });
    }
    if !prox.set.contains(x0) {
        return Err(Error::invalid("x0", "start point outside the feasible set"));
    }
    Ok(())
}

/// Root of the mean squared norm of `MDSA_PROBE_BATCHES` batch gradients at `x0`.
pub fn estimate_gradient_scale<T: Scalar, O: StochasticOracle<T>>(
    oracle: &O,
    x0: &Point<T>,
    batch: usize,
    seed: u64,
) -> Result<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = T::zero();
    for _ in 0..MDSA_PROBE_BATCHES {
        acc += oracle.sample_batch(x0, batch, &mut rng)?.grad.norm_sq();
    }
    Ok((acc / T::from_usize_lossy(MDSA_PROBE_BATCHES)).sqrt())
}

/// Mini-batch mirror-descent SA with a constant step; output is the average of
/// the query points `x_0..x_N`.
pub fn mmdsa_run<T: Scalar, O: StochasticOracle<T>>(
    oracle: &O,
    prox: &ProxSetup<T>,
    params: &BaselineParams<T>,
    x0: &Point<T>,
    opts: &RunOptions<'_, T>,
) -> Result<RunReport<T>> {
    params.validate(StepsizePolicy::ConstantMdsa)?;
    check_start(oracle, prox, x0)?;
    let n = params.n_iter;
    let m = params.batch;
    let scale = estimate_gradient_scale(oracle, x0, m, derive_seed(params.seed, &[0x6d64_7361]))?;
    let n1 = T::from_usize_lossy(n + 1);
    let radius = (T::lit(2.0) * prox.d_max / prox.sigma_d).sqrt();
    let gamma = if scale > T::zero() {
        radius / (scale * n1.sqrt())
    } else {
        params.lipschitz.recip()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut recorder = TraceRecorder::new(opts, n);
    let mut x = x0.clone();
    let mut sum = Point::zeros(x0.dim());
    let mut u_acc = T::zero();
    let mut calls = 0usize;
    let mut avg = x0.clone();
    for k in 0..=n {
        let batch = oracle
            .sample_batch(&x, m, &mut rng)
            .map_err(|e| Error::Oracle { k, source: Box::new(e) })?;
        calls += m;
        u_acc += batch.u_mean;
        sum.axpy(T::one(), &x);
        avg = sum.scaled(T::from_usize_lossy(k + 1).recip());
        recorder.observe(k, calls, &avg);
        x = prox.set.prox_step(&x, &batch.grad, gamma)?;
    }
    let wall_time = recorder.elapsed();
    Ok(RunReport {
        solver: SolverKind::Mmdsa,
        x_hat: prox.set.project(&avg)?,
        u_hat: u_acc / n1,
        gap: None,
        trace: recorder.rows,
        oracle_calls: calls,
        wall_time,
        n_iter: n,
        batch: m,
        stop_index: None,
        stepsize: Some(gamma),
    })
}

/// Single-phase randomized stochastic projected gradient with `gamma = 1/(2L)`.
///
/// The stopping index `R` is drawn uniformly from `{1, ..., max(N, 1)}` before
/// iterating and the output is `x_R`. All `N + 1` batches are still drawn so the
/// oracle budget and trace line up with the other solvers.
pub fn rspg_run<T: Scalar, O: StochasticOracle<T>>(
    oracle: &O,
    prox: &ProxSetup<T>,
    params: &BaselineParams<T>,
    x0: &Point<T>,
    opts: &RunOptions<'_, T>,
) -> Result<RunReport<T>> {
    params.validate(StepsizePolicy::RspgHalfOverL)?;
    check_start(oracle, prox, x0)?;
    let n = params.n_iter;
    let m = params.batch;
    let gamma = (T::lit(2.0) * params.lipschitz).recip();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let stop = rng.random_range(1..=n.max(1));

    let mut recorder = TraceRecorder::new(opts, n);
    let mut x = x0.clone();
    let mut out = x0.clone();
    let mut u_acc = T::zero();
    let mut calls = 0usize;
    for k in 0..=n {
        let batch = oracle
            .sample_batch(&x, m, &mut rng)
            .map_err(|e| Error::Oracle { k, source: Box::new(e) })?;
        calls += m;
        u_acc += batch.u_mean;
        x = prox.set.prox_step(&x, &batch.grad, gamma)?;
        if k + 1 == stop {
            out = x.clone();
        }
        recorder.observe(k, calls, &x);
    }
    let wall_time = recorder.elapsed();
    Ok(RunReport {
        solver: SolverKind::Rspg,
        x_hat: out,
        u_hat: u_acc / T::from_usize_lossy(n + 1),
        gap: None,
        trace: recorder.rows,
        oracle_calls: calls,
        wall_time,
        n_iter: n,
        batch: m,
        stop_index: Some(stop),
        stepsize: Some(gamma),
    })
}
