//! End-to-end SVM experiment: estimate constants, fix `(N, m, mu)`, run a
//! solver and evaluate the result.
//!
//! `sigma^2` depends on `mu` while `mu` depends on `sigma^2`, so parameters are
//! chosen in two passes: `sigma^2` is first estimated at `mu_0 = eps`, which
//! gives `N`, `m` and `mu`; it is then re-estimated once at that `mu`, and
//! `m` and `mu` are recomputed. `N` does not depend on `sigma^2`.

use serde::{Deserialize, Serialize};

use crate::ball::ProxSetup;
use crate::baselines::{mmdsa_run, rspg_run, BaselineParams, StepsizePolicy};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::msns::msns_run;
use crate::point::Point;
use crate::report::{RunOptions, RunReport, SolverKind};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::smoothing::{
    batch_size, iteration_budget, smoothing_parameter, SmoothingParams, StructureConstants,
};
use crate::svm::{self, SvmModel, DUAL_TOL};

/// Seed streams split off a run seed.
pub mod stream {
    pub const DATA: u64 = 1;
    pub const SIGMA2: u64 = 2;
    pub const SOLVER: u64 = 3;
}

/// Pipeline stage, used to label failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Data,
    Estimate,
    Solve,
    Evaluate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Data => "data",
            Stage::Estimate => "estimate",
            Stage::Solve => "solve",
            Stage::Evaluate => "evaluate",
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{} stage failed: {source}", stage.name())]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

pub trait AtStage<V> {
    fn at(self, stage: Stage) -> Result<V, StageError>;
}

impl<V> AtStage<V> for Result<V> {
    fn at(self, stage: Stage) -> Result<V, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Values that replace the computed ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n_iter: Option<usize>,
    #[serde(rename = "m", default, skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl Overrides {
    pub fn fixes_all_parameters(&self) -> bool {
        self.n_iter.is_some() && self.batch.is_some() && self.mu.is_some()
    }
}

/// Everything the parameter rule produced, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterEstimate<T> {
    pub constants: StructureConstants<T>,
    pub params: SmoothingParams<T>,
    /// `lambda_max(Sigma)`.
    pub sigma_norm: T,
    /// `sigma^2` from the first pass (at `mu_0`).
    pub sigma2_first_pass: T,
    /// `mu` from the first pass, at which the final `sigma^2` is estimated.
    pub mu_first_pass: T,
}

pub fn estimate_parameters<T: Scalar>(
    model: &SvmModel<T>,
    eps: Option<T>,
    overrides: &Overrides,
    seed: u64,
) -> Result<ParameterEstimate<T>> {
    let prox = model.prox_setup();
    let mu_override = overrides.mu.map(T::lit);
    let sigma_seed = derive_seed(seed, &[stream::SIGMA2]);
    let mu0 = match (mu_override, eps) {
        (Some(mu), _) => mu,
        (None, Some(eps)) => eps,
        (None, None) => return Err(Error::invalid("eps", "required unless N, m and mu are all overridden")),
    };
    let sigma2_first = model.estimate_sigma2(mu0, sigma_seed)?;
    let c0 = model.structure_constants(sigma2_first)?;
    let n_iter = match (overrides.n_iter, eps) {
        (Some(n), _) => n,
        (None, Some(eps)) => iteration_budget(eps, &c0, &prox)?,
        (None, None) => return Err(Error::invalid("eps", "required to compute N")),
    };
    let pick = |c: &StructureConstants<T>| -> Result<(usize, T)> {
        let m = match overrides.batch {
            Some(m) => m,
            None => batch_size(n_iter, c)?,
        };
        let mu = match mu_override {
            Some(mu) => mu,
            None => smoothing_parameter(n_iter, m, c, &prox)?,
        };
        Ok((m, mu))
    };
    let (_, mu1) = pick(&c0)?;
    let sigma2 = model.estimate_sigma2(mu1, sigma_seed)?;
    let constants = model.structure_constants(sigma2)?;
    let (batch, mu) = pick(&constants)?;
    Ok(ParameterEstimate {
        constants,
        params: SmoothingParams::with_values(n_iter, batch, mu, &constants)?,
        sigma_norm: model.sigma_norm(),
        sigma2_first_pass: sigma2_first,
        mu_first_pass: mu1,
    })
}

/// Runs `kind` on the smoothed problem with the budget `(N + 1) m` of `params`.
pub fn run_solver<T: Scalar>(
    kind: SolverKind,
    model: &SvmModel<T>,
    params: &SmoothingParams<T>,
    x0: &Point<T>,
    seed: u64,
    trace_stride: Option<usize>,
) -> Result<RunReport<T>> {
    let oracle = model.oracle(params.mu)?;
    let prox: ProxSetup<T> = model.prox_setup();
    let opts = RunOptions {
        trace_stride,
        evaluator: Some(&oracle),
    };
    let baseline = |policy| BaselineParams {
        n_iter: params.n_iter,
        batch: params.batch,
        policy,
        lipschitz: params.l_total,
        seed,
    };
    match kind {
        SolverKind::Msns => msns_run(&oracle, &prox, params, x0, seed, &opts),
        SolverKind::Mmdsa => mmdsa_run(&oracle, &prox, &baseline(StepsizePolicy::ConstantMdsa), x0, &opts),
        SolverKind::Rspg => rspg_run(&oracle, &prox, &baseline(StepsizePolicy::RspgHalfOverL), x0, &opts),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation<T> {
    pub train_exact: T,
    pub train_smoothed: T,
    pub test_objective: T,
    pub test_accuracy: f64,
    /// `psi(x_hat) - phi(u_hat)`; `None` when the dual solve did not converge.
    pub gap: Option<T>,
    pub gap_note: Option<String>,
}

/// Train/test objectives, test accuracy and the primal-dual gap. The test
/// objective uses the training `Sigma`, which is part of the model.
pub fn evaluate<T: Scalar>(
    model: &SvmModel<T>,
    report: &RunReport<T>,
    mu: T,
    test: &Dataset<T>,
) -> Result<Evaluation<T>> {
    let x = &report.x_hat;
    let (gap, gap_note) = match svm::duality_gap(model, x, report.u_hat, T::lit(DUAL_TOL)) {
        Ok(g) => (Some(g), None),
        Err(e @ Error::NotConverged { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(Evaluation {
        train_exact: model.exact_objective(x)?,
        train_smoothed: model.smoothed_objective(x, mu)?,
        test_objective: svm::exact_objective(x, test, model.lambda1, model.sigma())?,
        test_accuracy: svm::predict_accuracy(x, test)?,
        gap,
        gap_note,
    })
}

/// What a single solve needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveSpec {
    pub lambda1: f64,
    pub t: f64,
    pub eps: Option<f64>,
    pub solver: SolverKind,
    pub overrides: Overrides,
    pub trace_stride: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome<T> {
    pub estimate: ParameterEstimate<T>,
    pub report: RunReport<T>,
    pub evaluation: Evaluation<T>,
}

pub fn start_point<T: Scalar>(overrides: &Overrides, dim: usize) -> Result<Point<T>> {
    match &overrides.x0 {
        Some(v) => {
            let p = Point::from_f64_slice(v)?;
            p.ensure_dim(dim)?;
            Ok(p)
        }
        None => Ok(Point::zeros(dim)),
    }
}

/// Estimate, solve and evaluate on one train/test pair.
pub fn solve<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    spec: &SolveSpec,
    seed: u64,
) -> Result<SolveOutcome<T>, StageError> {
    let model = SvmModel::new(train, T::lit(spec.lambda1), T::lit(spec.t)).at(Stage::Estimate)?;
    let estimate =
        estimate_parameters(&model, spec.eps.map(T::lit), &spec.overrides, seed).at(Stage::Estimate)?;
    let x0 = start_point(&spec.overrides, model.dim()).at(Stage::Solve)?;
    let mut report = run_solver(
        spec.solver,
        &model,
        &estimate.params,
        &x0,
        derive_seed(seed, &[stream::SOLVER]),
        spec.trace_stride,
    )
    .at(Stage::Solve)?;
    let evaluation = evaluate(&model, &report, estimate.params.mu, test).at(Stage::Evaluate)?;
    report.gap = evaluation.gap;
    Ok(SolveOutcome {
        estimate,
        report,
        evaluation,
    })
}

/// Runs several solvers from one parameter estimate so they share `(N, m, mu, L)`.
pub fn bench<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    spec: &SolveSpec,
    solvers: &[SolverKind],
    seed: u64,
) -> Result<(ParameterEstimate<T>, Vec<(RunReport<T>, Evaluation<T>)>), StageError> {
    let model = SvmModel::new(train, T::lit(spec.lambda1), T::lit(spec.t)).at(Stage::Estimate)?;
    let estimate =
        estimate_parameters(&model, spec.eps.map(T::lit), &spec.overrides, seed).at(Stage::Estimate)?;
    let x0 = start_point(&spec.overrides, model.dim()).at(Stage::Solve)?;
    let solver_seed = derive_seed(seed, &[stream::SOLVER]);
    let mut runs = Vec::with_capacity(solvers.len());
    for &kind in solvers {
        let mut report = run_solver(kind, &model, &estimate.params, &x0, solver_seed, spec.trace_stride)
            .at(Stage::Solve)?;
        let evaluation = evaluate(&model, &report, estimate.params.mu, test).at(Stage::Evaluate)?;
        report.gap = evaluation.gap;
        runs.push((report, evaluation));
    }
    Ok((estimate, runs))
}
