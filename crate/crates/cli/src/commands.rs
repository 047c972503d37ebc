use std::borrow::Cow;
use std::path::{Path, PathBuf};

use msns::data::{
    cv_grid_search, generate_synthetic, load_csv, load_libsvm, write_csv, CellRun, CvOutcome,
};
use msns::pipeline::{
    self, estimate_parameters, run_solver, start_point, stream, AtStage, Evaluation,
    ParameterEstimate, Stage, StageError,
};
use msns::svm::predict_accuracy;
use msns::{derive_seed, Dataset, Error, RunReport, SolverKind, SvmModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, Problem, RunConfig};
use crate::output::{fmt_g17, trace_csv, Outputs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("data: {0}")]
    Data(Error),
    #[error("data: {}: {source}", path.display())]
    DataFile { path: PathBuf, source: Error },
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error("writing outputs: {0}")]
    Output(std::io::Error),
}

impl CliError {
    /// 0 success, 1 configuration, 2 data, 3 solver.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) | CliError::DataFile { .. } | CliError::Output(_) => 2,
            CliError::Stage(e) if e.stage == Stage::Data => 2,
            CliError::Stage(_) => 3,
        }
    }
}

/// A parsed configuration plus where to resolve relative data paths.
pub struct Context {
    pub cfg: RunConfig,
    pub base_dir: PathBuf,
}

impl Context {
    pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, CliError> {
        let mut cfg = RunConfig::load(path)?;
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        if let Some(out) = out {
            cfg.output_dir = out;
        }
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { cfg, base_dir })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn run_seed(&self, run_id: u64) -> u64 {
        derive_seed(self.cfg.seed, &[run_id])
    }
}

#[derive(Clone)]
pub struct RunData {
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
    pub dropped: usize,
}

enum Source {
    Fixed(RunData),
    Synthetic { n: usize, ns: usize, k_test: usize, t: f64 },
}

impl Source {
    fn open(ctx: &Context) -> Result<Self, CliError> {
        let map = ctx.cfg.problem.label_map();
        let load = |path: &Path, csv: bool| -> Result<(Dataset<f64>, usize), CliError> {
            let path = ctx.resolve(path);
            let loaded = if csv {
                load_csv(&path, map.as_ref()).map(|l| (l.dataset, l.dropped))
            } else {
                load_libsvm(&path, map.as_ref()).map(|d| (d, 0))
            };
            loaded.map_err(|source| CliError::DataFile { path, source })
        };
        let (path, test_path, csv) = match &ctx.cfg.problem {
            Problem::Synthetic { n, ns, k_test } => {
                return Ok(Source::Synthetic {
                    n: *n,
                    ns: *ns,
                    k_test: *k_test,
                    t: ctx.cfg.t,
                })
            }
            Problem::Csv { path, test_path, .. } => (path, test_path, true),
            Problem::Libsvm { path, test_path, .. } => (path, test_path, false),
        };
        let (train, dropped) = load(path, csv)?;
        let (test, test_dropped) = match test_path {
            Some(p) => load(p, csv)?,
            None => (train.clone(), 0),
        };
        if test.dim() != train.dim() {
            return Err(CliError::Data(Error::DimensionMismatch {
                expected: train.dim(),
                got: test.dim(),
            }));
        }
        if dropped + test_dropped > 0 {
            eprintln!("warning: dropped {} rows with missing values", dropped + test_dropped);
        }
        Ok(Source::Fixed(RunData {
            train,
            test,
            dropped: dropped + test_dropped,
        }))
    }

    fn for_run(&self, run_seed: u64) -> Result<Cow<'_, RunData>, StageError> {
        match *self {
            Source::Fixed(ref d) => Ok(Cow::Borrowed(d)),
            Source::Synthetic { n, ns, k_test, t } => {
                let d = generate_synthetic(n, ns, k_test, t, derive_seed(run_seed, &[stream::DATA]))
                    .at(Stage::Data)?;
                Ok(Cow::Owned(RunData {
                    train: d.train,
                    test: d.test,
                    dropped: 0,
                }))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(rename = "N")]
    pub n_iter: usize,
    pub m: usize,
    pub mu: f64,
    #[serde(rename = "L")]
    pub l_total: f64,
    pub l_h_mu: f64,
    pub l_f: f64,
    pub a_norm: f64,
    pub sigma2: f64,
    pub sigma2_first_pass: f64,
    pub mu_first_pass: f64,
    pub sigma_norm: f64,
    pub omega: f64,
    pub sigma_omega: f64,
    pub oracle_budget: usize,
}

impl From<&ParameterEstimate<f64>> for Parameters {
    fn from(e: &ParameterEstimate<f64>) -> Self {
        Self {
            n_iter: e.params.n_iter,
            m: e.params.batch,
            mu: e.params.mu,
            l_total: e.params.l_total,
            l_h_mu: e.params.l_h_mu,
            l_f: e.constants.l_f,
            a_norm: e.constants.a_norm,
            sigma2: e.constants.sigma2,
            sigma2_first_pass: e.sigma2_first_pass,
            mu_first_pass: e.mu_first_pass,
            sigma_norm: e.sigma_norm,
            omega: e.constants.omega,
            sigma_omega: e.constants.sigma_omega,
            oracle_budget: e.params.oracle_budget(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: u64,
    pub seed: u64,
    pub solver: SolverKind,
    pub parameters: Parameters,
    pub final_train_exact: f64,
    pub final_train_smoothed: f64,
    pub test_objective: f64,
    pub test_accuracy: f64,
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_note: Option<String>,
    pub u_hat: f64,
    pub oracle_calls: usize,
    pub wall_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepsize: Option<f64>,
    pub dropped_rows: usize,
    pub trace_file: String,
    pub x_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub solver: SolverKind,
    pub runs: usize,
    pub mean_test_objective: f64,
    /// Sample variance (zero for a single run).
    pub var_test_objective: f64,
    pub mean_train_exact: f64,
    pub mean_accuracy: f64,
    pub mean_wall_time: f64,
    pub mean_gap: Option<f64>,
}

impl Aggregate {
    pub fn of(solver: SolverKind, runs: &[&RunSummary]) -> Self {
        let k = runs.len() as f64;
        let mean = |f: &dyn Fn(&RunSummary) -> f64| runs.iter().map(|r| f(r)).sum::<f64>() / k;
        let mean_obj = mean(&|r| r.test_objective);
        let var = if runs.len() > 1 {
            runs.iter().map(|r| (r.test_objective - mean_obj).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        let gaps: Option<Vec<f64>> = runs.iter().map(|r| r.gap).collect();
        Self {
            solver,
            runs: runs.len(),
            mean_test_objective: mean_obj,
            var_test_objective: var,
            mean_train_exact: mean(&|r| r.final_train_exact),
            mean_accuracy: mean(&|r| r.test_accuracy),
            mean_wall_time: mean(&|r| r.wall_time),
            mean_gap: gaps.map(|g| g.iter().sum::<f64>() / k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub command: String,
    pub master_seed: u64,
    pub runs: Vec<RunSummary>,
    pub aggregates: Vec<Aggregate>,
}

fn trace_name(solver: SolverKind, run_id: u64) -> String {
    format!("trace_{solver}_run{run_id}.csv")
}

fn summarize(
    run_id: u64,
    seed: u64,
    est: &ParameterEstimate<f64>,
    report: &RunReport<f64>,
    eval: &Evaluation<f64>,
    dropped: usize,
) -> RunSummary {
    if let Some(note) = &eval.gap_note {
        eprintln!("warning: run {run_id} ({}): gap not available: {note}", report.solver);
    }
    RunSummary {
        run_id,
        seed,
        solver: report.solver,
        parameters: est.into(),
        final_train_exact: eval.train_exact,
        final_train_smoothed: eval.train_smoothed,
        test_objective: eval.test_objective,
        test_accuracy: eval.test_accuracy,
        gap: eval.gap,
        gap_note: eval.gap_note.clone(),
        u_hat: report.u_hat,
        oracle_calls: report.oracle_calls,
        wall_time: report.wall_time,
        stop_index: report.stop_index,
        stepsize: report.stepsize,
        dropped_rows: dropped,
        trace_file: trace_name(report.solver, run_id),
        x_hat: report.x_hat.to_f64_vec(),
    }
}

/// Per-run results of `solve` or `bench`, in run-id order.
fn run_all(
    ctx: &Context,
    solvers: &[SolverKind],
) -> Result<(Vec<RunSummary>, Outputs), CliError> {
    let source = Source::open(ctx)?;
    let spec = ctx.cfg.solve_spec(solvers[0]);
    let per_run: Vec<Result<Vec<(RunSummary, String)>, StageError>> = ctx
        .cfg
        .seeds
        .par_iter()
        .map(|&run_id| {
            let seed = ctx.run_seed(run_id);
            let data = source.for_run(seed)?;
            let (est, runs) = pipeline::bench(&data.train, &data.test, &spec, solvers, seed)?;
            Ok(runs
                .iter()
                .map(|(report, eval)| {
                    (
                        summarize(run_id, seed, &est, report, eval, data.dropped),
                        trace_csv(&report.trace),
                    )
                })
                .collect())
        })
        .collect();
    let mut summaries = Vec::new();
    let mut outputs = Outputs::default();
    for run in per_run {
        for (summary, trace) in run? {
            outputs.add(&summary.trace_file, trace);
            summaries.push(summary);
        }
    }
    Ok((summaries, outputs))
}

fn aggregates(solvers: &[SolverKind], runs: &[RunSummary]) -> Vec<Aggregate> {
    solvers
        .iter()
        .map(|&s| {
            let rows: Vec<&RunSummary> = runs.iter().filter(|r| r.solver == s).collect();
            Aggregate::of(s, &rows)
        })
        .collect()
}

fn commit(outputs: Outputs, ctx: &Context) -> Result<(), CliError> {
    let written = outputs.commit(&ctx.cfg.output_dir).map_err(CliError::Output)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

pub fn cmd_solve(ctx: &Context) -> Result<SolveSummary, CliError> {
    let solvers = [ctx.cfg.solver];
    let (runs, mut outputs) = run_all(ctx, &solvers)?;
    let summary = SolveSummary {
        command: "solve".into(),
        master_seed: ctx.cfg.seed,
        aggregates: aggregates(&solvers, &runs),
        runs,
    };
    for a in &summary.aggregates {
        println!(
            "{}: runs {}  test obj {} (var {})  accuracy {}  train obj {}  gap {}",
            a.solver,
            a.runs,
            fmt_g17(a.mean_test_objective),
            fmt_g17(a.var_test_objective),
            fmt_g17(a.mean_accuracy),
            fmt_g17(a.mean_train_exact),
            a.mean_gap.map(fmt_g17).unwrap_or_else(|| "n/a".into()),
        );
    }
    outputs.add_json("summary.json", &summary);
    commit(outputs, ctx)?;
    Ok(summary)
}

pub fn cmd_bench(ctx: &Context) -> Result<SolveSummary, CliError> {
    let solvers = ctx.cfg.bench_solvers()?;
    let (runs, mut outputs) = run_all(ctx, &solvers)?;
    let summary = SolveSummary {
        command: "bench".into(),
        master_seed: ctx.cfg.seed,
        aggregates: aggregates(&solvers, &runs),
        runs,
    };
    println!("run  solver  oracle_calls  final_train_exact");
    for r in &summary.runs {
        println!("{:<4} {:<7} {:<13} {}", r.run_id, r.solver, r.oracle_calls, fmt_g17(r.final_train_exact));
    }
    outputs.add_json("bench.json", &summary);
    commit(outputs, ctx)?;
    Ok(summary)
}

pub fn cmd_estimate(ctx: &Context) -> Result<Parameters, CliError> {
    let source = Source::open(ctx)?;
    let seed = ctx.run_seed(ctx.cfg.seeds[0]);
    let data = source.for_run(seed)?;
    let model = SvmModel::new(&data.train, ctx.cfg.lambda1, ctx.cfg.t).at(Stage::Estimate)?;
    let est = estimate_parameters(&model, ctx.cfg.eps, &ctx.cfg.overrides, seed).at(Stage::Estimate)?;
    let params = Parameters::from(&est);
    println!("{}", serde_json::to_string_pretty(&params).expect("serializable"));
    Ok(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub master_seed: u64,
    pub solver: SolverKind,
    pub outcome: CvOutcomeRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcomeRecord {
    pub best_t: f64,
    pub best_lambda1: f64,
    pub cells: Vec<CvCellRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCellRecord {
    pub t: f64,
    pub lambda1: f64,
    pub mean_accuracy: f64,
    pub mean_n_iter: f64,
    pub cpu_time: f64,
}

impl From<CvOutcome> for CvOutcomeRecord {
    fn from(o: CvOutcome) -> Self {
        Self {
            best_t: o.best_t,
            best_lambda1: o.best_lambda1,
            cells: o
                .cells
                .into_iter()
                .map(|c| CvCellRecord {
                    t: c.t,
                    lambda1: c.lambda1,
                    mean_accuracy: c.mean_accuracy,
                    mean_n_iter: c.mean_n_iter,
                    cpu_time: c.cpu_time,
                })
                .collect(),
        }
    }
}

pub const CV_HEADER: &str = "t,lambda1,mean_accuracy,mean_n_iter,cpu_time_s";

pub fn cmd_cv(ctx: &Context) -> Result<CvReport, CliError> {
    let source = Source::open(ctx)?;
    let seed = ctx.run_seed(ctx.cfg.seeds[0]);
    let data = source.for_run(seed)?;
    let grid = ctx.cfg.cv.grid();
    let solver = ctx.cfg.solver;
    let outcome = cv_grid_search(&data.train, &grid, seed, |task| {
        let mut spec = ctx.cfg.solve_spec(solver);
        spec.lambda1 = task.lambda1;
        spec.t = task.t;
        let model = SvmModel::new(task.train, spec.lambda1, spec.t)?;
        let est = estimate_parameters(&model, spec.eps, &spec.overrides, task.seed)?;
        let x0 = start_point(&spec.overrides, model.dim())?;
        let report = run_solver(
            solver,
            &model,
            &est.params,
            &x0,
            derive_seed(task.seed, &[stream::SOLVER]),
            Some(usize::MAX),
        )?;
        Ok(CellRun {
            accuracy: predict_accuracy(&report.x_hat, task.validate)?,
            n_iter: est.params.n_iter,
        })
    })
    .at(Stage::Solve)?;

    let mut table = String::from(CV_HEADER);
    table.push('\n');
    for c in &outcome.cells {
        table.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_g17(c.t),
            fmt_g17(c.lambda1),
            fmt_g17(c.mean_accuracy),
            fmt_g17(c.mean_n_iter),
            fmt_g17(c.cpu_time)
        ));
    }
    println!("best t = {}, lambda1 = {}", outcome.best_t, outcome.best_lambda1);
    let report = CvReport {
        master_seed: ctx.cfg.seed,
        solver,
        outcome: outcome.into(),
    };
    let mut outputs = Outputs::default();
    outputs.add("cv.csv", table);
    outputs.add_json("cv.json", &report);
    commit(outputs, ctx)?;
    Ok(report)
}

/// Everything needed to regenerate a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub n: usize,
    #[serde(rename = "NS")]
    pub ns: usize,
    #[serde(rename = "K_test")]
    pub k_test: usize,
    pub t: f64,
    pub master_seed: u64,
    pub run_id: u64,
    pub data_seed: u64,
    pub train_file: String,
    pub test_file: String,
    pub x_bar: Vec<f64>,
}

pub fn manifest_from_config(ctx: &Context) -> Result<Manifest, CliError> {
    let Problem::Synthetic { n, ns, k_test } = ctx.cfg.problem else {
        return Err(ConfigError::Invalid("gen needs a synthetic problem".into()).into());
    };
    let run_id = ctx.cfg.seeds[0];
    Ok(Manifest {
        n,
        ns,
        k_test,
        t: ctx.cfg.t,
        master_seed: ctx.cfg.seed,
        run_id,
        data_seed: derive_seed(ctx.run_seed(run_id), &[stream::DATA]),
        train_file: "train.csv".into(),
        test_file: "test.csv".into(),
        x_bar: Vec::new(),
    })
}

pub fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(format!("manifest: {e}")).into())
}

/// Writes train/test CSV files and the manifest into `out`.
pub fn cmd_gen(mut manifest: Manifest, out: &Path) -> Result<Manifest, CliError> {
    let d = generate_synthetic(manifest.n, manifest.ns, manifest.k_test, manifest.t, manifest.data_seed)
        .map_err(CliError::Data)?;
    manifest.x_bar = d.x_bar.to_f64_vec();
    let mut outputs = Outputs::default();
    outputs.add(&manifest.train_file, write_csv(&d.train));
    outputs.add(&manifest.test_file, write_csv(&d.test));
    outputs.add_json("manifest.json", &manifest);
    let written = outputs.commit(out).map_err(CliError::Output)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(manifest)
}
