//! Run reports and trace recording shared by all solvers.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::oracle::ObjectiveEval;
use crate::point::Point;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Msns,
    Mmdsa,
    Rspg,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Msns => "msns",
            SolverKind::Mmdsa => "mmdsa",
            SolverKind::Rspg => "rspg",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow<T> {
    pub k: usize,
    pub oracle_calls: usize,
    pub wall_time_s: f64,
    pub smoothed_train_obj: Option<T>,
    pub exact_train_obj: Option<T>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport<T> {
    pub solver: SolverKind,
    pub x_hat: Point<T>,
    /// Average of the batch-mean inner maximizers over all iterates.
    pub u_hat: T,
    /// Primal-dual gap, filled in by the caller when evaluated.
    pub gap: Option<T>,
    pub trace: Vec<TraceRow<T>>,
    pub oracle_calls: usize,
    /// Seconds spent in the iteration loop, excluding trace evaluation.
    pub wall_time: f64,
    pub n_iter: usize,
    pub batch: usize,
    /// Random stopping index drawn by RSPG.
    pub stop_index: Option<usize>,
    /// Constant step size used by a baseline.
    pub stepsize: Option<T>,
}

/// Options shared by all solvers.
#[derive(Clone, Copy, Default)]
pub struct RunOptions<'a, T> {
    /// Record a trace row every `stride` iterations (plus the last);
    /// `None` picks `ceil((N + 1) / 500)`.
    pub trace_stride: Option<usize>,
    pub evaluator: Option<&'a dyn ObjectiveEval<T>>,
}

impl<'a, T> RunOptions<'a, T> {
    pub fn with_evaluator(evaluator: &'a dyn ObjectiveEval<T>) -> Self {
        Self {
            trace_stride: None,
            evaluator: Some(evaluator),
        }
    }
}

pub fn default_stride(n_iter: usize) -> usize {
    (n_iter + 1).div_ceil(500).max(1)
}

/// Loop clock that excludes time spent evaluating trace objectives.
pub(crate) struct TraceRecorder<'a, T> {
    stride: usize,
    last: usize,
    evaluator: Option<&'a dyn ObjectiveEval<T>>,
    start: Instant,
    paused: Duration,
    pub rows: Vec<TraceRow<T>>,
}

impl<'a, T: Scalar> TraceRecorder<'a, T> {
    pub fn new(opts: &RunOptions<'a, T>, n_iter: usize) -> Self {
        Self {
            stride: opts.trace_stride.unwrap_or_else(|| default_stride(n_iter)).max(1),
            last: n_iter,
            evaluator: opts.evaluator,
            start: Instant::now(),
            paused: Duration::ZERO,
            rows: Vec::new(),
        }
    }

    pub fn elapsed(&self) -> f64 {
        (self.start.elapsed().saturating_sub(self.paused)).as_secs_f64()
    }

    pub fn observe(&mut self, k: usize, oracle_calls: usize, current: &Point<T>) {
        if k % self.stride != 0 && k != self.last {
            return;
        }
        let wall_time_s = self.elapsed();
        let t0 = Instant::now();
        let (smoothed, exact) = match self.evaluator {
            Some(e) => (Some(e.smoothed(current)), Some(e.exact(current))),
            None => (None, None),
        };
        self.rows.push(TraceRow {
            k,
            oracle_calls,
            wall_time_s,
            smoothed_train_obj: smoothed,
            exact_train_obj: exact,
        });
        self.paused += t0.elapsed();
    }
}
