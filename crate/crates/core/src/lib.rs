//! Mini-batch stochastic Nesterov smoothing (MSNS) for constrained convex
//! stochastic composite problems
//!
//! `min_{x in X} f(x) + E[max_{u in U} <A(xi) x, u> - omega(u)]`,
//!
//! together with a linear SVM instance, two stochastic-approximation
//! baselines, dataset tooling and an end-to-end experiment pipeline.
//!
//! Numerical types are generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below name the common instantiations.

pub mod ball;
pub mod baselines;
pub mod data;
pub mod error;
pub mod linalg;
pub mod msns;
pub mod oracle;
pub mod pipeline;
pub mod point;
pub mod report;
pub mod scalar;
pub mod schedule;
pub mod seed;
pub mod smoothing;
pub mod svm;

pub use ball::{BallSet, ProxSetup};
pub use baselines::{mmdsa_run, rspg_run, BaselineParams, StepsizePolicy};
pub use data::Dataset;
pub use error::{Error, Result};
pub use msns::msns_run;
pub use oracle::{ObjectiveEval, OracleBatch, StochasticOracle};
pub use point::Point;
pub use report::{RunOptions, RunReport, SolverKind, TraceRow};
pub use scalar::Scalar;
pub use schedule::Schedule;
pub use seed::derive_seed;
pub use smoothing::{SmoothingParams, StructureConstants};
pub use svm::{Sample, SvmModel};

pub type Point64 = Point<f64>;
pub type Point32 = Point<f32>;
pub type BallSet64 = BallSet<f64>;
pub type BallSet32 = BallSet<f32>;
pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type SvmModel64 = SvmModel<f64>;
pub type SvmModel32 = SvmModel<f32>;
pub type RunReport64 = RunReport<f64>;
pub type RunReport32 = RunReport<f32>;
pub type SmoothingParams64 = SmoothingParams<f64>;
pub type SmoothingParams32 = SmoothingParams<f32>;
