//! TOML run configuration. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use msns::data::{CvGrid, LabelMap, DEFAULT_GRID};
use msns::pipeline::{Overrides, SolveSpec};
use msns::SolverKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Problem {
    Synthetic {
        n: usize,
        #[serde(rename = "NS")]
        ns: usize,
        #[serde(rename = "K_test")]
        k_test: usize,
    },
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label_map: Option<BTreeMap<String, i8>>,
    },
    Libsvm {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label_map: Option<BTreeMap<String, i8>>,
    },
}

impl Problem {
    pub fn label_map(&self) -> Option<LabelMap> {
        match self {
            Problem::Synthetic { .. } => None,
            Problem::Csv { label_map, .. } | Problem::Libsvm { label_map, .. } => {
                label_map.clone().map(LabelMap)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSection {
    #[serde(default = "default_grid")]
    pub t_values: Vec<f64>,
    #[serde(default = "default_grid")]
    pub lambda_values: Vec<f64>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
}

impl Default for CvSection {
    fn default() -> Self {
        Self {
            t_values: default_grid(),
            lambda_values: default_grid(),
            folds: default_folds(),
            repeats: default_repeats(),
        }
    }
}

impl CvSection {
    pub fn grid(&self) -> CvGrid {
        CvGrid {
            t_values: self.t_values.clone(),
            lambda_values: self.lambda_values.clone(),
            folds: self.folds,
            repeats: self.repeats,
        }
    }
}

fn default_grid() -> Vec<f64> {
    DEFAULT_GRID.to_vec()
}

fn default_folds() -> usize {
    3
}

fn default_repeats() -> usize {
    20
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_solver() -> SolverKind {
    SolverKind::Msns
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub lambda1: f64,
    pub t: f64,
    #[serde(default = "default_solver")]
    pub solver: SolverKind,
    /// Solvers compared by `bench`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub solvers: Vec<SolverKind>,
    /// Master seed; every run derives its streams from it and its run id.
    #[serde(default)]
    pub seed: u64,
    /// Run ids, one independent run each.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_stride: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cv: CvSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.eps {
            Some(e) if !(e.is_finite() && e > 0.0) => return Err(invalid("eps must be positive")),
            None if !self.overrides.fixes_all_parameters() => {
                return Err(invalid("eps is required unless overrides set N, m and mu"))
            }
            _ => {}
        }
        if !(self.lambda1.is_finite() && self.lambda1 >= 0.0) {
            return Err(invalid("lambda1 must be finite and nonnegative"));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(invalid("t must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds must not be empty"));
        }
        let mut ids = self.seeds.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.seeds.len() {
            return Err(invalid("seeds must be distinct"));
        }
        if self.trace_stride == Some(0) {
            return Err(invalid("trace_stride must be at least 1"));
        }
        if self.overrides.batch == Some(0) {
            return Err(invalid("overrides.m must be at least 1"));
        }
        if let Some(mu) = self.overrides.mu {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(invalid("overrides.mu must be positive"));
            }
        }
        if let Problem::Synthetic { n, ns, k_test } = self.problem {
            if n == 0 || ns == 0 || k_test == 0 {
                return Err(invalid("synthetic n, NS and K_test must be at least 1"));
            }
        }
        if let Some(map) = self.problem.label_map() {
            if map.0.values().any(|v| *v != 1 && *v != -1) {
                return Err(invalid("label_map targets must be 1 or -1"));
            }
        }
        self.cv.grid().validate().map_err(|e| invalid(format!("cv: {e}")))?;
        Ok(())
    }

    pub fn solve_spec(&self, solver: SolverKind) -> SolveSpec {
        SolveSpec {
            lambda1: self.lambda1,
            t: self.t,
            eps: self.eps,
            solver,
            overrides: self.overrides.clone(),
            trace_stride: self.trace_stride,
        }
    }

    pub fn bench_solvers(&self) -> Result<Vec<SolverKind>, ConfigError> {
        let solvers = if self.solvers.is_empty() {
            vec![SolverKind::Msns, SolverKind::Mmdsa, SolverKind::Rspg]
        } else {
            self.solvers.clone()
        };
        if solvers.len() < 2 {
            return Err(invalid("bench needs at least two solvers"));
        }
        Ok(solvers)
    }
}
