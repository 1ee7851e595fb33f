//! Problem and benchmark configuration: flat-key TOML files merged with
//! command-line overrides.

use std::path::{Path, PathBuf};

use fracdiff::operator::{load_pencil, make_fd_laplacian_1d, make_fd_laplacian_2d};
use fracdiff::schemes::MethodId;
use fracdiff::{OperatorPencil, Vector};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const DEFAULT_S: [f64; 3] = [0.2, 0.5, 0.8];
pub const DEFAULT_K_MIN: usize = 1;
pub const DEFAULT_K_MAX: usize = 20;
pub const DEFAULT_KSTAR: f64 = 0.15;
pub const DEFAULT_NX: usize = 31;
pub const DEFAULT_N: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Test problem with right-hand side `b = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Problem {
    Fd1d { n: usize },
    Fd2d { nx: usize },
    Files { stiffness: PathBuf, mass: Option<PathBuf> },
}

impl Problem {
    pub fn build(&self) -> CliResult<OperatorPencil> {
        Ok(match self {
            Problem::Fd1d { n } => make_fd_laplacian_1d(*n)?,
            Problem::Fd2d { nx } => make_fd_laplacian_2d(*nx)?,
            Problem::Files { stiffness, mass } => load_pencil(stiffness, mass.as_deref())?,
        })
    }

    pub fn rhs(pencil: &OperatorPencil) -> Vector {
        Vector::from_element(pencil.dim(), 1.0)
    }
}

/// Every key a config file may hold. Unset keys fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatConfig {
    pub problem: Option<String>,
    pub n: Option<usize>,
    pub nx: Option<usize>,
    pub stiffness: Option<PathBuf>,
    pub mass: Option<PathBuf>,
    pub methods: Option<String>,
    pub s: Option<Vec<f64>>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub kstar: Option<f64>,
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub greedy_points: Option<usize>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Keys set in `over` replace those in `self`.
    pub fn merge(self, over: FlatConfig) -> FlatConfig {
        FlatConfig {
            problem: over.problem.or(self.problem),
            n: over.n.or(self.n),
            nx: over.nx.or(self.nx),
            stiffness: over.stiffness.or(self.stiffness),
            mass: over.mass.or(self.mass),
            methods: over.methods.or(self.methods),
            s: over.s.or(self.s),
            k_min: over.k_min.or(self.k_min),
            k_max: over.k_max.or(self.k_max),
            kstar: over.kstar.or(self.kstar),
            s_min: over.s_min.or(self.s_min),
            s_max: over.s_max.or(self.s_max),
            tol: over.tol.or(self.tol),
            out_dir: over.out_dir.or(self.out_dir),
            threads: over.threads.or(self.threads),
            greedy_points: over.greedy_points.or(self.greedy_points),
        }
    }

    pub fn problem(&self) -> CliResult<Problem> {
        match self.problem.as_deref().unwrap_or("fd2d") {
            "fd1d" => Ok(Problem::Fd1d { n: self.n.unwrap_or(DEFAULT_N) }),
            "fd2d" => Ok(Problem::Fd2d { nx: self.nx.unwrap_or(DEFAULT_NX) }),
            "files" => Ok(Problem::Files {
                stiffness: self
                    .stiffness
                    .clone()
                    .ok_or_else(|| CliError::Config("problem 'files' needs a stiffness path".into()))?,
                mass: self.mass.clone(),
            }),
            other => Err(CliError::Config(format!(
                "unknown problem '{other}' (expected fd1d, fd2d or files)"
            ))),
        }
    }

    pub fn resolve(&self) -> CliResult<BenchConfig> {
        let s = self.s.clone().unwrap_or_else(|| DEFAULT_S.to_vec());
        if s.is_empty() || s.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(CliError::Config(format!("exponents {s:?} must lie in (0, 1)")));
        }
        let k_min = self.k_min.unwrap_or(DEFAULT_K_MIN);
        let k_max = self.k_max.unwrap_or(DEFAULT_K_MAX);
        if k_min > k_max {
            return Err(CliError::Config(format!("k_min {k_min} exceeds k_max {k_max}")));
        }
        let s_lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let s_hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let cfg = BenchConfig {
            problem: self.problem()?,
            methods: parse_methods(self.methods.as_deref().unwrap_or("all"))?,
            s,
            k_min,
            k_max,
            kstar: self.kstar.unwrap_or(DEFAULT_KSTAR),
            s_min: self.s_min.unwrap_or(s_lo),
            s_max: self.s_max.unwrap_or(s_hi),
            tol: self.tol.unwrap_or(DEFAULT_TOL),
            out_dir: self.out_dir.clone().unwrap_or_else(|| PathBuf::from("bench-out")),
            threads: self.threads.unwrap_or(0),
            greedy_points: self.greedy_points,
        };
        if !(cfg.kstar > 0.0) {
            return Err(CliError::Config(format!("kstar {} must be positive", cfg.kstar)));
        }
        if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
            return Err(CliError::Config(format!("tol {} outside (0, 1)", cfg.tol)));
        }
        Ok(cfg)
    }
}

/// Fully resolved benchmark settings; serialized verbatim into the sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub problem: Problem,
    pub methods: Vec<MethodId>,
    pub s: Vec<f64>,
    pub k_min: usize,
    pub k_max: usize,
    pub kstar: f64,
    /// Exponent range of the sinc grid and greedy training set.
    pub s_min: f64,
    pub s_max: f64,
    /// Relative accuracy of the spectral interval estimate.
    pub tol: f64,
    pub out_dir: PathBuf,
    /// Worker threads, 0 for the rayon default.
    pub threads: usize,
    /// Use this many log-spaced greedy training points instead of the sinc nodes.
    pub greedy_points: Option<usize>,
}

/// Comma separated method ids, or `all`.
pub fn parse_methods(text: &str) -> CliResult<Vec<MethodId>> {
    if text.trim() == "all" {
        return Ok(MethodId::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let m: MethodId = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(CliError::Config("no methods selected".into()));
    }
    Ok(out)
}

/// Comma separated reals.
pub fn parse_list(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|e| CliError::Config(format!("bad number '{p}': {e}"))))
        .collect()
}
