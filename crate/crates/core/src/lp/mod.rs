//! LP container, solve interface and text export.
//!
//! Three backends sit behind [`solve`]: the embedded dense simplex, HiGHS
//! linked in-process (feature `highs`), and an external solver process fed
//! through the LP text export. [`Backend::Auto`] picks the embedded solver for
//! instances whose dense tableau is small and HiGHS otherwise.

mod external;
#[cfg(feature = "highs")]
pub mod highs;
mod instance;
mod lpformat;
mod simplex;

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use external::{parse_solution_file, write_solution_file, ExternalSolution};
pub use instance::{Bounds, LpBuilder, LpInstance, LpRow, Sense};
pub use lpformat::{export_lp, sanitize_names};

/// Environment variable naming the external solver command.
pub const EXTERNAL_SOLVER_ENV: &str = "ROBUST_CEM_EXTERNAL_SOLVER";

#[derive(Debug, Error)]
pub enum LpError {
    #[error("invalid LP instance: {0}")]
    Invalid(String),
    #[error("backend `{0}` is not available in this build")]
    BackendUnavailable(&'static str),
    #[error("external solver failed: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration-limit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Auto,
    Embedded,
    Highs,
    External,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Backend::Auto),
            "embedded" => Ok(Backend::Embedded),
            "highs" => Ok(Backend::Highs),
            "external" => Ok(Backend::External),
            other => Err(format!("unknown backend `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Absolute primal feasibility tolerance.
    pub feas_tol: f64,
    /// Relative optimality tolerance.
    pub opt_tol: f64,
    pub max_iters: usize,
    pub backend: Backend,
    pub external_cmd: Option<PathBuf>,
    /// `Auto` uses the embedded solver while `rows * (rows + cols)` stays below this.
    pub dense_limit: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-8,
            opt_tol: 1e-8,
            max_iters: 1_000_000,
            backend: Backend::Auto,
            external_cmd: None,
            dense_limit: 400_000,
        }
    }
}

impl SolverOptions {
    pub fn with_backend(backend: Backend) -> Self {
        SolverOptions {
            backend,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    /// Row multipliers, convention `c = A'y + d`.
    pub dual: Vec<f64>,
    pub wall_seconds: f64,
    pub iterations: usize,
    pub backend: String,
    /// Largest row or bound violation of `primal` (NaN when no solution).
    pub primal_residual: f64,
    /// `|primal - dual objective|` (NaN when no solution or no duals).
    pub duality_gap: f64,
}

impl SolveResult {
    pub(crate) fn without_solution(status: SolveStatus, iterations: usize, backend: &str) -> Self {
        SolveResult {
            status,
            objective: f64::NAN,
            primal: vec![],
            dual: vec![],
            wall_seconds: 0.0,
            iterations,
            backend: backend.to_string(),
            primal_residual: f64::NAN,
            duality_gap: f64::NAN,
        }
    }

    pub(crate) fn optimal(
        lp: &LpInstance,
        primal: Vec<f64>,
        dual: Vec<f64>,
        objective: f64,
        iterations: usize,
        backend: &str,
    ) -> Self {
        let primal_residual = lp.primal_residual(&primal);
        let duality_gap = if dual.len() == lp.num_rows() {
            (objective - lp.dual_objective(&dual)).abs()
        } else {
            f64::NAN
        };
        SolveResult {
            status: SolveStatus::Optimal,
            objective,
            primal,
            dual,
            wall_seconds: 0.0,
            iterations,
            backend: backend.to_string(),
            primal_residual,
            duality_gap,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Strong-duality certificate at `opt_tol`, relative to `1 + |objective|`.
    pub fn certifies(&self, opts: &SolverOptions) -> bool {
        self.is_optimal()
            && self.primal_residual <= opts.feas_tol
            && self.duality_gap <= opts.opt_tol * (1.0 + self.objective.abs())
    }
}

fn resolve_backend(lp: &LpInstance, opts: &SolverOptions) -> Backend {
    match opts.backend {
        Backend::Auto => {
            let dense = lp.num_rows() * (lp.num_rows() + lp.num_cols());
            if dense <= opts.dense_limit || !cfg!(feature = "highs") {
                Backend::Embedded
            } else {
                Backend::Highs
            }
        }
        b => b,
    }
}

/// Solve `lp` with the backend selected in `opts`.
pub fn solve(lp: &LpInstance, opts: &SolverOptions) -> Result<SolveResult, LpError> {
    lp.validate()?;
    let start = Instant::now();
    let mut result = match resolve_backend(lp, opts) {
        Backend::Embedded => simplex::solve(lp, opts),
        Backend::Highs => solve_highs(lp, opts)?,
        Backend::External => external::solve(lp, opts)?,
        Backend::Auto => unreachable!(),
    };
    result.wall_seconds = start.elapsed().as_secs_f64();
    log::debug!(
        "solved {} rows x {} cols with {}: {} in {:.3}s",
        lp.num_rows(),
        lp.num_cols(),
        result.backend,
        result.status.as_str(),
        result.wall_seconds
    );
    Ok(result)
}

#[cfg(feature = "highs")]
fn solve_highs(lp: &LpInstance, opts: &SolverOptions) -> Result<SolveResult, LpError> {
    highs::solve(lp, opts)
}

#[cfg(not(feature = "highs"))]
fn solve_highs(_lp: &LpInstance, _opts: &SolverOptions) -> Result<SolveResult, LpError> {
    Err(LpError::BackendUnavailable("highs"))
}
