//! Desk case, random instances, and the experiment matrix.

mod desk;
mod experiments;
mod random;

use thiserror::Error;

pub use desk::{generate_desk_case, DeskCaseOptions, DeskRanges, DOWNSIDE, UPSIDE};
pub use experiments::{
    compare_formulations, gamma_sweep, run_cell, solve_artifacts, Cell, CompareReport, PlotData, Series, Solved,
    SweepReport,
};
pub use random::{penalty_witness, random_case, ParamMix, RandomCaseOptions};

use crate::formulations::FormulationError;
use crate::lp::SolveStatus;
use crate::model::{compile_case, ModelError, SystemSpec, TwoStageLp, UncertaintyModel};
use crate::oracle::OracleError;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{label}: solver returned {status:?}")]
    NotOptimal { label: String, status: SolveStatus },
}

/// Generated desk spec together with its compiled LP and uncertainty model.
pub fn desk_case(opts: &DeskCaseOptions) -> Result<(SystemSpec, TwoStageLp, UncertaintyModel), CaseError> {
    let spec = generate_desk_case(opts);
    let (lp, um) = compile_case(&spec)?;
    Ok((spec, lp, um))
}
