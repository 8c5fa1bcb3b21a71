//! Power-system description, block two-stage LP and uncertainty model.

mod system;
mod two_stage;
mod uncertainty;

use thiserror::Error;

pub use system::{
    validate_system, CorridorSpec, Effect, ParamSpec, SliceSpec, StageSpec, StorageSpec, SystemSpec, TechSpec,
    ZoneSpec, FORMAT_VERSION,
};
pub use two_stage::{compile_system, fix_first_stage, ColKind, Column, Constraint, Portfolio, TwoStageLp};
pub use uncertainty::{apply_u, compile_case, Direction, ParamKind, Parameter, Realization, Role, UncertaintyModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid system: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("budget: {0}")]
    Budget(String),
}

#[cfg(test)]
pub(crate) use system::tests::two_zone;
