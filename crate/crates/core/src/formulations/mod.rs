//! Deterministic, scenario, cost-dualized, split-budget and penalty LPs.

mod build;
mod scenarios;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{
    build_cost_dualized, build_deterministic, build_penalty_relaxation, build_recourse, build_scenario_aro,
    build_scenarios_alone, build_split_budget, default_penalty, penalty_transform, product_vertex_scenarios,
    BuildArtifacts, BuildStats, IndexMap, ScenarioBlock,
};
pub use scenarios::{enumerate_budget_vertices, enumerate_vertices, label_for, ScenarioSet, SupportRule, VERTEX_GUARD};

use crate::model::{ModelError, ParamKind, TwoStageLp, UncertaintyModel};

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("gamma {gamma} exceeds parameter count {p}")]
    GammaTooLarge { gamma: usize, p: usize },
    #[error("{0} vertices exceed the enumeration guard")]
    TooManyVertices(usize),
    #[error("scenario set is empty")]
    EmptyScenarios,
    #[error("cost-only model has rhs parameter {0}")]
    RhsInCostModel(String),
    #[error("cost deviation on free column {0}")]
    FreeCostColumn(String),
    #[error("rhs scenario {0} moves a cost parameter")]
    Overlap(String),
    #[error("penalty {0} must be finite and >= 0")]
    Penalty(f64),
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulationKind {
    Det,
    Aro,
    Split,
    Penalty,
}

impl std::str::FromStr for FormulationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "det" => Ok(FormulationKind::Det),
            "aro" => Ok(FormulationKind::Aro),
            "split" => Ok(FormulationKind::Split),
            "penalty" => Ok(FormulationKind::Penalty),
            other => Err(format!("unknown formulation `{other}`")),
        }
    }
}

/// Formulation choice plus budgets, as given on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildRequest {
    pub kind: FormulationKind,
    pub gamma: usize,
    pub gamma_c: f64,
    pub gamma_rhs: usize,
    pub support: SupportRule,
    /// `None` selects [`default_penalty`].
    pub penalty_m: Option<f64>,
}

impl BuildRequest {
    pub fn new(kind: FormulationKind) -> BuildRequest {
        BuildRequest {
            kind,
            gamma: 0,
            gamma_c: 0.0,
            gamma_rhs: 0,
            support: SupportRule::Exact,
            penalty_m: None,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            FormulationKind::Det => "det".into(),
            FormulationKind::Aro => format!("aro_g{}", self.gamma),
            FormulationKind::Split => format!("split_r{}_c{}", self.gamma_rhs, self.gamma_c),
            FormulationKind::Penalty => format!("penalty_g{}", self.gamma),
        }
    }
}

/// Build the requested formulation over the downside parameters of `um`.
pub fn build(lp: &TwoStageLp, um: &UncertaintyModel, req: &BuildRequest) -> Result<BuildArtifacts, FormulationError> {
    let um = um.downside().with_budgets(req.gamma, req.gamma_c, req.gamma_rhs);
    match req.kind {
        FormulationKind::Det => build_deterministic(lp),
        FormulationKind::Aro => {
            let set = ScenarioSet::over_all(&um, req.gamma, req.support)?;
            build_scenario_aro(lp, &um, &set)
        }
        FormulationKind::Split => {
            let set = ScenarioSet::over_kind(&um, ParamKind::Rhs, req.gamma_rhs, req.support)?;
            build_split_budget(lp, &um, &set)
        }
        FormulationKind::Penalty => {
            let m = req.penalty_m.unwrap_or_else(|| default_penalty(lp));
            build_penalty_relaxation(lp, &um, m)
        }
    }
}
