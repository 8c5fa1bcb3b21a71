use serde::{Deserialize, Serialize};

use super::{brute_force_worst_case, require_optimal, OracleError};
use crate::formulations::{build_scenario_aro, ScenarioSet};
use crate::lp;
use crate::model::{Portfolio, TwoStageLp, UncertaintyModel};
use crate::par::EvalOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcgResult {
    /// Best upper bound when converged, otherwise the last lower bound.
    pub objective: f64,
    pub lower: f64,
    pub upper: f64,
    /// Master solves performed.
    pub iterations: usize,
    pub converged: bool,
    /// `(lower, upper)` after each iteration.
    pub history: Vec<(f64, f64)>,
    /// Indices into the candidate set, in the order they entered the master.
    pub added: Vec<usize>,
    pub first_stage: Vec<f64>,
}

/// Column-and-constraint generation over an explicit candidate vertex set.
///
/// The master is the scenario LP over the vertices added so far, starting from
/// the first candidate; the subproblem is [`brute_force_worst_case`] at the
/// master's first-stage point. An infinite `tol` stops after the first master.
pub fn ccg_solve(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    candidates: &ScenarioSet,
    tol: f64,
    max_iter: usize,
    eval: &EvalOptions,
) -> Result<CcgResult, OracleError> {
    if candidates.is_empty() {
        return Err(crate::formulations::FormulationError::EmptyScenarios.into());
    }
    let mut added = vec![0usize];
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut history = Vec::new();
    let mut first_stage = Vec::new();
    let mut converged = false;
    while history.len() < max_iter {
        let mut set = ScenarioSet {
            vertices: vec![],
            labels: vec![],
        };
        for &i in &added {
            set.push(candidates.vertices[i].clone(), candidates.labels[i].clone());
        }
        let art = build_scenario_aro(lp, um, &set)?;
        let res = require_optimal(lp::solve(&art.lp, &eval.solver)?, "ccg master")?;
        lower = lower.max(res.objective);
        first_stage = art.first_stage_values(&res);
        if tol.is_infinite() {
            history.push((lower, upper));
            converged = true;
            break;
        }
        let portfolio = Portfolio::new(lp, "ccg", "ccg", first_stage.clone());
        let cert = brute_force_worst_case(lp, um, &portfolio, candidates, eval)?;
        upper = upper.min(cert.total());
        history.push((lower, upper));
        if upper - lower <= tol * (1.0 + lower.abs()) {
            converged = true;
            break;
        }
        let k = candidates
            .vertices
            .iter()
            .position(|u| *u == cert.u_star)
            .expect("certificate vertex comes from the candidate set");
        if added.contains(&k) {
            // Worst vertex already in the master: bounds cannot move further.
            break;
        }
        added.push(k);
    }
    let objective = if converged && upper.is_finite() { upper } else { lower };
    Ok(CcgResult {
        objective,
        lower,
        upper,
        iterations: history.len(),
        converged,
        history,
        added,
        first_stage,
    })
}
