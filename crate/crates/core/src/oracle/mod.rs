//! Brute-force and iterative references for the formulation builders.

mod ball;
mod ccg;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ball::{ccg_l1_solve, l1_ball_worst_case, BallCertificate};
pub use ccg::{ccg_solve, CcgResult};

use crate::formulations::{build_recourse, FormulationError, ScenarioSet, VERTEX_GUARD};
use crate::lp::{self, LpError, SolveResult, SolveStatus};
use crate::model::{apply_u, ModelError, Portfolio, TwoStageLp, UncertaintyModel};
use crate::par::{self, EvalOptions};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{context}: solver returned {status:?}")]
    NotOptimal { context: String, status: SolveStatus },
    #[error("{0} scenarios exceed the guard")]
    Guard(usize),
}

pub(crate) fn require_optimal(result: SolveResult, context: &str) -> Result<SolveResult, OracleError> {
    if result.is_optimal() {
        Ok(result)
    } else {
        Err(OracleError::NotOptimal {
            context: context.to_string(),
            status: result.status,
        })
    }
}

/// Optimal recourse at a fixed portfolio and realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecourseValue {
    /// Stage-2 cost including non-served energy at VoLL.
    pub cost: f64,
    /// Stage-2 cost with the non-served energy term removed.
    pub cost_without_voll: f64,
    /// Unserved energy in MWh per stage-2 year.
    pub unserved_mwh: f64,
    pub primal: Vec<f64>,
}

/// Solve the stage-2 LP at `portfolio` with parameters at `u`.
pub fn inner_recourse_value(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    portfolio: &Portfolio,
    u: &[f64],
    opts: &lp::SolverOptions,
) -> Result<RecourseValue, OracleError> {
    if portfolio.values.len() != lp.first.len() {
        return Err(ModelError::Dimension("portfolio does not match the model".into()).into());
    }
    let real = apply_u(lp, um, u)?;
    let inst = build_recourse(lp, &portfolio.values, &real.costs, &real.rhs);
    let res = require_optimal(lp::solve(&inst, opts)?, "stage-2 recourse")?;
    let slack_cost: f64 = lp.slack_hours.iter().map(|&(j, _)| real.costs[j] * res.primal[j]).sum();
    let unserved_mwh = lp.slack_hours.iter().map(|&(j, h)| h * res.primal[j]).sum();
    Ok(RecourseValue {
        cost: res.objective,
        cost_without_voll: res.objective - slack_cost,
        unserved_mwh,
        primal: res.primal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseCertificate {
    pub u_star: Vec<f64>,
    pub label: String,
    /// Worst stage-2 cost over the scenario set.
    pub value: f64,
    pub first_stage_cost: f64,
    pub per_vertex_values: Vec<(Vec<f64>, f64)>,
}

impl WorstCaseCertificate {
    pub fn total(&self) -> f64 {
        self.first_stage_cost + self.value
    }
}

/// Index of the maximum; values within `1e-9` relative of it tie and the
/// lexicographically smallest `u` wins.
pub(crate) fn argmax_lex(values: &[(Vec<f64>, f64)]) -> usize {
    let best = values.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * (1.0 + best.abs());
    let mut pick: Option<usize> = None;
    for (i, (u, v)) in values.iter().enumerate() {
        if *v < best - tol {
            continue;
        }
        pick = match pick {
            Some(k) if values[k].0.partial_cmp(u) != Some(std::cmp::Ordering::Greater) => Some(k),
            _ => Some(i),
        };
    }
    pick.expect("nonempty")
}

/// Exhaustive maximum of the recourse value over `scenarios`.
pub fn brute_force_worst_case(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    portfolio: &Portfolio,
    scenarios: &ScenarioSet,
    eval: &EvalOptions,
) -> Result<WorstCaseCertificate, OracleError> {
    if scenarios.len() > VERTEX_GUARD {
        return Err(OracleError::Guard(scenarios.len()));
    }
    if scenarios.is_empty() {
        return Err(FormulationError::EmptyScenarios.into());
    }
    let values = par::map(eval.exec, &scenarios.vertices, |u| {
        inner_recourse_value(lp, um, portfolio, u, &eval.solver).map(|r| r.cost)
    });
    let per_vertex_values: Vec<(Vec<f64>, f64)> = scenarios
        .vertices
        .iter()
        .cloned()
        .zip(values)
        .map(|(u, v)| v.map(|v| (u, v)))
        .collect::<Result<_, _>>()?;
    let k = argmax_lex(&per_vertex_values);
    Ok(WorstCaseCertificate {
        u_star: per_vertex_values[k].0.clone(),
        label: scenarios.labels[k].clone(),
        value: per_vertex_values[k].1,
        first_stage_cost: lp.offset + lp.first_stage_cost(&portfolio.values),
        per_vertex_values,
    })
}

/// Relative difference `|a - b| / max(1, |a|, |b|)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casegen::{penalty_witness, random_case, RandomCaseOptions};
    use crate::formulations::{build_deterministic, SupportRule};
    use crate::model::compile_case;

    #[test]
    fn nominal_recourse_at_the_deterministic_plan() {
        for seed in 0..10 {
            let (lp, um) = compile_case(&random_case(seed, &RandomCaseOptions::default())).unwrap();
            let art = build_deterministic(&lp).unwrap();
            let res = lp::solve(&art.lp, &lp::SolverOptions::default()).unwrap();
            let p = art.portfolio(&lp, &res, "det");
            let v = inner_recourse_value(&lp, &um, &p, &vec![0.0; um.len()], &lp::SolverOptions::default()).unwrap();
            let total = lp.offset + p.first_stage_cost + v.cost;
            assert!(
                rel_diff(total, res.objective) < 1e-8,
                "{seed}: {total} vs {}",
                res.objective
            );
            assert!(v.cost >= v.cost_without_voll);
        }
    }

    #[test]
    fn unserved_energy_is_priced_at_voll() {
        let (mut lp, um) = penalty_witness();
        let p = Portfolio::empty(&lp);
        let opts = lp::SolverOptions::default();
        let both_out = inner_recourse_value(&lp, &um, &p, &[1.0, 1.0], &opts).unwrap();
        assert_eq!(both_out.cost, 10.0);
        assert_eq!(both_out.cost_without_voll, 0.0);
        assert_eq!(both_out.unserved_mwh, 1.0);
        lp.second[2].cost = 20.0;
        assert!(inner_recourse_value(&lp, &um, &p, &[1.0, 1.0], &opts).unwrap().cost > both_out.cost);
    }

    #[test]
    fn brute_force_on_the_witness() {
        let (lp, um) = penalty_witness();
        let p = Portfolio::empty(&lp);
        let eval = EvalOptions::default();
        let nominal = brute_force_worst_case(&lp, &um, &p, &ScenarioSet::nominal(2), &eval).unwrap();
        let direct = inner_recourse_value(&lp, &um, &p, &[0.0, 0.0], &eval.solver).unwrap();
        assert_eq!(nominal.value, direct.cost);
        let set = ScenarioSet::over_all(&um, 1, SupportRule::Upto).unwrap();
        let c = brute_force_worst_case(&lp, &um, &p, &set, &eval).unwrap();
        assert_eq!(c.u_star, vec![1.0, 0.0]);
        assert_eq!(c.value, 2.0);
        assert_eq!(c.per_vertex_values.len(), 3);
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        let vals = vec![
            (vec![0.0, 1.0], 5.0),
            (vec![1.0, 0.0], 5.0 + 1e-12),
            (vec![0.0, 0.0], 4.0),
        ];
        assert_eq!(argmax_lex(&vals), 0);
        let vals = vec![(vec![1.0, 0.0], 5.0), (vec![0.0, 1.0], 6.0)];
        assert_eq!(argmax_lex(&vals), 1);
    }

    #[test]
    fn rel_diff_is_symmetric_and_floored() {
        assert_eq!(rel_diff(0.0, 1e-9), 1e-9);
        assert_eq!(rel_diff(200.0, 100.0), 0.5);
        assert_eq!(rel_diff(100.0, 200.0), 0.5);
    }
}
