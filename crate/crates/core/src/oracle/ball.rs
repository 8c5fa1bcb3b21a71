//! Worst case over the continuous cost budget by Kelley's cutting-plane method.
//!
//! For a fixed first stage the recourse value is concave in the cost
//! deviations, and any recourse solution `x` at `u_k` gives the supporting
//! plane `c̄'x + Σ_j u_j (ĉ_j'x)`. Maximising the minimum of these planes over
//! the l1 ball is a small LP; its optimum is an upper bound, the recourse value
//! at the new point a lower bound.

use serde::{Deserialize, Serialize};

use super::{inner_recourse_value, require_optimal, CcgResult, OracleError};
use crate::formulations::{build_scenario_aro, FormulationError, ScenarioSet};
use crate::lp::{self, Bounds, LpBuilder, Sense};
use crate::model::{Direction, ParamKind, Portfolio, TwoStageLp, UncertaintyModel};
use crate::par::{self, EvalOptions};

const KELLEY_TOL: f64 = 1e-10;
const KELLEY_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallCertificate {
    /// Best recourse value found (lower bound on the maximum).
    pub value: f64,
    /// Cutting-plane bound (upper bound on the maximum).
    pub upper: f64,
    /// Full `u`: the fixed rhs part plus the maximising cost part.
    pub u: Vec<f64>,
    pub iterations: usize,
}

/// Maximise the recourse value over cost deviations with `Σ|u_c| <= um.gamma_c`,
/// rhs parameters held at `u_fixed`.
pub fn l1_ball_worst_case(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    portfolio: &Portfolio,
    u_fixed: &[f64],
    opts: &lp::SolverOptions,
) -> Result<BallCertificate, OracleError> {
    let cost = um.indices_of(ParamKind::Cost);
    if u_fixed.len() != um.len() {
        return Err(FormulationError::Mismatch("u has the wrong length".into()).into());
    }
    if cost.iter().any(|&j| u_fixed[j] != 0.0) {
        return Err(FormulationError::Overlap("fixed part moves a cost parameter".into()).into());
    }
    let nominal = lp.second_costs();
    let mut cuts: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut best = (f64::NEG_INFINITY, u_fixed.to_vec());
    let mut u = u_fixed.to_vec();
    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    while iterations < KELLEY_MAX_ITER {
        iterations += 1;
        let rv = inner_recourse_value(lp, um, portfolio, &u, opts)?;
        if rv.cost > best.0 {
            best = (rv.cost, u.clone());
        }
        let x = &rv.primal;
        let base: f64 = nominal.iter().zip(x).map(|(c, v)| c * v).sum();
        let slopes: Vec<f64> = cost
            .iter()
            .map(|&j| um.parameters[j].entries.iter().map(|&(k, d)| d * x[k]).sum())
            .collect();
        cuts.push((base, slopes));
        if upper - best.0 <= KELLEY_TOL * (1.0 + best.0.abs()) || cost.is_empty() {
            break;
        }
        let (theta, uc) = kelley_master(um, &cost, &cuts, opts)?;
        upper = theta;
        if upper - best.0 <= KELLEY_TOL * (1.0 + best.0.abs()) {
            break;
        }
        u = u_fixed.to_vec();
        for (&j, v) in cost.iter().zip(uc) {
            u[j] = v.clamp(-1.0, 1.0);
        }
    }
    Ok(BallCertificate {
        value: best.0,
        upper: upper.max(best.0),
        u: best.1,
        iterations,
    })
}

fn kelley_master(
    um: &UncertaintyModel,
    cost: &[usize],
    cuts: &[(f64, Vec<f64>)],
    opts: &lp::SolverOptions,
) -> Result<(f64, Vec<f64>), OracleError> {
    let mut b = LpBuilder::new();
    let theta = b.add_col("theta", -1.0, Bounds::FREE);
    let mut parts = Vec::new();
    for &j in cost {
        let p = &um.parameters[j];
        let plus = b.add_col(format!("up_{}", p.name), 0.0, Bounds::upper(1.0));
        let minus = match p.direction {
            Direction::OneSided => None,
            Direction::TwoSided => Some(b.add_col(format!("um_{}", p.name), 0.0, Bounds::upper(1.0))),
        };
        if let Some(m) = minus {
            b.add_row(format!("box_{}", p.name), [(plus, 1.0), (m, 1.0)], Sense::Le, 1.0);
        }
        parts.push((plus, minus));
    }
    let budget = parts
        .iter()
        .flat_map(|&(p, m)| std::iter::once((p, 1.0)).chain(m.map(|m| (m, 1.0))))
        .collect::<Vec<_>>();
    b.add_row("budget", budget, Sense::Le, um.gamma_c);
    for (k, (base, slopes)) in cuts.iter().enumerate() {
        let coeffs = std::iter::once((theta, 1.0)).chain(
            parts
                .iter()
                .zip(slopes)
                .flat_map(|(&(p, m), &s)| std::iter::once((p, -s)).chain(m.map(|m| (m, s)))),
        );
        b.add_row(format!("cut{k}"), coeffs, Sense::Le, *base);
    }
    let inst = b.build();
    let res = require_optimal(lp::solve(&inst, opts)?, "cutting-plane master")?;
    let u = parts
        .iter()
        .map(|&(p, m)| res.primal[p] - m.map_or(0.0, |m| res.primal[m]))
        .collect();
    Ok((res.primal[theta], u))
}

/// Min over the first stage of the max over rhs scenarios and the continuous
/// cost budget, by constraint generation with [`l1_ball_worst_case`] as the
/// subproblem. Independent of the dual reformulation.
pub fn ccg_l1_solve(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    rhs_scenarios: &ScenarioSet,
    tol: f64,
    max_iter: usize,
    eval: &EvalOptions,
) -> Result<CcgResult, OracleError> {
    if rhs_scenarios.is_empty() {
        return Err(FormulationError::EmptyScenarios.into());
    }
    let mut points = rhs_scenarios.clone();
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut history = Vec::new();
    let mut first_stage = Vec::new();
    let mut converged = false;
    while history.len() < max_iter {
        let art = build_scenario_aro(lp, um, &points)?;
        let res = require_optimal(lp::solve(&art.lp, &eval.solver)?, "ball ccg master")?;
        lower = lower.max(res.objective);
        first_stage = art.first_stage_values(&res);
        let portfolio = Portfolio::new(lp, "ccg", "ccg", first_stage.clone());
        let certs = par::map(eval.exec, &rhs_scenarios.vertices, |u| {
            l1_ball_worst_case(lp, um, &portfolio, u, &eval.solver)
        });
        let certs: Vec<BallCertificate> = certs.into_iter().collect::<Result<_, _>>()?;
        let worst = certs
            .iter()
            .enumerate()
            .fold(0, |k, (i, c)| if c.value > certs[k].value { i } else { k });
        let fixed = lp.offset + lp.first_stage_cost(&first_stage);
        upper = upper.min(fixed + certs[worst].value);
        history.push((lower, upper));
        if upper - lower <= tol * (1.0 + lower.abs()) {
            converged = true;
            break;
        }
        for c in certs
            .iter()
            .filter(|c| fixed + c.value > lower + tol * (1.0 + lower.abs()))
        {
            if !points.vertices.contains(&c.u) {
                let label = crate::formulations::label_for(um, &c.u);
                points.push(c.u.clone(), label);
            }
        }
    }
    Ok(CcgResult {
        objective: if converged { upper } else { lower },
        lower,
        upper,
        iterations: history.len(),
        converged,
        added: (rhs_scenarios.len()..points.len()).collect(),
        history,
        first_stage,
    })
}
