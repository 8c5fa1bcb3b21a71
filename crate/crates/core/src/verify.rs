//! Cross-method checks on one case: every formulation against an independent
//! reference. Gating checks decide the exit status; the rest are reported.

use serde::{Deserialize, Serialize};

use crate::casegen::{solve_artifacts, CaseError};
use crate::formulations::{
    build_cost_dualized, build_deterministic, build_scenario_aro, build_scenarios_alone, build_split_budget,
    BuildArtifacts, ScenarioSet, SupportRule,
};
use crate::lp::SolveResult;
use crate::model::{ParamKind, Parameter, TwoStageLp, UncertaintyModel};
use crate::oracle::{brute_force_worst_case, ccg_l1_solve, ccg_solve, inner_recourse_value, rel_diff};
use crate::par::EvalOptions;
use crate::report::{csv_field, fmt_num, schema_line};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub reference: f64,
    pub candidate: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub gating: bool,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn equal(&mut self, name: impl Into<String>, reference: f64, candidate: f64, tolerance: f64, gating: bool) {
        self.checks.push(Check {
            name: name.into(),
            reference,
            candidate,
            residual: rel_diff(reference, candidate),
            tolerance,
            gating,
        });
    }

    /// `lower <= upper` up to `tolerance` relative; the residual is the violation.
    pub fn ordered(&mut self, name: impl Into<String>, lower: f64, upper: f64, tolerance: f64) {
        let scale = 1f64.max(lower.abs()).max(upper.abs());
        self.checks.push(Check {
            name: name.into(),
            reference: lower,
            candidate: upper,
            residual: ((lower - upper) / scale).max(0.0),
            tolerance,
            gating: true,
        });
    }

    pub fn gating_failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.gating && !c.passed()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = schema_line("verify");
        out.push_str("check,reference,candidate,residual,tolerance,gating,pass\n");
        for c in &self.checks {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&c.name),
                fmt_num(c.reference),
                fmt_num(c.candidate),
                fmt_num(c.residual),
                fmt_num(c.tolerance),
                c.gating,
                c.passed()
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Largest Γ for the scenario and CCG checks (capped at the parameter count).
    pub max_gamma: usize,
    pub gamma_rhs: usize,
    pub gamma_c: usize,
    pub ccg_max_iter: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            max_gamma: 2,
            gamma_rhs: 1,
            gamma_c: 1,
            ccg_max_iter: 200,
        }
    }
}

/// Submodel with only the parameters of one kind.
pub fn restrict(um: &UncertaintyModel, kind: ParamKind) -> UncertaintyModel {
    let params: Vec<Parameter> = um.parameters.iter().filter(|p| p.kind == kind).cloned().collect();
    UncertaintyModel::new(params).with_budgets(um.gamma, um.gamma_c, um.gamma_rhs)
}

fn solve(lp: &TwoStageLp, art: &BuildArtifacts, label: &str, eval: &EvalOptions) -> Result<SolveResult, CaseError> {
    solve_artifacts(lp, art, label, &eval.solver).map(|(r, _)| r)
}

/// Run the cross-method suite over the downside parameters of `um`.
pub fn run_verify(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    opts: &VerifyOptions,
    eval: &EvalOptions,
) -> Result<VerifyReport, CaseError> {
    let um = um.downside();
    let mut rep = VerifyReport::default();
    let tol = 1e-6;
    let tight = 1e-7;

    let det_art = build_deterministic(lp)?;
    let det_res = solve(lp, &det_art, "det", eval)?;
    let det = det_res.objective;
    rep.checks.push(Check {
        name: "lp certificate det".into(),
        reference: 0.0,
        candidate: det_res.duality_gap,
        residual: if det_res.certifies(&eval.solver) {
            0.0
        } else {
            f64::INFINITY
        },
        tolerance: 0.0,
        gating: true,
    });

    let aro0 = build_scenario_aro(lp, &um, &ScenarioSet::nominal(um.len()))?;
    rep.equal(
        "aro gamma=0 vs det",
        det,
        solve(lp, &aro0, "aro_g0", eval)?.objective,
        tight,
        true,
    );

    for gamma in 1..=opts.max_gamma.min(um.len()) {
        let set = ScenarioSet::over_all(&um, gamma, SupportRule::Exact)?;
        let art = build_scenario_aro(lp, &um, &set)?;
        let res = solve(lp, &art, "aro", eval)?;
        rep.ordered(format!("det <= aro gamma={gamma}"), det, res.objective, tight);
        let ccg = ccg_solve(lp, &um, &set, 1e-9, opts.ccg_max_iter, eval)?;
        rep.equal(
            format!("ccg vs aro gamma={gamma}"),
            res.objective,
            ccg.objective,
            tol,
            true,
        );
        let portfolio = art.portfolio(lp, &res, "aro");
        let cert = brute_force_worst_case(lp, &um, &portfolio, &set, eval)?;
        let t = art.epigraph(&res).expect("scenario LP has an epigraph");
        rep.equal(
            format!("brute force vs epigraph gamma={gamma}"),
            t,
            cert.value,
            tight,
            true,
        );
        let again = inner_recourse_value(lp, &um, &portfolio, &cert.u_star, &eval.solver)?;
        rep.equal(
            format!("certificate re-solve gamma={gamma}"),
            cert.value,
            again.cost,
            1e-8,
            true,
        );
    }

    let n_cost = um.count(ParamKind::Cost);
    let n_rhs = um.count(ParamKind::Rhs);
    if n_cost > 0 {
        let gc = opts.gamma_c.min(n_cost);
        let cost_um = restrict(&um, ParamKind::Cost).with_budgets(0, gc as f64, 0);
        let dual = solve(lp, &build_cost_dualized(lp, &cost_um)?, "cost-dual", eval)?.objective;
        let nominal = ScenarioSet::nominal(cost_um.len());
        let ball = ccg_l1_solve(lp, &cost_um, &nominal, 1e-9, opts.ccg_max_iter, eval)?;
        rep.equal(
            format!("cost-dual vs l1 ccg gamma_c={gc}"),
            ball.objective,
            dual,
            tol,
            true,
        );
        let vertices = ScenarioSet::over_all(&cost_um, gc, SupportRule::Exact)?;
        let vert = solve(lp, &build_scenario_aro(lp, &cost_um, &vertices)?, "cost-vertices", eval)?.objective;
        rep.equal(
            format!("cost-dual vs cost vertices gamma_c={gc}"),
            vert,
            dual,
            tol,
            false,
        );
        rep.ordered(format!("cost vertices <= cost-dual gamma_c={gc}"), vert, dual, tight);
    }
    if n_cost > 0 && n_rhs > 0 {
        let gr = opts.gamma_rhs.min(n_rhs);
        let gc = opts.gamma_c.min(n_cost);
        let split_um = um.clone().with_budgets(0, gc as f64, gr);
        let rhs_set = ScenarioSet::over_kind(&split_um, ParamKind::Rhs, gr, SupportRule::Exact)?;
        let split = solve(lp, &build_split_budget(lp, &split_um, &rhs_set)?, "split", eval)?.objective;
        let ball = ccg_l1_solve(lp, &split_um, &rhs_set, 1e-9, opts.ccg_max_iter, eval)?;
        rep.equal(format!("split vs l1 ccg ({gr},{gc})"), ball.objective, split, tol, true);
        let alone = build_scenarios_alone(lp, &split_um, gr, gc, SupportRule::Exact)?;
        let alone = solve(lp, &alone, "alone", eval)?.objective;
        rep.equal(
            format!("split vs scenarios alone ({gr},{gc})"),
            alone,
            split,
            tol,
            false,
        );
        rep.ordered(format!("det <= split ({gr},{gc})"), det, split, tight);
        rep.ordered(format!("scenarios alone <= split ({gr},{gc})"), alone, split, tight);

        let no_cost = um.clone().with_budgets(0, 0.0, gr);
        let split0 = solve(lp, &build_split_budget(lp, &no_cost, &rhs_set)?, "split_c0", eval)?.objective;
        let rhs_um = restrict(&um, ParamKind::Rhs);
        let rhs_only = ScenarioSet::over_all(&rhs_um, gr, SupportRule::Exact)?;
        let aro_rhs = solve(lp, &build_scenario_aro(lp, &rhs_um, &rhs_only)?, "aro_rhs", eval)?.objective;
        rep.equal(
            format!("split gamma_c=0 vs rhs aro gamma_rhs={gr}"),
            aro_rhs,
            split0,
            tight,
            true,
        );

        let nominal = ScenarioSet::nominal(um.len());
        let cost_budget = um.clone().with_budgets(0, gc as f64, 0);
        let split_r0 = solve(lp, &build_split_budget(lp, &cost_budget, &nominal)?, "split_r0", eval)?.objective;
        let cost_um = restrict(&um, ParamKind::Cost).with_budgets(0, gc as f64, 0);
        let dual = solve(lp, &build_cost_dualized(lp, &cost_um)?, "cost-dual", eval)?.objective;
        rep.equal(
            format!("split gamma_rhs=0 vs cost-dual gamma_c={gc}"),
            dual,
            split_r0,
            tight,
            true,
        );
    }
    Ok(rep)
}

/// Solve `art` through the LP text export and an independent reader.
#[cfg(feature = "highs")]
pub fn export_round_trip(art: &BuildArtifacts, opts: &crate::lp::SolverOptions) -> Result<(f64, f64), CaseError> {
    use crate::lp;
    let internal = lp::solve(&art.lp, opts).map_err(crate::oracle::OracleError::from)?;
    let dir = tempfile::tempdir().map_err(|e| crate::oracle::OracleError::from(lp::LpError::from(e)))?;
    let path = dir.path().join("model.lp");
    std::fs::write(&path, lp::export_lp(&art.lp))
        .map_err(|e| crate::oracle::OracleError::from(lp::LpError::from(e)))?;
    let external = lp::highs::solve_lp_file(&path, opts).map_err(crate::oracle::OracleError::from)?;
    Ok((internal.objective, external.objective))
}
