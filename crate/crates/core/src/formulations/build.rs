//! Builders from `(TwoStageLp, UncertaintyModel)` to a flat LP.

use serde::{Deserialize, Serialize};

use super::scenarios::{ScenarioSet, SupportRule};
use super::FormulationError;
use crate::lp::{Bounds, LpBuilder, LpInstance, Sense, SolveResult};
use crate::model::{apply_u, Direction, ParamKind, Portfolio, TwoStageLp, UncertaintyModel};

/// Column and row locations of one stage-2 copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBlock {
    pub label: String,
    pub u: Vec<f64>,
    pub second: Vec<usize>,
    pub epigraph_row: Option<usize>,
    /// Budget multiplier of the cost dual.
    pub p: Option<usize>,
    /// Per cost parameter multipliers of the cost dual.
    pub q: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexMap {
    pub first: Vec<usize>,
    pub t: Option<usize>,
    pub blocks: Vec<ScenarioBlock>,
}

impl IndexMap {
    /// Every column index referenced, in map order.
    pub fn all_columns(&self) -> Vec<usize> {
        let mut cols = self.first.clone();
        cols.extend(self.t);
        for b in &self.blocks {
            cols.extend(&b.second);
            cols.extend(b.p);
            cols.extend(&b.q);
        }
        cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub formulation: String,
    pub scenarios: usize,
    pub rows: usize,
    pub cols: usize,
    pub nonzeros: usize,
    /// Row count predicted by the closed-form size formula.
    pub expected_rows: usize,
}

impl BuildStats {
    pub const CSV_HEADER: &'static str = "formulation,scenarios,rows,cols,nonzeros,expected_rows";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.formulation, self.scenarios, self.rows, self.cols, self.nonzeros, self.expected_rows
        )
    }
}

#[derive(Debug, Clone)]
pub struct BuildArtifacts {
    pub lp: LpInstance,
    pub index: IndexMap,
    pub stats: BuildStats,
}

impl BuildArtifacts {
    fn new(lp: LpInstance, index: IndexMap, formulation: &str, expected_rows: usize) -> BuildArtifacts {
        let stats = BuildStats {
            formulation: formulation.to_string(),
            scenarios: index.blocks.len(),
            rows: lp.num_rows(),
            cols: lp.num_cols(),
            nonzeros: lp.num_nonzeros(),
            expected_rows,
        };
        BuildArtifacts { lp, index, stats }
    }

    pub fn first_stage_values(&self, result: &SolveResult) -> Vec<f64> {
        self.index.first.iter().map(|&j| result.primal[j]).collect()
    }

    pub fn portfolio(&self, lp: &TwoStageLp, result: &SolveResult, label: &str) -> Portfolio {
        Portfolio::new(lp, label, &self.stats.formulation, self.first_stage_values(result))
    }

    pub fn epigraph(&self, result: &SolveResult) -> Option<f64> {
        self.index.t.map(|t| result.primal[t])
    }

    /// Activity of each epigraph row without the `-t` term.
    pub fn epigraph_activities(&self, result: &SolveResult) -> Vec<f64> {
        let t = self.index.t;
        self.index
            .blocks
            .iter()
            .filter_map(|b| b.epigraph_row)
            .map(|r| {
                self.lp.rows[r]
                    .coeffs
                    .iter()
                    .filter(|&&(j, _)| Some(j) != t)
                    .map(|&(j, a)| a * result.primal[j])
                    .sum()
            })
            .collect()
    }

    /// Scenario driving the worst case: the epigraph row with the largest
    /// multiplier, or with the largest activity when the backend reports no
    /// duals. Ties go to the lowest index.
    pub fn driver(&self, result: &SolveResult) -> Option<usize> {
        let rows: Vec<usize> = self.index.blocks.iter().filter_map(|b| b.epigraph_row).collect();
        let weights: Vec<f64> = if result.dual.len() == self.lp.num_rows() {
            // Epigraph rows are `<=`, so binding ones carry nonpositive duals.
            rows.iter().map(|&r| -result.dual[r]).collect()
        } else {
            vec![]
        };
        let scores = if weights.iter().any(|&w| w > 0.0) {
            weights
        } else {
            self.epigraph_activities(result)
        };
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-9 * (1.0 + best.abs());
        scores.iter().position(|&a| a >= best - tol)
    }
}

fn add_first_stage(b: &mut LpBuilder, lp: &TwoStageLp, priced: bool) -> Vec<usize> {
    let cols: Vec<usize> = lp
        .first
        .iter()
        .map(|c| {
            let bounds = if c.free { Bounds::FREE } else { Bounds::NONNEG };
            b.add_col(c.name.clone(), if priced { c.cost } else { 0.0 }, bounds)
        })
        .collect();
    for r in &lp.first_rows {
        b.add_row(
            r.name.clone(),
            r.coeffs.iter().map(|&(j, a)| (cols[j], a)),
            r.sense,
            r.rhs,
        );
    }
    cols
}

/// One copy of the stage-2 block with the given rhs; returns its columns.
fn add_second_stage(
    b: &mut LpBuilder,
    lp: &TwoStageLp,
    first: &[usize],
    costs: Option<&[f64]>,
    rhs: &[f64],
    suffix: &str,
) -> Vec<usize> {
    let cols: Vec<usize> = lp
        .second
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let bounds = if c.free { Bounds::FREE } else { Bounds::NONNEG };
            b.add_col(format!("{}{suffix}", c.name), costs.map_or(0.0, |cs| cs[j]), bounds)
        })
        .collect();
    for (r, &g) in lp.second_rows.iter().zip(rhs) {
        let coeffs = r
            .coeffs
            .iter()
            .map(|&(j, a)| (cols[j], a))
            .chain(r.link.iter().map(|&(j, a)| (first[j], -a)));
        b.add_row(format!("{}{suffix}", r.name), coeffs, r.sense, g);
    }
    cols
}

/// Dual rows of the cost budget: `±Σ ĉ x - p - q_j <= 0` per cost parameter.
fn add_cost_dual(b: &mut LpBuilder, um: &UncertaintyModel, second: &[usize], suffix: &str) -> (usize, Vec<usize>) {
    let p = b.add_col(format!("budget_p{suffix}"), 0.0, Bounds::NONNEG);
    let mut q = Vec::new();
    for param in um.parameters.iter().filter(|p| p.kind == ParamKind::Cost) {
        let qj = b.add_col(format!("budget_q_{}{suffix}", param.name), 0.0, Bounds::NONNEG);
        q.push(qj);
        let signs: &[f64] = match param.direction {
            Direction::OneSided => &[1.0],
            Direction::TwoSided => &[1.0, -1.0],
        };
        for (k, &sign) in signs.iter().enumerate() {
            let coeffs = param
                .entries
                .iter()
                .map(|&(j, d)| (second[j], sign * d))
                .chain([(p, -1.0), (qj, -1.0)]);
            let tag = if k == 0 { "" } else { "_neg" };
            b.add_row(format!("costdual_{}{tag}{suffix}", param.name), coeffs, Sense::Le, 0.0);
        }
    }
    (p, q)
}

fn cost_dual_rows(um: &UncertaintyModel) -> usize {
    um.parameters
        .iter()
        .filter(|p| p.kind == ParamKind::Cost)
        .map(|p| match p.direction {
            Direction::OneSided => 1,
            Direction::TwoSided => 2,
        })
        .sum()
}

fn check_inputs(lp: &TwoStageLp, um: &UncertaintyModel) -> Result<(), FormulationError> {
    lp.check()?;
    for p in &um.parameters {
        let bound = match p.kind {
            ParamKind::Cost => lp.second.len(),
            ParamKind::Rhs => lp.second_rows.len(),
        };
        if p.entries.iter().any(|&(i, _)| i >= bound) {
            return Err(FormulationError::Mismatch(format!(
                "parameter {} indexes past the model",
                p.name
            )));
        }
    }
    Ok(())
}

fn suffix(i: usize) -> String {
    format!("_s{i}")
}

/// Joint LP over both stages with nominal data.
pub fn build_deterministic(lp: &TwoStageLp) -> Result<BuildArtifacts, FormulationError> {
    lp.check()?;
    let mut b = LpBuilder::new();
    b.add_offset(lp.offset);
    let first = add_first_stage(&mut b, lp, true);
    let costs = lp.second_costs();
    let second = add_second_stage(&mut b, lp, &first, Some(&costs), &lp.second_rhs(), "");
    let block = ScenarioBlock {
        label: "nominal".into(),
        u: vec![],
        second,
        epigraph_row: None,
        p: None,
        q: vec![],
    };
    let expected = lp.first_rows.len() + lp.second_rows.len();
    let index = IndexMap {
        first,
        t: None,
        blocks: vec![block],
    };
    Ok(BuildArtifacts::new(b.build(), index, "det", expected))
}

/// Epigraph LP over an explicit scenario list; each scenario gets its own stage-2 copy.
pub fn build_scenario_aro(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    scenarios: &ScenarioSet,
) -> Result<BuildArtifacts, FormulationError> {
    check_inputs(lp, um)?;
    if scenarios.is_empty() {
        return Err(FormulationError::EmptyScenarios);
    }
    let mut b = LpBuilder::new();
    b.add_offset(lp.offset);
    let first = add_first_stage(&mut b, lp, true);
    let t = b.add_col("epigraph_t", 1.0, Bounds::FREE);
    let mut blocks = Vec::new();
    for (i, (u, label)) in scenarios.vertices.iter().zip(&scenarios.labels).enumerate() {
        let real = apply_u(lp, um, u)?;
        let sfx = suffix(i);
        let second = add_second_stage(&mut b, lp, &first, None, &real.rhs, &sfx);
        let coeffs = second.iter().zip(&real.costs).map(|(&j, &c)| (j, c)).chain([(t, -1.0)]);
        let row = b.add_row(format!("epigraph{sfx}"), coeffs, Sense::Le, 0.0);
        blocks.push(ScenarioBlock {
            label: label.clone(),
            u: u.clone(),
            second,
            epigraph_row: Some(row),
            p: None,
            q: vec![],
        });
    }
    let expected = lp.first_rows.len() + scenarios.len() * (lp.second_rows.len() + 1);
    let index = IndexMap {
        first,
        t: Some(t),
        blocks,
    };
    Ok(BuildArtifacts::new(b.build(), index, "aro", expected))
}

fn reject_uncertain_free_columns(lp: &TwoStageLp, um: &UncertaintyModel) -> Result<(), FormulationError> {
    for p in um.parameters.iter().filter(|p| p.kind == ParamKind::Cost) {
        if let Some(&(j, _)) = p.entries.iter().find(|&&(j, _)| lp.second[j].free) {
            return Err(FormulationError::FreeCostColumn(lp.second[j].name.clone()));
        }
    }
    Ok(())
}

/// Cost-only model dualized into one LP with budget `um.gamma_c`.
pub fn build_cost_dualized(lp: &TwoStageLp, um: &UncertaintyModel) -> Result<BuildArtifacts, FormulationError> {
    check_inputs(lp, um)?;
    if let Some(p) = um
        .parameters
        .iter()
        .find(|p| p.kind == ParamKind::Rhs && !p.entries.is_empty())
    {
        return Err(FormulationError::RhsInCostModel(p.name.clone()));
    }
    reject_uncertain_free_columns(lp, um)?;
    let mut b = LpBuilder::new();
    b.add_offset(lp.offset);
    let first = add_first_stage(&mut b, lp, false);
    let t = b.add_col("epigraph_t", 1.0, Bounds::FREE);
    let second = add_second_stage(&mut b, lp, &first, None, &lp.second_rhs(), "");
    let (p, q) = add_cost_dual(&mut b, um, &second, "");
    let coeffs = lp
        .first
        .iter()
        .zip(&first)
        .map(|(c, &j)| (j, c.cost))
        .chain(lp.second.iter().zip(&second).map(|(c, &j)| (j, c.cost)))
        .chain([(p, um.gamma_c)])
        .chain(q.iter().map(|&j| (j, 1.0)))
        .chain([(t, -1.0)]);
    let row = b.add_row("epigraph", coeffs, Sense::Le, 0.0);
    let expected = lp.first_rows.len() + lp.second_rows.len() + 1 + cost_dual_rows(um);
    let block = ScenarioBlock {
        label: "nominal".into(),
        u: vec![0.0; um.len()],
        second,
        epigraph_row: Some(row),
        p: Some(p),
        q,
    };
    let index = IndexMap {
        first,
        t: Some(t),
        blocks: vec![block],
    };
    Ok(BuildArtifacts::new(b.build(), index, "cost-dual", expected))
}

/// Rhs scenarios enumerated explicitly, cost budget dualized inside each.
pub fn build_split_budget(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    rhs_scenarios: &ScenarioSet,
) -> Result<BuildArtifacts, FormulationError> {
    check_inputs(lp, um)?;
    if rhs_scenarios.is_empty() {
        return Err(FormulationError::EmptyScenarios);
    }
    reject_uncertain_free_columns(lp, um)?;
    let cost_params = um.indices_of(ParamKind::Cost);
    for (u, label) in rhs_scenarios.vertices.iter().zip(&rhs_scenarios.labels) {
        if u.len() != um.len() {
            return Err(FormulationError::Mismatch(format!("scenario {label} has wrong length")));
        }
        if cost_params.iter().any(|&j| u[j] != 0.0) {
            return Err(FormulationError::Overlap(label.clone()));
        }
    }
    let mut b = LpBuilder::new();
    b.add_offset(lp.offset);
    let first = add_first_stage(&mut b, lp, true);
    let t = b.add_col("epigraph_t", 1.0, Bounds::FREE);
    let nominal_costs = lp.second_costs();
    let mut blocks = Vec::new();
    for (i, (u, label)) in rhs_scenarios.vertices.iter().zip(&rhs_scenarios.labels).enumerate() {
        let real = apply_u(lp, um, u)?;
        let sfx = suffix(i);
        let second = add_second_stage(&mut b, lp, &first, None, &real.rhs, &sfx);
        let (p, q) = add_cost_dual(&mut b, um, &second, &sfx);
        let coeffs = second
            .iter()
            .zip(&nominal_costs)
            .map(|(&j, &c)| (j, c))
            .chain([(p, um.gamma_c)])
            .chain(q.iter().map(|&j| (j, 1.0)))
            .chain([(t, -1.0)]);
        let row = b.add_row(format!("epigraph{sfx}"), coeffs, Sense::Le, 0.0);
        blocks.push(ScenarioBlock {
            label: label.clone(),
            u: u.clone(),
            second,
            epigraph_row: Some(row),
            p: Some(p),
            q,
        });
    }
    let expected = lp.first_rows.len() + rhs_scenarios.len() * (lp.second_rows.len() + 1 + cost_dual_rows(um));
    let index = IndexMap {
        first,
        t: Some(t),
        blocks,
    };
    Ok(BuildArtifacts::new(b.build(), index, "split", expected))
}

/// Rhs vertices (`gamma_rhs`) crossed with cost vertices (`gamma_c`), as one scenario LP.
pub fn product_vertex_scenarios(
    um: &UncertaintyModel,
    gamma_rhs: usize,
    gamma_c: usize,
    rule: SupportRule,
) -> Result<ScenarioSet, FormulationError> {
    let rhs = ScenarioSet::over_kind(um, ParamKind::Rhs, gamma_rhs, rule)?;
    let cost = ScenarioSet::over_kind(um, ParamKind::Cost, gamma_c, rule)?;
    ScenarioSet::product(um, &rhs, &cost)
}

/// Split budget reproduced with scenarios alone: product vertices, then the scenario LP.
pub fn build_scenarios_alone(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    gamma_rhs: usize,
    gamma_c: usize,
    rule: SupportRule,
) -> Result<BuildArtifacts, FormulationError> {
    let set = product_vertex_scenarios(um, gamma_rhs, gamma_c, rule)?;
    let mut art = build_scenario_aro(lp, um, &set)?;
    art.stats.formulation = "scenarios-alone".into();
    Ok(art)
}

/// Default penalty: 100 times the largest nominal cost coefficient.
pub fn default_penalty(lp: &TwoStageLp) -> f64 {
    100.0
        * lp.first
            .iter()
            .chain(&lp.second)
            .map(|c| c.cost.abs())
            .fold(0.0, f64::max)
}

/// Rewrite rhs parameters as cost penalties and return the cost-only model.
///
/// A parameter whose entries all zero out a single-column `x <= x̄` row becomes
/// a penalty `M` on that column with the row kept at `x̄`. Any other rhs
/// parameter gets an auxiliary `z ∈ [0, 1]` with rhs `ḡ + d (1 - z)` and a
/// penalty `M` on `z`. Existing cost parameters are kept; the l1 budget of the
/// result is `um.gamma`.
pub fn penalty_transform(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    m: f64,
) -> Result<(TwoStageLp, UncertaintyModel), FormulationError> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(FormulationError::Penalty(m));
    }
    check_inputs(lp, um)?;
    let mut out = lp.clone();
    let mut params = Vec::new();
    for p in &um.parameters {
        if p.kind == ParamKind::Cost {
            params.push(p.clone());
            continue;
        }
        let column_form: Option<Vec<(usize, f64)>> = p
            .entries
            .iter()
            .map(|&(i, d)| {
                let r = &lp.second_rows[i];
                match (r.coeffs.as_slice(), r.sense, r.link.is_empty()) {
                    ([(j, a)], Sense::Le, true) if *a == 1.0 && r.rhs > 0.0 && d == -r.rhs => Some((*j, m)),
                    _ => None,
                }
            })
            .collect();
        let entries = match column_form {
            Some(e) if !e.is_empty() => e,
            _ => {
                let z = out.second.len();
                out.second.push(crate::model::Column {
                    name: format!("penalty_z_{}", p.name),
                    kind: crate::model::ColKind::Operation,
                    cost: 0.0,
                    free: false,
                });
                for &(i, d) in &p.entries {
                    let row = &mut out.second_rows[i];
                    row.coeffs.push((z, d));
                    row.rhs += d;
                }
                out.second_rows.push(crate::model::Constraint {
                    name: format!("penalty_zmax_{}", p.name),
                    coeffs: vec![(z, 1.0)],
                    sense: Sense::Le,
                    rhs: 1.0,
                    link: vec![],
                });
                vec![(z, m)]
            }
        };
        params.push(crate::model::Parameter {
            name: p.name.clone(),
            kind: ParamKind::Cost,
            direction: Direction::OneSided,
            role: p.role,
            entries: entries.into_iter().filter(|&(_, d)| d != 0.0).collect(),
        });
    }
    let um2 = UncertaintyModel {
        parameters: params,
        gamma: um.gamma,
        gamma_c: um.gamma as f64,
        gamma_rhs: 0,
    };
    Ok((out, um2))
}

/// Rhs uncertainty moved into the objective as penalties, then cost-dualized.
pub fn build_penalty_relaxation(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    m: f64,
) -> Result<BuildArtifacts, FormulationError> {
    let (lp2, um2) = penalty_transform(lp, um, m)?;
    let mut art = build_cost_dualized(&lp2, &um2)?;
    art.stats.formulation = "penalty".into();
    Ok(art)
}

/// Stage-2 LP at fixed first-stage values `x1` with realized costs and rhs.
pub fn build_recourse(lp: &TwoStageLp, x1: &[f64], costs: &[f64], rhs: &[f64]) -> LpInstance {
    let mut b = LpBuilder::new();
    let shifted: Vec<f64> = lp
        .second_rows
        .iter()
        .zip(rhs)
        .map(|(r, &g)| g + r.link.iter().map(|&(j, a)| a * x1[j]).sum::<f64>())
        .collect();
    let detached = TwoStageLp {
        second_rows: lp
            .second_rows
            .iter()
            .map(|r| crate::model::Constraint {
                link: vec![],
                ..r.clone()
            })
            .collect(),
        ..lp.clone()
    };
    add_second_stage(&mut b, &detached, &[], Some(costs), &shifted, "");
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casegen::{penalty_witness, random_case, ParamMix, RandomCaseOptions};
    use crate::lp::{solve, SolverOptions};
    use crate::model::compile_case;
    use crate::oracle::{ccg_l1_solve, rel_diff};
    use crate::par::EvalOptions;
    use crate::verify::restrict;

    fn case(seed: u64, mix: ParamMix) -> (TwoStageLp, UncertaintyModel) {
        let opts = RandomCaseOptions {
            mix,
            min_params: 2,
            ..Default::default()
        };
        compile_case(&random_case(seed, &opts)).unwrap()
    }

    fn obj(art: &BuildArtifacts) -> f64 {
        let r = solve(&art.lp, &SolverOptions::default()).unwrap();
        assert!(r.is_optimal(), "{:?}", r.status);
        r.objective
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!(rel_diff(a, b) <= tol, "{a} vs {b}");
    }

    #[test]
    fn sizes_match_the_closed_forms() {
        for seed in 0..20 {
            let (lp, um) = case(seed, ParamMix::Any);
            let arts = [
                build_deterministic(&lp).unwrap(),
                build_scenario_aro(&lp, &um, &ScenarioSet::over_all(&um, 1, SupportRule::Exact).unwrap()).unwrap(),
                build_split_budget(
                    &lp,
                    &um.clone().with_budgets(0, 1.0, 0),
                    &ScenarioSet::over_kind(&um, ParamKind::Rhs, um.count(ParamKind::Rhs).min(1), SupportRule::Exact)
                        .unwrap(),
                )
                .unwrap(),
            ];
            for art in &arts {
                assert_eq!(
                    art.stats.rows, art.stats.expected_rows,
                    "{seed} {}",
                    art.stats.formulation
                );
                let mut cols = art.index.all_columns();
                if let Some(t) = art.index.t {
                    cols.push(t);
                }
                cols.sort_unstable();
                cols.dedup();
                assert_eq!(
                    cols,
                    (0..art.lp.num_cols()).collect::<Vec<_>>(),
                    "{seed} {}",
                    art.stats.formulation
                );
            }
        }
    }

    #[test]
    fn nominal_scenario_is_deterministic() {
        for seed in 0..10 {
            let (lp, um) = case(seed, ParamMix::Any);
            let det = obj(&build_deterministic(&lp).unwrap());
            let aro = obj(&build_scenario_aro(&lp, &um, &ScenarioSet::nominal(um.len())).unwrap());
            assert_close(det, aro, 1e-7);
        }
    }

    #[test]
    fn cost_dual_degenerate_budgets() {
        for seed in 0..10 {
            let (lp, um) = case(seed, ParamMix::CostOnly);
            let det = obj(&build_deterministic(&lp).unwrap());
            assert_close(
                det,
                obj(&build_cost_dualized(&lp, &um.clone().with_budgets(0, 0.0, 0)).unwrap()),
                1e-7,
            );
            let all = um.len();
            let dual = obj(&build_cost_dualized(&lp, &um.clone().with_budgets(0, all as f64, 0)).unwrap());
            let worst = ScenarioSet {
                vertices: vec![vec![1.0; all]],
                labels: vec!["all".into()],
            };
            assert_close(dual, obj(&build_scenario_aro(&lp, &um, &worst).unwrap()), 1e-7);
        }
    }

    #[test]
    fn cost_dual_matches_the_ball_oracle_and_bounds_the_vertices() {
        let eval = EvalOptions::default();
        for seed in 0..10 {
            let (lp, um) = case(seed, ParamMix::CostOnly);
            let um = um.with_budgets(0, 1.0, 0);
            let dual = obj(&build_cost_dualized(&lp, &um).unwrap());
            let ball = ccg_l1_solve(&lp, &um, &ScenarioSet::nominal(um.len()), 1e-10, 200, &eval).unwrap();
            assert!(ball.converged);
            assert_close(dual, ball.objective, 1e-6);
            let vertices = ScenarioSet::over_all(&um, 1, SupportRule::Exact).unwrap();
            let vert = obj(&build_scenario_aro(&lp, &um, &vertices).unwrap());
            assert!(vert <= dual + 1e-7 * dual.abs().max(1.0), "{seed}: {vert} > {dual}");
        }
    }

    #[test]
    fn split_degenerate_budgets() {
        for seed in 0..15 {
            let (lp, um) = case(seed, ParamMix::Any);
            let (nc, nr) = (um.count(ParamKind::Cost), um.count(ParamKind::Rhs));
            if nc == 0 || nr == 0 {
                continue;
            }
            let rhs_set = ScenarioSet::over_kind(&um, ParamKind::Rhs, 1, SupportRule::Exact).unwrap();
            let split0 = obj(&build_split_budget(&lp, &um.clone().with_budgets(0, 0.0, 1), &rhs_set).unwrap());
            let rhs_um = restrict(&um, ParamKind::Rhs);
            let rhs_only = ScenarioSet::over_all(&rhs_um, 1, SupportRule::Exact).unwrap();
            assert_close(split0, obj(&build_scenario_aro(&lp, &rhs_um, &rhs_only).unwrap()), 1e-7);

            let cost_um = um.clone().with_budgets(0, 1.0, 0);
            let nominal = ScenarioSet::nominal(um.len());
            let split_r0 = obj(&build_split_budget(&lp, &cost_um, &nominal).unwrap());
            let dual = obj(&build_cost_dualized(&lp, &restrict(&um, ParamKind::Cost).with_budgets(0, 1.0, 0)).unwrap());
            assert_close(split_r0, dual, 1e-7);
        }
    }

    #[test]
    fn split_rejects_cost_moving_scenarios() {
        let (lp, um) = case(1, ParamMix::CostOnly);
        let set = ScenarioSet::over_all(&um, 1, SupportRule::Exact).unwrap();
        assert!(matches!(
            build_split_budget(&lp, &um, &set),
            Err(FormulationError::Overlap(_))
        ));
    }

    #[test]
    fn cost_on_free_column_is_rejected() {
        let (lp, mut um) = case(2, ParamMix::CostOnly);
        let j = lp.second.iter().position(|c| c.free);
        if let Some(j) = j {
            um.parameters[0].entries = vec![(j, 1.0)];
            assert!(matches!(
                build_cost_dualized(&lp, &um),
                Err(FormulationError::FreeCostColumn(_))
            ));
        }
    }

    #[test]
    fn penalty_witness_gap() {
        let (lp, um) = penalty_witness();
        let exact =
            obj(&build_scenario_aro(&lp, &um, &ScenarioSet::over_all(&um, 1, SupportRule::Exact).unwrap()).unwrap());
        assert_close(exact, 2.0, 1e-9);
        assert_close(obj(&build_deterministic(&lp).unwrap()), 1.0, 1e-9);
        assert_close(obj(&build_penalty_relaxation(&lp, &um, 0.0).unwrap()), 1.0, 1e-9);
        assert_close(obj(&build_penalty_relaxation(&lp, &um, 1.0).unwrap()), 2.0, 1e-9);
        let mut last = 0.0;
        for factor in [1.0, 10.0, 100.0, 1000.0] {
            let m = factor * 10.0;
            let v = obj(&build_penalty_relaxation(&lp, &um, m).unwrap());
            assert_close(v, 3.0, 1e-9);
            assert!(v >= last);
            last = v;
        }
        assert_eq!(default_penalty(&lp), 1000.0);
        assert!(build_penalty_relaxation(&lp, &um, -1.0).is_err());
    }

    #[test]
    fn penalty_with_zero_weight_is_deterministic() {
        for seed in 0..10 {
            let (lp, um) = case(seed, ParamMix::RhsOnly);
            let det = obj(&build_deterministic(&lp).unwrap());
            let pen = obj(&build_penalty_relaxation(&lp, &um.clone().with_budgets(1, 0.0, 0), 0.0).unwrap());
            assert_close(det, pen, 1e-7);
        }
    }

    #[test]
    fn driver_names_the_binding_scenario() {
        let (lp, um) = penalty_witness();
        let art = build_scenario_aro(&lp, &um, &ScenarioSet::over_all(&um, 1, SupportRule::Exact).unwrap()).unwrap();
        let res = solve(&art.lp, &SolverOptions::default()).unwrap();
        let d = art.driver(&res).unwrap();
        assert_eq!(art.index.blocks[d].label, "xa_out");
    }
}
