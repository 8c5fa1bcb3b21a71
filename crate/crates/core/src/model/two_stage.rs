//! Block two-stage LP and compilation from a [`SystemSpec`].
//!
//! Stage-2 rows read `coeffs · v2 (sense) rhs + link · v1`, so the link terms
//! form the matrix that carries first-stage capacity into the second stage.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::system::{validate_system, SystemSpec};
use super::ModelError;
use crate::lp::Sense;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColKind {
    Investment,
    Operation,
    Slack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColKind,
    pub cost: f64,
    /// Free columns have no lower bound; everything else is nonnegative.
    pub free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    /// First-stage columns moved to the right-hand side (stage-2 rows only).
    #[serde(default)]
    pub link: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageLp {
    pub name: String,
    pub first: Vec<Column>,
    pub second: Vec<Column>,
    pub first_rows: Vec<Constraint>,
    pub second_rows: Vec<Constraint>,
    /// Constant cost, e.g. first-stage cost folded in by [`fix_first_stage`].
    pub offset: f64,
    /// Stage-2 non-served energy columns with the hours each MW stands for.
    pub slack_hours: Vec<(usize, f64)>,
}

impl TwoStageLp {
    pub fn first_costs(&self) -> Vec<f64> {
        self.first.iter().map(|c| c.cost).collect()
    }

    pub fn second_costs(&self) -> Vec<f64> {
        self.second.iter().map(|c| c.cost).collect()
    }

    pub fn second_rhs(&self) -> Vec<f64> {
        self.second_rows.iter().map(|r| r.rhs).collect()
    }

    pub fn slack_indices(&self) -> Vec<usize> {
        self.slack_hours.iter().map(|&(j, _)| j).collect()
    }

    pub fn first_stage_cost(&self, values: &[f64]) -> f64 {
        self.first.iter().zip(values).map(|(c, v)| c.cost * v).sum()
    }

    /// Dimension and reference checks.
    pub fn check(&self) -> Result<(), ModelError> {
        let (n1, n2) = (self.first.len(), self.second.len());
        for r in &self.first_rows {
            if r.coeffs.iter().any(|&(j, _)| j >= n1) || !r.link.is_empty() {
                return Err(ModelError::Dimension(format!("first-stage row {}", r.name)));
            }
        }
        for r in &self.second_rows {
            if r.coeffs.iter().any(|&(j, _)| j >= n2) || r.link.iter().any(|&(j, _)| j >= n1) {
                return Err(ModelError::Dimension(format!("second-stage row {}", r.name)));
            }
        }
        if self
            .slack_hours
            .iter()
            .any(|&(j, _)| j >= n2 || self.second[j].kind != ColKind::Slack)
        {
            return Err(ModelError::Dimension("slack index".into()));
        }
        Ok(())
    }
}

/// First-stage decisions held fixed for stress testing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Portfolio {
    pub label: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
    pub first_stage_cost: f64,
    /// Formulation and budgets that produced the portfolio.
    pub source: String,
}

impl Portfolio {
    pub fn new(lp: &TwoStageLp, label: &str, source: &str, values: Vec<f64>) -> Portfolio {
        Portfolio {
            label: label.to_string(),
            names: lp.first.iter().map(|c| c.name.clone()).collect(),
            first_stage_cost: lp.first_stage_cost(&values),
            values,
            source: source.to_string(),
        }
    }

    /// Zero first-stage decisions.
    pub fn empty(lp: &TwoStageLp) -> Portfolio {
        Portfolio::new(lp, "empty", "none", vec![0.0; lp.first.len()])
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|j| self.values[j])
    }
}

/// Second-stage-only problem with `C x1` folded into the rhs and the
/// first-stage cost recorded as a constant.
pub fn fix_first_stage(lp: &TwoStageLp, portfolio: &Portfolio) -> Result<TwoStageLp, ModelError> {
    let x = &portfolio.values;
    if x.len() != lp.first.len() {
        return Err(ModelError::Dimension(format!(
            "portfolio has {} values for {} first-stage columns",
            x.len(),
            lp.first.len()
        )));
    }
    let mut out = lp.clone();
    out.offset = lp.offset + lp.first_stage_cost(x);
    out.first.clear();
    out.first_rows.clear();
    for r in &mut out.second_rows {
        r.rhs += r.link.iter().map(|&(j, a)| a * x[j]).sum::<f64>();
        r.link.clear();
    }
    Ok(out)
}

/// Index tables produced alongside the compiled LP; used to attach uncertainty.
#[derive(Debug, Clone, Default)]
pub(crate) struct Layout {
    /// Per tech: stage-2 build column.
    pub x2: HashMap<usize, usize>,
    /// Per tech: stage-2 retained capacity column.
    pub r2: HashMap<usize, usize>,
    /// Per tech: stage-2 build limit row.
    pub build_row2: HashMap<usize, usize>,
    /// Per tech and slice: stage-2 dispatch column (discharge for storage).
    pub dispatch2: HashMap<(usize, usize), usize>,
    /// Per tech and slice: stage-2 charge column.
    pub charge2: HashMap<(usize, usize), usize>,
    /// Per fixed tech and slice: stage-2 rows whose rhs scales with capacity, with the scale.
    pub fixed_rows2: HashMap<(usize, usize), Vec<(usize, f64)>>,
    /// Per zone and slice: stage-2 balance row.
    pub balance2: HashMap<(usize, usize), usize>,
}

pub fn compile_system(spec: &SystemSpec) -> Result<TwoStageLp, ModelError> {
    compile_with_layout(spec).map(|(lp, _)| lp)
}

struct StageBuilder {
    cols: Vec<Column>,
    rows: Vec<Constraint>,
}

impl StageBuilder {
    fn col(&mut self, name: String, kind: ColKind, cost: f64, free: bool) -> usize {
        self.cols.push(Column { name, kind, cost, free });
        self.cols.len() - 1
    }

    fn row(
        &mut self,
        name: String,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
        link: Vec<(usize, f64)>,
    ) -> usize {
        let coeffs = coeffs.into_iter().filter(|&(_, a)| a != 0.0).collect();
        let link = link.into_iter().filter(|&(_, a)| a != 0.0).collect();
        self.rows.push(Constraint {
            name,
            coeffs,
            sense,
            rhs,
            link,
        });
        self.rows.len() - 1
    }
}

pub(crate) fn compile_with_layout(spec: &SystemSpec) -> Result<(TwoStageLp, Layout), ModelError> {
    let violations = validate_system(spec);
    if !violations.is_empty() {
        return Err(ModelError::Invalid(violations));
    }
    let techs = &spec.technologies;
    let slices = &spec.time_slices;
    let zones = &spec.zones;
    let (w1, w2) = (spec.stages[0].weight, spec.stages[1].weight);
    let mut layout = Layout::default();

    // Variable order: investments, operations, slacks; stage 1 then stage 2.
    let mut s1 = StageBuilder {
        cols: vec![],
        rows: vec![],
    };
    let mut x1 = HashMap::new();
    for (k, t) in techs.iter().enumerate().filter(|(_, t)| t.buildable) {
        let cost = (w1 + w2) * t.capex_per_mw[0] + w1 * t.fom_per_mw_yr;
        x1.insert(
            k,
            s1.col(format!("build1_{}", t.name), ColKind::Investment, cost, false),
        );
    }
    let mut tx = Vec::new();
    for c in &spec.transmission {
        tx.push(s1.col(
            format!("tx_{}", c.name),
            ColKind::Investment,
            (w1 + w2) * c.capex_per_mw,
            false,
        ));
    }

    let mut s2 = StageBuilder {
        cols: vec![],
        rows: vec![],
    };
    let mut x2 = HashMap::new();
    let mut r2 = HashMap::new();
    for (k, t) in techs.iter().enumerate().filter(|(_, t)| t.buildable) {
        let cost = w2 * (t.capex_per_mw[1] + t.fom_per_mw_yr);
        x2.insert(
            k,
            s2.col(format!("build2_{}", t.name), ColKind::Investment, cost, false),
        );
    }
    for (k, t) in techs.iter().enumerate().filter(|(_, t)| t.buildable) {
        r2.insert(
            k,
            s2.col(
                format!("keep2_{}", t.name),
                ColKind::Investment,
                w2 * t.fom_per_mw_yr,
                false,
            ),
        );
    }

    // Build limits and retained capacity.
    for (k, t) in techs.iter().enumerate().filter(|(_, t)| t.buildable) {
        s1.row(
            format!("maxbuild1_{}", t.name),
            vec![(x1[&k], 1.0)],
            Sense::Le,
            t.max_build_mw[0],
            vec![],
        );
    }
    for (i, c) in spec.transmission.iter().enumerate() {
        s1.row(
            format!("maxtx_{}", c.name),
            vec![(tx[i], 1.0)],
            Sense::Le,
            c.max_mw,
            vec![],
        );
    }
    for (k, t) in techs.iter().enumerate().filter(|(_, t)| t.buildable) {
        let row = s2.row(
            format!("maxbuild2_{}", t.name),
            vec![(x2[&k], 1.0)],
            Sense::Le,
            t.max_build_mw[1],
            vec![],
        );
        layout.build_row2.insert(k, row);
        s2.row(
            format!("keep2_{}", t.name),
            vec![(r2[&k], 1.0)],
            Sense::Le,
            t.existing_mw[1],
            vec![(x1[&k], 1.0)],
        );
    }

    let mut slack_hours = Vec::new();
    for (stage, sb) in [(0usize, &mut s1), (1usize, &mut s2)] {
        let w = spec.stages[stage].weight;
        let tag = stage + 1;
        let mut injections: HashMap<(usize, usize), Vec<(usize, f64)>> = HashMap::new();
        let mut slack = Vec::new();
        let mut dispatch = HashMap::new();
        let mut charge = HashMap::new();
        let mut energy = HashMap::new();
        for (k, t) in techs.iter().enumerate() {
            let z = spec.zone_index(&t.zone).unwrap();
            for (s, sl) in slices.iter().enumerate() {
                let cost = w * sl.weight_hours * t.var_cost_per_mwh;
                let d = sb.col(format!("gen{tag}_{}_{s}", t.name), ColKind::Operation, cost, false);
                dispatch.insert((k, s), d);
                injections.entry((z, s)).or_default().push((d, 1.0));
                if t.storage.is_some() {
                    let ch = sb.col(format!("charge{tag}_{}_{s}", t.name), ColKind::Operation, cost, false);
                    let e = sb.col(format!("soc{tag}_{}_{s}", t.name), ColKind::Operation, 0.0, false);
                    charge.insert((k, s), ch);
                    energy.insert((k, s), e);
                    injections.entry((z, s)).or_default().push((ch, -1.0));
                }
            }
        }
        let mut flows = Vec::new();
        for c in &spec.transmission {
            let from = spec.zone_index(&c.from).unwrap();
            let to = spec.zone_index(&c.to).unwrap();
            for s in 0..slices.len() {
                let f = sb.col(format!("flow{tag}_{}_{s}", c.name), ColKind::Operation, 0.0, true);
                flows.push(f);
                injections.entry((from, s)).or_default().push((f, -1.0));
                injections.entry((to, s)).or_default().push((f, 1.0));
            }
        }
        for (z, zone) in zones.iter().enumerate() {
            for (s, sl) in slices.iter().enumerate() {
                let cost = w * sl.weight_hours * spec.voll;
                let u = sb.col(format!("unserved{tag}_{}_{s}", zone.name), ColKind::Slack, cost, false);
                slack.push(((z, s), u, sl.weight_hours));
            }
        }

        // Capacity expression for tech k in this stage: constant + columns (first-stage links in stage 2).
        for (k, t) in techs.iter().enumerate() {
            let existing = t.existing_mw[stage];
            let cap_cols: Vec<(usize, f64)> = match (t.buildable, stage) {
                (true, 0) => vec![(x1[&k], 1.0)],
                (true, _) => vec![(r2[&k], 1.0), (x2[&k], 1.0)],
                (false, _) => vec![],
            };
            let cap_const = if t.buildable && stage == 1 { 0.0 } else { existing };
            for (s, sl) in slices.iter().enumerate() {
                let a = t.availability[s];
                let mut rows_here = Vec::new();
                let mut limit = |sb: &mut StageBuilder, name: String, col: usize, factor: f64| {
                    let mut coeffs = vec![(col, 1.0)];
                    coeffs.extend(cap_cols.iter().map(|&(j, c)| (j, -factor * c)));
                    let row = sb.row(name, coeffs, Sense::Le, factor * cap_const, vec![]);
                    rows_here.push((row, factor));
                };
                limit(sb, format!("avail{tag}_{}_{s}", t.name), dispatch[&(k, s)], a);
                if let Some(st) = &t.storage {
                    limit(sb, format!("chargecap{tag}_{}_{s}", t.name), charge[&(k, s)], 1.0);
                    limit(
                        sb,
                        format!("soccap{tag}_{}_{s}", t.name),
                        energy[&(k, s)],
                        st.duration_h,
                    );
                    let prev = slices[..s]
                        .iter()
                        .rposition(|p| p.sequence == sl.sequence)
                        .or_else(|| slices.iter().rposition(|p| p.sequence == sl.sequence))
                        .unwrap();
                    let mut coeffs = vec![
                        (energy[&(k, s)], 1.0),
                        (charge[&(k, s)], -st.efficiency * sl.duration_h),
                        (dispatch[&(k, s)], sl.duration_h),
                    ];
                    if prev != s {
                        coeffs.push((energy[&(k, prev)], -1.0));
                    } else {
                        coeffs.retain(|&(j, _)| j != energy[&(k, s)]);
                    }
                    sb.row(format!("socbal{tag}_{}_{s}", t.name), coeffs, Sense::Eq, 0.0, vec![]);
                }
                if stage == 1 {
                    layout.dispatch2.insert((k, s), dispatch[&(k, s)]);
                    if let Some(&ch) = charge.get(&(k, s)) {
                        layout.charge2.insert((k, s), ch);
                    }
                    if !t.buildable {
                        layout.fixed_rows2.insert((k, s), rows_here);
                    }
                }
            }
        }
        for (i, c) in spec.transmission.iter().enumerate() {
            for s in 0..slices.len() {
                let f = flows[i * slices.len() + s];
                let (coeffs_tx, link) = if stage == 0 {
                    (vec![(tx[i], -1.0)], vec![])
                } else {
                    (vec![], vec![(tx[i], 1.0)])
                };
                let mut up = vec![(f, 1.0)];
                up.extend(coeffs_tx.iter().copied());
                sb.row(
                    format!("flowmax{tag}_{}_{s}", c.name),
                    up,
                    Sense::Le,
                    c.existing_mw,
                    link.clone(),
                );
                let mut down = vec![(f, -1.0)];
                down.extend(coeffs_tx.iter().copied());
                sb.row(
                    format!("flowmin{tag}_{}_{s}", c.name),
                    down,
                    Sense::Le,
                    c.existing_mw,
                    link,
                );
            }
        }
        let scale = spec.stages[stage].demand_scale;
        for &((z, s), u, _) in &slack {
            let mut coeffs = injections.remove(&(z, s)).unwrap_or_default();
            coeffs.push((u, 1.0));
            let rhs = scale * slices[s].demand_mw[z];
            let row = sb.row(
                format!("balance{tag}_{}_{s}", zones[z].name),
                coeffs,
                Sense::Ge,
                rhs,
                vec![],
            );
            if stage == 1 {
                layout.balance2.insert((z, s), row);
            }
        }
        if stage == 1 {
            slack_hours = slack.iter().map(|&(_, u, h)| (u, h)).collect();
        }
    }
    layout.x2 = x2;
    layout.r2 = r2;
    let lp = TwoStageLp {
        name: spec.name.clone(),
        first: s1.cols,
        second: s2.cols,
        first_rows: s1.rows,
        second_rows: s2.rows,
        offset: 0.0,
        slack_hours,
    };
    lp.check()?;
    Ok((lp, layout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulations::build_deterministic;
    use crate::lp::{solve, SolverOptions};
    use crate::model::two_zone;

    fn one_zone(demand: f64, availability: f64) -> SystemSpec {
        let mut s = two_zone();
        s.zones.truncate(1);
        s.transmission.clear();
        s.time_slices[0].demand_mw = vec![demand];
        s.technologies[0].availability = vec![availability];
        s
    }

    fn solve_det(lp: &TwoStageLp) -> (f64, impl Fn(&str) -> f64) {
        let art = build_deterministic(lp).unwrap();
        let res = solve(&art.lp, &SolverOptions::default()).unwrap();
        assert!(res.is_optimal());
        let names = art.lp.col_names.clone();
        let x = res.primal.clone();
        (res.objective, move |n: &str| {
            x[names.iter().position(|c| c == n).unwrap()]
        })
    }

    #[test]
    fn single_zone_builds_demand_over_availability() {
        let lp = compile_system(&one_zone(10.0, 0.8)).unwrap();
        let (obj, x) = solve_det(&lp);
        assert!((x("build1_gas") - 12.5).abs() < 1e-8);
        assert!((x("keep2_gas") - 12.5).abs() < 1e-8);
        assert!(x("build2_gas").abs() < 1e-8);
        // capex over both stages, fom in both, 10 MWh per stage at 20.
        let expected = 12.5 * (2.0 * 10.0 + 1.0) + 12.5 * 1.0 + 2.0 * 10.0 * 20.0;
        assert!((obj - expected).abs() < 1e-8 * expected, "{obj} vs {expected}");
    }

    #[test]
    fn zero_demand_costs_nothing() {
        let lp = compile_system(&one_zone(0.0, 0.8)).unwrap();
        let (obj, x) = solve_det(&lp);
        assert!(obj.abs() < 1e-9);
        assert!(x("build1_gas").abs() < 1e-9 && x("build2_gas").abs() < 1e-9);
    }

    #[test]
    fn build_limit_leaves_the_rest_to_slack() {
        let mut s = one_zone(10.0, 0.6);
        s.technologies[0].max_build_mw = [5.0, 0.0];
        let lp = compile_system(&s).unwrap();
        let (_, x) = solve_det(&lp);
        for tag in [1, 2] {
            assert!((x(&format!("gen{tag}_gas_0")) - 3.0).abs() < 1e-8);
            assert!((x(&format!("unserved{tag}_a_0")) - 7.0).abs() < 1e-8);
        }
        assert_eq!(lp.slack_hours.len(), 1);
    }

    #[test]
    fn folding_zero_keeps_the_rhs() {
        let lp = compile_system(&two_zone()).unwrap();
        let folded = fix_first_stage(&lp, &Portfolio::empty(&lp)).unwrap();
        assert_eq!(folded.offset, 0.0);
        assert_eq!(folded.second_rhs(), lp.second_rhs());
        assert!(folded.first.is_empty() && folded.second_rows.iter().all(|r| r.link.is_empty()));
        let bad = Portfolio::new(&lp, "bad", "none", vec![0.0]);
        assert!(fix_first_stage(&lp, &bad).is_err());
    }

    #[test]
    fn folding_the_optimum_recovers_the_objective() {
        let lp = compile_system(&two_zone()).unwrap();
        let art = build_deterministic(&lp).unwrap();
        let res = solve(&art.lp, &SolverOptions::default()).unwrap();
        let folded = fix_first_stage(&lp, &art.portfolio(&lp, &res, "det")).unwrap();
        let (obj, _) = solve_det(&folded);
        assert!((obj - res.objective).abs() < 1e-8 * res.objective.abs());
    }

    #[test]
    fn compilation_is_deterministic() {
        let s = two_zone();
        assert_eq!(compile_system(&s).unwrap(), compile_system(&s).unwrap());
    }
}
