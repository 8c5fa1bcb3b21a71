//! Index-level uncertainty model attached to a [`TwoStageLp`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use super::system::Role;
use super::system::{Effect, SystemSpec};
use super::two_stage::{compile_with_layout, Layout, TwoStageLp};
use super::ModelError;
use crate::lp::Sense;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    /// Entries index stage-2 columns; magnitudes are cost deviations.
    Cost,
    /// Entries index stage-2 rows; magnitudes are rhs deviations.
    Rhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `u ∈ [0, 1]`; magnitudes carry the adverse (or favourable) sign.
    OneSided,
    /// `u ∈ [-1, 1]`.
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub kind: ParamKind,
    pub direction: Direction,
    pub role: Role,
    /// `(index, deviation at u = 1)`, indices sorted and unique.
    pub entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyModel {
    pub parameters: Vec<Parameter>,
    /// Combined cardinality budget.
    pub gamma: usize,
    /// Continuous cost budget.
    pub gamma_c: f64,
    /// Cardinality budget over rhs parameters.
    pub gamma_rhs: usize,
}

impl UncertaintyModel {
    pub fn new(parameters: Vec<Parameter>) -> UncertaintyModel {
        UncertaintyModel {
            parameters,
            gamma: 0,
            gamma_c: 0.0,
            gamma_rhs: 0,
        }
    }

    pub fn with_budgets(mut self, gamma: usize, gamma_c: f64, gamma_rhs: usize) -> UncertaintyModel {
        self.gamma = gamma;
        self.gamma_c = gamma_c;
        self.gamma_rhs = gamma_rhs;
        self
    }

    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.parameters.iter().map(|p| p.name.as_str()).collect()
    }

    /// Model restricted to parameters with the given role; budgets kept.
    pub fn with_role(&self, role: Role) -> UncertaintyModel {
        UncertaintyModel {
            parameters: self.parameters.iter().filter(|p| p.role == role).cloned().collect(),
            ..self.clone()
        }
    }

    pub fn downside(&self) -> UncertaintyModel {
        self.with_role(Role::Downside)
    }

    pub fn indices_of(&self, kind: ParamKind) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.parameters[j].kind == kind).collect()
    }

    pub fn count(&self, kind: ParamKind) -> usize {
        self.indices_of(kind).len()
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.parameters.iter().map(|p| p.direction).collect()
    }

    /// Budget and index checks against `lp`.
    pub fn check(&self, lp: &TwoStageLp) -> Result<(), ModelError> {
        let rhs = self.count(ParamKind::Rhs);
        if self.gamma_rhs > rhs {
            return Err(ModelError::Budget(format!(
                "gamma_rhs {} exceeds {rhs} rhs parameters",
                self.gamma_rhs
            )));
        }
        if self.gamma > self.len() {
            return Err(ModelError::Budget(format!(
                "gamma {} exceeds {} parameters",
                self.gamma,
                self.len()
            )));
        }
        if !(self.gamma_c.is_finite() && self.gamma_c >= 0.0) {
            return Err(ModelError::Budget(format!("gamma_c {} must be >= 0", self.gamma_c)));
        }
        for p in &self.parameters {
            let bound = match p.kind {
                ParamKind::Cost => lp.second.len(),
                ParamKind::Rhs => lp.second_rows.len(),
            };
            if p.entries.iter().any(|&(i, d)| i >= bound || !d.is_finite()) {
                return Err(ModelError::Dimension(format!("parameter {} entries", p.name)));
            }
        }
        Ok(())
    }
}

/// Compile the system and its declared uncertainty together.
pub fn compile_case(spec: &SystemSpec) -> Result<(TwoStageLp, UncertaintyModel), ModelError> {
    let (lp, layout) = compile_with_layout(spec)?;
    let um = compile_uncertainty(spec, &lp, &layout);
    um.check(&lp)?;
    let stuck = rows_pushed_below_zero(&lp, &um);
    if !stuck.is_empty() {
        return Err(ModelError::Invalid(stuck));
    }
    Ok((lp, um))
}

/// Stage-2 rows `a v <= b` with `a >= 0` over nonnegative columns and no
/// first-stage link go infeasible once `b < 0`. Report each row some joint
/// realization pushes there, since no slack or plan can absorb it.
fn rows_pushed_below_zero(lp: &TwoStageLp, um: &UncertaintyModel) -> Vec<String> {
    let mut floor = lp.second_rhs();
    for p in um.parameters.iter().filter(|p| p.kind == ParamKind::Rhs) {
        let lo = if p.direction == Direction::TwoSided { -1.0 } else { 0.0 };
        for &(i, d) in &p.entries {
            floor[i] += (d * lo).min(d);
        }
    }
    lp.second_rows
        .iter()
        .zip(&floor)
        .filter(|(r, &f)| {
            r.sense == Sense::Le
                && r.link.is_empty()
                && r.coeffs.iter().all(|&(j, a)| a >= 0.0 && !lp.second[j].free)
                && f < -1e-9 * r.rhs.abs().max(1.0)
        })
        .map(|(r, f)| format!("uncertainty can push row {} to rhs {f} with no recourse", r.name))
        .collect()
}

fn compile_uncertainty(spec: &SystemSpec, lp: &TwoStageLp, layout: &Layout) -> UncertaintyModel {
    let slices = spec.time_slices.len();
    let mut params = Vec::new();
    for p in &spec.uncertainty {
        let mut entries: BTreeMap<usize, f64> = BTreeMap::new();
        let mut add = |i: usize, d: f64| *entries.entry(i).or_insert(0.0) += d;
        let mut kind = ParamKind::Rhs;
        for e in &p.effects {
            let tech = |name: &String| spec.tech_index(name).expect("validated tech");
            match e {
                Effect::CapexScale { techs, scale } => {
                    kind = ParamKind::Cost;
                    let w2 = spec.stages[1].weight;
                    for t in techs {
                        let k = tech(t);
                        add(layout.x2[&k], scale * w2 * spec.technologies[k].capex_per_mw[1]);
                    }
                }
                Effect::VariableCostScale { techs, scale } => {
                    kind = ParamKind::Cost;
                    for t in techs {
                        let k = tech(t);
                        for s in 0..slices {
                            let col = layout.dispatch2[&(k, s)];
                            add(col, scale * lp.second[col].cost);
                            if let Some(&ch) = layout.charge2.get(&(k, s)) {
                                add(ch, scale * lp.second[ch].cost);
                            }
                        }
                    }
                }
                Effect::FixedCostScale { techs, scale } => {
                    kind = ParamKind::Cost;
                    let w2 = spec.stages[1].weight;
                    for t in techs {
                        let k = tech(t);
                        let fom = w2 * spec.technologies[k].fom_per_mw_yr;
                        if let (Some(&x2), Some(&r2)) = (layout.x2.get(&k), layout.r2.get(&k)) {
                            add(x2, scale * fom);
                            add(r2, scale * fom);
                        }
                    }
                }
                Effect::LoadScale { zones, scale } => {
                    for z in zones {
                        let z = spec.zone_index(z).expect("validated zone");
                        for s in 0..slices {
                            let row = layout.balance2[&(z, s)];
                            add(row, scale * lp.second_rows[row].rhs);
                        }
                    }
                }
                Effect::MaxBuildLimit { tech: t, limit_mw } => {
                    let row = layout.build_row2[&tech(t)];
                    let nominal = lp.second_rows[row].rhs;
                    add(row, limit_mw.min(nominal) - nominal);
                }
                Effect::MaxBuildAdd { tech: t, add_mw } => add(layout.build_row2[&tech(t)], *add_mw),
                Effect::AvailabilityScale {
                    tech: t,
                    scale,
                    slices: which,
                } => {
                    let k = tech(t);
                    let chosen: Vec<usize> = if which.is_empty() {
                        (0..slices).collect()
                    } else {
                        which.clone()
                    };
                    for s in chosen {
                        // First row of a fixed tech slice is its dispatch limit.
                        let (row, _) = layout.fixed_rows2[&(k, s)][0];
                        add(row, scale * lp.second_rows[row].rhs);
                    }
                }
                Effect::FixedCapacityAdd { tech: t, add_mw } => {
                    let k = tech(t);
                    for s in 0..slices {
                        for &(row, factor) in &layout.fixed_rows2[&(k, s)] {
                            add(row, factor * add_mw);
                        }
                    }
                }
            }
        }
        params.push(Parameter {
            name: p.name.clone(),
            kind,
            direction: if p.two_sided {
                Direction::TwoSided
            } else {
                Direction::OneSided
            },
            role: p.role,
            entries: entries.into_iter().filter(|&(_, d)| d != 0.0).collect(),
        });
    }
    UncertaintyModel::new(params)
}

/// Realized stage-2 costs and right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub costs: Vec<f64>,
    pub rhs: Vec<f64>,
}

/// Stage-2 costs and rhs at `u`: nominal plus deviation times `u` per parameter.
pub fn apply_u(lp: &TwoStageLp, um: &UncertaintyModel, u: &[f64]) -> Result<Realization, ModelError> {
    if u.len() != um.len() {
        return Err(ModelError::Dimension(format!(
            "u has {} entries for {} parameters",
            u.len(),
            um.len()
        )));
    }
    if u.iter().any(|v| !(v.abs() <= 1.0)) {
        return Err(ModelError::Dimension("u outside [-1, 1]".into()));
    }
    let mut costs = lp.second_costs();
    let mut rhs = lp.second_rhs();
    for (p, &uj) in um.parameters.iter().zip(u) {
        if uj == 0.0 {
            continue;
        }
        let target = match p.kind {
            ParamKind::Cost => &mut costs,
            ParamKind::Rhs => &mut rhs,
        };
        for &(i, d) in &p.entries {
            target[i] += d * uj;
        }
    }
    Ok(Realization { costs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casegen::{desk_case, DeskCaseOptions};
    use crate::model::ParamSpec;

    fn desk() -> (TwoStageLp, UncertaintyModel) {
        let (_, lp, um) = desk_case(&DeskCaseOptions::default()).unwrap();
        (lp, um)
    }

    fn unit(um: &UncertaintyModel, name: &str) -> Vec<f64> {
        um.parameters
            .iter()
            .map(|p| if p.name == name { 1.0 } else { 0.0 })
            .collect()
    }

    #[test]
    fn stacked_limits_that_empty_a_row_are_rejected() {
        let mut spec = crate::model::two_zone();
        let t = spec.technologies.iter().find(|t| t.buildable).unwrap().name.clone();
        let cut = |name: &str| ParamSpec {
            name: name.into(),
            role: Role::Downside,
            two_sided: false,
            effects: vec![Effect::MaxBuildLimit {
                tech: t.clone(),
                limit_mw: 0.0,
            }],
        };
        spec.uncertainty = vec![cut("a")];
        assert!(compile_case(&spec).is_ok());
        spec.uncertainty.push(cut("b"));
        match compile_case(&spec) {
            Err(ModelError::Invalid(v)) => assert!(v[0].contains("maxbuild2_"), "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_is_nominal() {
        let (lp, um) = desk();
        let r = apply_u(&lp, &um, &vec![0.0; um.len()]).unwrap();
        assert_eq!(r.costs, lp.second_costs());
        assert_eq!(r.rhs, lp.second_rhs());
    }

    #[test]
    fn gas_price_doubles_gas_dispatch_costs() {
        let (lp, um) = desk();
        let r = apply_u(&lp, &um, &unit(&um, "gas_price")).unwrap();
        let mut touched = 0;
        for (j, c) in lp.second.iter().enumerate() {
            if c.name.starts_with("gen2_gas_S_") {
                assert!((r.costs[j] - 2.0 * c.cost).abs() <= 1e-9 * c.cost);
                touched += 1;
            } else {
                assert_eq!(r.costs[j], c.cost, "{}", c.name);
            }
        }
        assert_eq!(touched, 48);
        assert_eq!(r.rhs, lp.second_rhs());
    }

    #[test]
    fn load_growth_scales_balance_rows() {
        let (lp, um) = desk();
        let r = apply_u(&lp, &um, &unit(&um, "load_growth")).unwrap();
        for (i, row) in lp.second_rows.iter().enumerate() {
            if row.name.starts_with("balance2_") {
                assert!(
                    (r.rhs[i] - 1.1 * row.rhs).abs() <= 1e-9 * row.rhs.abs().max(1.0),
                    "{}",
                    row.name
                );
            } else {
                assert_eq!(r.rhs[i], row.rhs, "{}", row.name);
            }
        }
    }

    #[test]
    fn out_of_range_u_is_rejected() {
        let (lp, um) = desk();
        let mut u = vec![0.0; um.len()];
        u[0] = 1.5;
        assert!(apply_u(&lp, &um, &u).is_err());
        assert!(apply_u(&lp, &um, &[0.0]).is_err());
        u[0] = f64::NAN;
        assert!(apply_u(&lp, &um, &u).is_err());
    }

    #[test]
    fn budgets_are_checked() {
        let (lp, um) = desk();
        assert!(um.clone().with_budgets(um.len() + 1, 0.0, 0).check(&lp).is_err());
        assert!(um.clone().with_budgets(0, -1.0, 0).check(&lp).is_err());
        assert!(um.clone().with_budgets(2, 1.0, 1).check(&lp).is_ok());
    }
}
