//! Fixed-portfolio evaluation across downside and upside realizations.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulations::{label_for, ScenarioSet};
use crate::model::{Portfolio, Role, TwoStageLp, UncertaintyModel};
use crate::oracle::{inner_recourse_value, OracleError};
use crate::par::{self, EvalOptions};
use crate::report::{csv_field, fmt_num, schema_line};

#[derive(Debug, Error)]
pub enum StressError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("report has no rows")]
    Empty,
    #[error("k = {k} exceeds the {n} parameters with role {role:?}")]
    TooManyDeviating { k: usize, n: usize, role: Role },
    #[error("portfolio file: {0}")]
    Io(String),
}

/// Realizations to evaluate, each a full `u` over the model's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationGrid {
    pub vertices: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl RealizationGrid {
    /// Nominal realization only.
    pub fn nominal(um: &UncertaintyModel) -> RealizationGrid {
        let set = ScenarioSet::nominal(um.len());
        RealizationGrid::from_scenarios(&set)
    }

    /// Every realization in which exactly `k` parameters of `role` sit at the
    /// end of their range, in lexicographic order of the deviating set.
    /// Two-sided parameters deviate to `+1`.
    pub fn k_at_a_time(
        um: &UncertaintyModel,
        role: Role,
        k: usize,
        include_nominal: bool,
    ) -> Result<RealizationGrid, StressError> {
        let members: Vec<usize> = (0..um.len()).filter(|&j| um.parameters[j].role == role).collect();
        if k > members.len() {
            return Err(StressError::TooManyDeviating {
                k,
                n: members.len(),
                role,
            });
        }
        let mut grid = RealizationGrid {
            vertices: vec![],
            labels: vec![],
        };
        if include_nominal && k > 0 {
            grid.push(vec![0.0; um.len()], "nominal".into());
        }
        for subset in members.iter().combinations(k) {
            let mut u = vec![0.0; um.len()];
            for &j in subset {
                u[j] = 1.0;
            }
            let label = label_for(um, &u);
            grid.push(u, label);
        }
        Ok(grid)
    }

    /// Grid over a formulation's own scenario set.
    pub fn from_scenarios(set: &ScenarioSet) -> RealizationGrid {
        RealizationGrid {
            vertices: set.vertices.clone(),
            labels: set.labels.clone(),
        }
    }

    /// Embed a grid built over a sub-model (e.g. `um.downside()`) into the
    /// full parameter space of `full`, matching parameters by name.
    pub fn embed(&self, sub: &UncertaintyModel, full: &UncertaintyModel) -> RealizationGrid {
        let map: Vec<usize> = sub
            .parameters
            .iter()
            .map(|p| {
                full.parameters
                    .iter()
                    .position(|q| q.name == p.name)
                    .expect("sub-model parameter exists in the full model")
            })
            .collect();
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                let mut u = vec![0.0; full.len()];
                for (k, &j) in map.iter().enumerate() {
                    u[j] = v[k];
                }
                u
            })
            .collect();
        RealizationGrid {
            vertices,
            labels: self.labels.clone(),
        }
    }

    pub fn push(&mut self, u: Vec<f64>, label: String) {
        self.vertices.push(u);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressRow {
    pub label: String,
    pub params: Vec<String>,
    pub cost: f64,
    pub cost_without_voll: f64,
    pub unserved_mwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    /// Linear interpolation between closest ranks, `h = (n - 1) p`.
    pub fn of(values: &[f64]) -> Option<Quartiles> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = (v.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        Some(Quartiles {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressSummary {
    pub cost: Quartiles,
    pub cost_without_voll: Quartiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressReport {
    pub portfolio: String,
    pub rows: Vec<StressRow>,
}

pub const STRESS_HEADER: &str = "portfolio,label,params,cost,cost_without_voll,unserved_mwh";
pub const SUMMARY_HEADER: &str = "portfolio,metric,min,q1,median,q3,max";

impl StressReport {
    /// Row with the largest cost; the first one on ties.
    pub fn worst(&self) -> Option<&StressRow> {
        self.rows.iter().reduce(|a, b| if b.cost > a.cost { b } else { a })
    }

    pub fn max_cost(&self) -> Option<f64> {
        self.worst().map(|r| r.cost)
    }

    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&self.portfolio),
                csv_field(&r.label),
                csv_field(&r.params.join("+")),
                fmt_num(r.cost),
                fmt_num(r.cost_without_voll),
                fmt_num(r.unserved_mwh)
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{}{STRESS_HEADER}\n{}", schema_line("stress"), self.csv_rows())
    }
}

pub fn summarize(report: &StressReport) -> Result<StressSummary, StressError> {
    let cost: Vec<f64> = report.rows.iter().map(|r| r.cost).collect();
    let without: Vec<f64> = report.rows.iter().map(|r| r.cost_without_voll).collect();
    Ok(StressSummary {
        cost: Quartiles::of(&cost).ok_or(StressError::Empty)?,
        cost_without_voll: Quartiles::of(&without).ok_or(StressError::Empty)?,
    })
}

pub fn summary_csv_rows(portfolio: &str, s: &StressSummary) -> String {
    let line = |metric: &str, q: &Quartiles| {
        format!(
            "{},{metric},{},{},{},{},{}\n",
            csv_field(portfolio),
            fmt_num(q.min),
            fmt_num(q.q1),
            fmt_num(q.median),
            fmt_num(q.q3),
            fmt_num(q.max)
        )
    };
    line("cost", &s.cost) + &line("cost_without_voll", &s.cost_without_voll)
}

/// Second-stage cost of `portfolio` at every realization of `grid`.
pub fn stress_test(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    portfolio: &Portfolio,
    grid: &RealizationGrid,
    eval: &EvalOptions,
) -> Result<StressReport, StressError> {
    let values = par::map(eval.exec, &grid.vertices, |u| {
        inner_recourse_value(lp, um, portfolio, u, &eval.solver)
    });
    let mut rows = Vec::with_capacity(grid.len());
    for ((u, label), v) in grid.vertices.iter().zip(&grid.labels).zip(values) {
        let v = v?;
        let params = um
            .parameters
            .iter()
            .zip(u)
            .filter(|(_, &x)| x != 0.0)
            .map(|(p, _)| p.name.clone())
            .collect();
        rows.push(StressRow {
            label: label.clone(),
            params,
            cost: v.cost,
            cost_without_voll: v.cost_without_voll,
            unserved_mwh: v.unserved_mwh,
        });
    }
    Ok(StressReport {
        portfolio: portfolio.label.clone(),
        rows,
    })
}

/// [`stress_test`] over a grid of upside parameters. The upside effects are
/// declared as favourable shifts at `u = 1`, so the evaluation is identical.
pub fn upside_test(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    portfolio: &Portfolio,
    upside: &RealizationGrid,
    eval: &EvalOptions,
) -> Result<StressReport, StressError> {
    stress_test(lp, um, portfolio, upside, eval)
}

pub fn read_portfolio(path: &std::path::Path) -> Result<Portfolio, StressError> {
    let text = std::fs::read_to_string(path).map_err(|e| StressError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| StressError::Io(format!("{}: {e}", path.display())))
}

pub fn write_portfolio(path: &std::path::Path, portfolio: &Portfolio) -> Result<(), StressError> {
    let text = serde_json::to_string_pretty(portfolio).expect("portfolio serializes");
    std::fs::write(path, text + "\n").map_err(|e| StressError::Io(format!("{}: {e}", path.display())))
}
