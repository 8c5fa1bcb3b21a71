//! Gamma sweep and formulation comparison over one case.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::CaseError;
use crate::formulations::{
    build_deterministic, build_scenario_aro, build_scenarios_alone, build_split_budget, BuildArtifacts, ScenarioSet,
    SupportRule,
};
use crate::lp::{self, SolveResult};
use crate::model::{ParamKind, Portfolio, TwoStageLp, UncertaintyModel};
use crate::oracle::OracleError;
use crate::par::{self, EvalOptions};
use crate::report::{csv_field, fmt_num, schema_line};

/// One solved formulation with the numbers every report needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solved {
    pub label: String,
    pub formulation: String,
    pub gamma: Option<usize>,
    pub gamma_rhs: Option<usize>,
    pub gamma_c: Option<usize>,
    pub scenarios: usize,
    pub rows: usize,
    pub cols: usize,
    pub nonzeros: usize,
    pub expected_rows: usize,
    pub objective: f64,
    pub epigraph: Option<f64>,
    pub driver: String,
    pub portfolio: Portfolio,
    pub build_seconds: f64,
    pub solve_seconds: f64,
}

impl Solved {
    pub fn transmission_mw(&self) -> f64 {
        self.portfolio
            .names
            .iter()
            .zip(&self.portfolio.values)
            .filter(|(n, _)| n.starts_with("tx_"))
            .map(|(_, v)| v)
            .sum()
    }
}

/// Solve `art` and require an optimal status.
pub fn solve_artifacts(
    lp: &TwoStageLp,
    art: &BuildArtifacts,
    label: &str,
    opts: &lp::SolverOptions,
) -> Result<(SolveResult, Portfolio), CaseError> {
    let res = lp::solve(&art.lp, opts).map_err(OracleError::from)?;
    if !res.is_optimal() {
        return Err(CaseError::NotOptimal {
            label: label.to_string(),
            status: res.status,
        });
    }
    let portfolio = art.portfolio(lp, &res, label);
    Ok((res, portfolio))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Det,
    Aro {
        gamma: usize,
        rule: SupportRule,
    },
    Split {
        gamma_rhs: usize,
        gamma_c: usize,
        rule: SupportRule,
    },
    ScenariosAlone {
        gamma_rhs: usize,
        gamma_c: usize,
        rule: SupportRule,
    },
}

impl Cell {
    pub fn label(&self) -> String {
        match *self {
            Cell::Det => "det".into(),
            Cell::Aro { gamma, .. } => format!("aro_g{gamma}"),
            Cell::Split { gamma_rhs, gamma_c, .. } => format!("split_r{gamma_rhs}_c{gamma_c}"),
            Cell::ScenariosAlone { gamma_rhs, gamma_c, .. } => format!("alone_r{gamma_rhs}_c{gamma_c}"),
        }
    }
}

/// Build and solve one cell over the downside parameters of `um`.
pub fn run_cell(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    cell: Cell,
    opts: &lp::SolverOptions,
) -> Result<Solved, CaseError> {
    let label = cell.label();
    let start = Instant::now();
    let (art, gamma, gamma_rhs, gamma_c) = match cell {
        Cell::Det => (build_deterministic(lp)?, None, None, None),
        Cell::Aro { gamma, rule } => {
            let um = um.clone().with_budgets(gamma, 0.0, 0);
            let set = ScenarioSet::over_all(&um, gamma, rule)?;
            (build_scenario_aro(lp, &um, &set)?, Some(gamma), None, None)
        }
        Cell::Split {
            gamma_rhs,
            gamma_c,
            rule,
        } => {
            let um = um.clone().with_budgets(0, gamma_c as f64, gamma_rhs);
            let set = ScenarioSet::over_kind(&um, ParamKind::Rhs, gamma_rhs, rule)?;
            (build_split_budget(lp, &um, &set)?, None, Some(gamma_rhs), Some(gamma_c))
        }
        Cell::ScenariosAlone {
            gamma_rhs,
            gamma_c,
            rule,
        } => (
            build_scenarios_alone(lp, um, gamma_rhs, gamma_c, rule)?,
            None,
            Some(gamma_rhs),
            Some(gamma_c),
        ),
    };
    let build_seconds = start.elapsed().as_secs_f64();
    let (res, portfolio) = solve_artifacts(lp, &art, &label, opts)?;
    let driver = art
        .driver(&res)
        .map(|i| art.index.blocks[i].label.clone())
        .unwrap_or_else(|| "nominal".into());
    Ok(Solved {
        label,
        formulation: art.stats.formulation.clone(),
        gamma,
        gamma_rhs,
        gamma_c,
        scenarios: art.stats.scenarios,
        rows: art.stats.rows,
        cols: art.stats.cols,
        nonzeros: art.stats.nonzeros,
        expected_rows: art.stats.expected_rows,
        objective: res.objective,
        epigraph: art.epigraph(&res),
        driver,
        portfolio,
        build_seconds,
        solve_seconds: res.wall_seconds,
    })
}

fn run_cells(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    cells: &[Cell],
    eval: &EvalOptions,
) -> Result<Vec<Solved>, CaseError> {
    par::map(eval.exec, cells, |&c| run_cell(lp, um, c, &eval.solver))
        .into_iter()
        .collect()
}

fn opt_num(v: Option<usize>) -> String {
    v.map(|g| g.to_string()).unwrap_or_default()
}

/// Deterministic baseline plus one scenario solve per Γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<Solved>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let names = self.rows.first().map(|r| r.portfolio.names.clone()).unwrap_or_default();
        let mut out = schema_line("sweep");
        out.push_str("label,gamma,scenarios,objective,first_stage_cost,transmission_mw,driver");
        for n in &names {
            out.push(',');
            out.push_str(&csv_field(n));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}",
                r.label,
                opt_num(r.gamma),
                r.scenarios,
                fmt_num(r.objective),
                fmt_num(r.portfolio.first_stage_cost),
                fmt_num(r.transmission_mw()),
                csv_field(&r.driver)
            ));
            for v in &r.portfolio.values {
                out.push(',');
                out.push_str(&fmt_num(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        timing_csv("sweep_timing", &self.rows)
    }
}

fn timing_csv(schema: &str, rows: &[Solved]) -> String {
    let mut out = schema_line(schema);
    out.push_str("label,rows,cols,nonzeros,build_seconds,solve_seconds\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.label,
            r.rows,
            r.cols,
            r.nonzeros,
            fmt_num(r.build_seconds),
            fmt_num(r.solve_seconds)
        ));
    }
    out
}

pub fn gamma_sweep(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    gammas: &[usize],
    rule: SupportRule,
    eval: &EvalOptions,
) -> Result<SweepReport, CaseError> {
    let um = um.downside();
    let cells: Vec<Cell> = std::iter::once(Cell::Det)
        .chain(gammas.iter().map(|&gamma| Cell::Aro { gamma, rule }))
        .collect();
    Ok(SweepReport {
        rows: run_cells(lp, &um, &cells, eval)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<Solved>,
}

impl CompareReport {
    pub fn find(&self, label: &str) -> Option<&Solved> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = schema_line("compare");
        out.push_str(
            "label,formulation,gamma,gamma_rhs,gamma_c,scenarios,rows,expected_rows,cols,nonzeros,objective,first_stage_cost,transmission_mw,driver\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.label,
                r.formulation,
                opt_num(r.gamma),
                opt_num(r.gamma_rhs),
                opt_num(r.gamma_c),
                r.scenarios,
                r.rows,
                r.expected_rows,
                r.cols,
                r.nonzeros,
                fmt_num(r.objective),
                fmt_num(r.portfolio.first_stage_cost),
                fmt_num(r.transmission_mw()),
                csv_field(&r.driver)
            ));
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        timing_csv("compare_timing", &self.rows)
    }
}

/// Combined-budget scenario solves for each Γ, then each split with its
/// scenarios-alone reproduction. Exactly-Γ support throughout.
pub fn compare_formulations(
    lp: &TwoStageLp,
    um: &UncertaintyModel,
    gammas: &[usize],
    splits: &[(usize, usize)],
    eval: &EvalOptions,
) -> Result<CompareReport, CaseError> {
    let um = um.downside();
    let rule = SupportRule::Exact;
    let mut cells: Vec<Cell> = gammas.iter().map(|&gamma| Cell::Aro { gamma, rule }).collect();
    for &(gamma_rhs, gamma_c) in splits {
        cells.push(Cell::Split {
            gamma_rhs,
            gamma_c,
            rule,
        });
        cells.push(Cell::ScenariosAlone {
            gamma_rhs,
            gamma_c,
            rule,
        });
    }
    Ok(CompareReport {
        rows: run_cells(lp, &um, &cells, eval)?,
    })
}

/// x/y series for the figure analogs: builds against Γ, stress whiskers, and
/// solve time against scenario count.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PlotData {
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub figure: String,
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<String>,
    pub y: Vec<f64>,
}

impl PlotData {
    pub fn from_sweep(sweep: &SweepReport) -> PlotData {
        let x: Vec<String> = sweep.rows.iter().map(|r| r.label.clone()).collect();
        let mut series = vec![
            Series {
                figure: "builds_by_gamma".into(),
                name: "transmission_mw".into(),
                x_label: "case".into(),
                y_label: "MW".into(),
                x: x.clone(),
                y: sweep.rows.iter().map(|r| r.transmission_mw()).collect(),
            },
            Series {
                figure: "builds_by_gamma".into(),
                name: "first_stage_cost".into(),
                x_label: "case".into(),
                y_label: "$".into(),
                x: x.clone(),
                y: sweep.rows.iter().map(|r| r.portfolio.first_stage_cost).collect(),
            },
        ];
        if let Some(first) = sweep.rows.first() {
            for (j, name) in first.portfolio.names.iter().enumerate() {
                series.push(Series {
                    figure: "builds_by_gamma".into(),
                    name: name.clone(),
                    x_label: "case".into(),
                    y_label: "MW".into(),
                    x: x.clone(),
                    y: sweep.rows.iter().map(|r| r.portfolio.values[j]).collect(),
                });
            }
        }
        PlotData { series }
    }

    pub fn from_compare(cmp: &CompareReport) -> PlotData {
        let mut series: Vec<Series> = Vec::new();
        for r in &cmp.rows {
            let name = r.formulation.clone();
            let s = match series.iter_mut().find(|s| s.name == name) {
                Some(s) => s,
                None => {
                    series.push(Series {
                        figure: "solve_time_by_scenarios".into(),
                        name,
                        x_label: "scenarios".into(),
                        y_label: "seconds".into(),
                        x: vec![],
                        y: vec![],
                    });
                    series.last_mut().unwrap()
                }
            };
            s.x.push(format!("{}:{}", r.label, r.scenarios));
            s.y.push(r.solve_seconds);
        }
        PlotData { series }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plot data serializes") + "\n"
    }
}
