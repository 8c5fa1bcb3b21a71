//! External solver process backend.
//!
//! The command is invoked as `<cmd> <input.lp> <output.sol>`. The solution
//! file holds a `status <s>` line, an `objective <v>` line and one
//! `col <name> <value>` line per column. Missing columns read as zero.

use std::collections::HashMap;
use std::fmt::Write;
use std::path::Path;
use std::process::Command;

use super::{
    export_lp, sanitize_names, LpError, LpInstance, SolveResult, SolveStatus, SolverOptions, EXTERNAL_SOLVER_ENV,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub values: Vec<(String, f64)>,
}

pub fn write_solution_file(sol: &ExternalSolution) -> String {
    let mut out = String::new();
    writeln!(out, "status {}", sol.status.as_str()).unwrap();
    writeln!(out, "objective {:?}", sol.objective).unwrap();
    for (name, v) in &sol.values {
        writeln!(out, "col {name} {v:?}").unwrap();
    }
    out
}

pub fn parse_solution_file(text: &str) -> Result<ExternalSolution, LpError> {
    let bad = |line: &str| LpError::External(format!("malformed solution line `{line}`"));
    let mut status = None;
    let mut objective = f64::NAN;
    let mut values = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["status", s] => {
                status = Some(match *s {
                    "optimal" => SolveStatus::Optimal,
                    "infeasible" => SolveStatus::Infeasible,
                    "unbounded" => SolveStatus::Unbounded,
                    "iteration-limit" => SolveStatus::IterationLimit,
                    _ => return Err(bad(line)),
                })
            }
            ["objective", v] => objective = v.parse().map_err(|_| bad(line))?,
            ["col", name, v] => values.push((name.to_string(), v.parse().map_err(|_| bad(line))?)),
            _ => return Err(bad(line)),
        }
    }
    let status = status.ok_or_else(|| LpError::External("solution has no status line".into()))?;
    Ok(ExternalSolution {
        status,
        objective,
        values,
    })
}

pub(crate) fn solve(lp: &LpInstance, opts: &SolverOptions) -> Result<SolveResult, LpError> {
    let cmd = match &opts.external_cmd {
        Some(c) => c.clone(),
        None => std::env::var_os(EXTERNAL_SOLVER_ENV)
            .map(Into::into)
            .ok_or(LpError::BackendUnavailable("external"))?,
    };
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("input.lp");
    let output = dir.path().join("output.sol");
    std::fs::write(&input, export_lp(lp))?;
    run(&cmd, &input, &output)?;
    let sol = parse_solution_file(&std::fs::read_to_string(&output)?)?;
    if sol.status != SolveStatus::Optimal {
        return Ok(SolveResult::without_solution(sol.status, 0, "external"));
    }
    let names = sanitize_names(&lp.col_names);
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(j, n)| (n.as_str(), j)).collect();
    let mut x = vec![0.0; lp.num_cols()];
    for (name, v) in &sol.values {
        let j = index
            .get(name.as_str())
            .ok_or_else(|| LpError::External(format!("unknown column `{name}` in solution")))?;
        x[*j] = *v;
    }
    let objective = lp.objective_value(&x);
    Ok(SolveResult::optimal(lp, x, vec![], objective, 0, "external"))
}

fn run(cmd: &Path, input: &Path, output: &Path) -> Result<(), LpError> {
    let out = Command::new(cmd)
        .arg(input)
        .arg(output)
        .output()
        .map_err(|e| LpError::External(format!("cannot run {}: {e}", cmd.display())))?;
    if !out.status.success() {
        return Err(LpError::External(format!(
            "{} exited with {}: {}",
            cmd.display(),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_file_round_trips() {
        let sol = ExternalSolution {
            status: SolveStatus::Optimal,
            objective: 1.25,
            values: vec![("x".into(), 0.1), ("y".into(), -3e-12)],
        };
        assert_eq!(parse_solution_file(&write_solution_file(&sol)).unwrap(), sol);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(parse_solution_file("status optimal\ncol x\n").is_err());
        assert!(parse_solution_file("objective 1\n").is_err());
    }
}
