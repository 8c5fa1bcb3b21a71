//! Dense two-phase tableau simplex.
//!
//! Pivoting uses Dantzig's rule until a run of degenerate pivots is seen, then
//! switches to Bland's rule (lowest-index entering column, lowest-index leaving
//! basic variable on ratio ties) until the objective strictly improves again.
//! Bland's rule cannot cycle, so the hybrid terminates on degenerate bases.
//!
//! On termination the basis is refactored with a dense LU to recompute the
//! primal point and the row multipliers from the original data.

use nalgebra::{DMatrix, DVector};

use super::{LpInstance, Sense, SolveResult, SolveStatus, SolverOptions};

/// Consecutive degenerate pivots tolerated before Bland's rule takes over.
const DEGENERATE_RUN: usize = 30;
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Maps a standard-form column back to the original variable it encodes.
#[derive(Debug, Clone, Copy)]
enum Origin {
    Plus(usize),
    Minus(usize),
    Aux,
}

struct StandardForm {
    /// Row-major dense matrix, `m x n`.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    m: usize,
    n: usize,
    kinds: Vec<ColKind>,
    origins: Vec<Origin>,
    /// Initial basic column for each row.
    initial_basis: Vec<usize>,
    /// Rows that correspond to rows of the original instance: (row, sign / scale).
    row_map: Vec<Option<(usize, f64)>>,
    cost_scale: f64,
}

impl StandardForm {
    fn new(lp: &LpInstance) -> StandardForm {
        let n_orig = lp.num_cols();
        let mut origins = Vec::new();
        let mut plus = vec![0usize; n_orig];
        let mut minus = vec![None; n_orig];
        for (j, b) in lp.bounds.iter().enumerate() {
            plus[j] = origins.len();
            origins.push(Origin::Plus(j));
            if b.is_free() {
                minus[j] = Some(origins.len());
                origins.push(Origin::Minus(j));
            }
        }
        let n_struct = origins.len();

        // Collect rows over structural columns: original rows then finite upper bounds.
        let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64, Option<usize>)> = Vec::new();
        for (i, row) in lp.rows.iter().enumerate() {
            let mut coeffs = Vec::with_capacity(row.coeffs.len() + 1);
            for &(j, a) in &row.coeffs {
                coeffs.push((plus[j], a));
                if let Some(k) = minus[j] {
                    coeffs.push((k, -a));
                }
            }
            rows.push((coeffs, row.sense, row.rhs, Some(i)));
        }
        for (j, b) in lp.bounds.iter().enumerate() {
            if b.upper.is_finite() {
                let mut coeffs = vec![(plus[j], 1.0)];
                if let Some(k) = minus[j] {
                    coeffs.push((k, -1.0));
                }
                rows.push((coeffs, Sense::Le, b.upper, None));
            }
        }

        let m = rows.len();
        let extra: usize = rows
            .iter()
            .map(|(_, s, rhs, _)| {
                let flipped = *rhs < 0.0;
                match (s, flipped) {
                    (Sense::Eq, _) => 1,
                    (Sense::Le, false) | (Sense::Ge, true) => 1,
                    _ => 2,
                }
            })
            .sum();
        let n = n_struct + extra;
        let mut a = vec![0.0; m * n];
        let mut b = vec![0.0; m];
        let mut kinds = vec![ColKind::Structural; n_struct];
        let mut initial_basis = vec![0; m];
        let mut row_map = vec![None; m];
        let mut next = n_struct;
        for (i, (coeffs, sense, rhs, orig)) in rows.into_iter().enumerate() {
            let scale = coeffs.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
            let factor = sign / scale;
            for (j, v) in coeffs {
                a[i * n + j] += v * factor;
            }
            b[i] = rhs * factor;
            row_map[i] = orig.map(|r| (r, factor));
            let sense = match (sense, sign < 0.0) {
                (Sense::Le, true) => Sense::Ge,
                (Sense::Ge, true) => Sense::Le,
                (s, _) => s,
            };
            match sense {
                Sense::Le => {
                    a[i * n + next] = 1.0;
                    kinds.push(ColKind::Slack);
                    origins.push(Origin::Aux);
                    initial_basis[i] = next;
                    next += 1;
                }
                Sense::Ge => {
                    a[i * n + next] = -1.0;
                    kinds.push(ColKind::Slack);
                    origins.push(Origin::Aux);
                    next += 1;
                    a[i * n + next] = 1.0;
                    kinds.push(ColKind::Artificial);
                    origins.push(Origin::Aux);
                    initial_basis[i] = next;
                    next += 1;
                }
                Sense::Eq => {
                    a[i * n + next] = 1.0;
                    kinds.push(ColKind::Artificial);
                    origins.push(Origin::Aux);
                    initial_basis[i] = next;
                    next += 1;
                }
            }
        }
        debug_assert_eq!(next, n);

        let mut c = vec![0.0; n];
        for (k, o) in origins.iter().enumerate() {
            match *o {
                Origin::Plus(j) => c[k] = lp.objective[j],
                Origin::Minus(j) => c[k] = -lp.objective[j],
                Origin::Aux => {}
            }
        }
        let cmax = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let cost_scale = if cmax > 0.0 { cmax } else { 1.0 };
        c.iter_mut().for_each(|v| *v /= cost_scale);

        StandardForm {
            a,
            b,
            c,
            m,
            n,
            kinds,
            origins,
            initial_basis,
            row_map,
            cost_scale,
        }
    }
}

struct Tableau<'a> {
    sf: &'a StandardForm,
    t: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl<'a> Tableau<'a> {
    fn new(sf: &'a StandardForm) -> Self {
        Tableau {
            sf,
            t: sf.a.clone(),
            rhs: sf.b.clone(),
            basis: sf.initial_basis.clone(),
            reduced: vec![0.0; sf.n],
            iterations: 0,
        }
    }

    fn price(&mut self, costs: &[f64]) {
        let n = self.sf.n;
        self.reduced.copy_from_slice(costs);
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = costs[bj];
            if cb != 0.0 {
                let row = &self.t[i * n..(i + 1) * n];
                for (d, v) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * v;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.sf.n;
        let m = self.sf.m;
        let p = self.t[r * n + q];
        {
            let row = &mut self.t[r * n..(r + 1) * n];
            row.iter_mut().for_each(|v| *v /= p);
            row[q] = 1.0;
        }
        self.rhs[r] /= p;
        let pivot_row: Vec<f64> = self.t[r * n..(r + 1) * n].to_vec();
        let pivot_rhs = self.rhs[r];
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + q];
            if f != 0.0 {
                let row = &mut self.t[i * n..(i + 1) * n];
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[q] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -1e-12 {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for (d, pv) in self.reduced.iter_mut().zip(&pivot_row) {
                *d -= f * pv;
            }
            self.reduced[q] = 0.0;
        }
        self.basis[r] = q;
    }

    /// With `bounded`, the phase objective is known to be bounded below, so a
    /// column with no pivot row only looks improving through rounding drift; it
    /// is set aside until the next pivot rather than reported unbounded.
    fn run_phase(
        &mut self,
        allowed: &dyn Fn(usize) -> bool,
        opt_tol: f64,
        max_iters: usize,
        bounded: bool,
    ) -> PhaseOutcome {
        let n = self.sf.n;
        let m = self.sf.m;
        let mut degenerate_run = 0usize;
        let mut set_aside: Vec<usize> = Vec::new();
        loop {
            let bland = degenerate_run >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = -opt_tol;
            for j in 0..n {
                let d = self.reduced[j];
                if d < best && allowed(j) && !set_aside.contains(&j) {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return PhaseOutcome::Optimal;
            };
            if self.iterations >= max_iters {
                return PhaseOutcome::IterationLimit;
            }
            let mut leave: Option<usize> = None;
            let mut min_ratio = f64::INFINITY;
            for i in 0..m {
                let a = self.t[i * n + q];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / a;
                match leave {
                    None => {
                        leave = Some(i);
                        min_ratio = ratio;
                    }
                    Some(l) => {
                        let tie = 1e-12 * (1.0 + min_ratio);
                        if ratio < min_ratio - tie {
                            leave = Some(i);
                            min_ratio = ratio;
                        } else if ratio <= min_ratio + tie {
                            let prefer = if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                a > self.t[l * n + q]
                            };
                            if prefer {
                                leave = Some(i);
                            }
                            min_ratio = min_ratio.min(ratio);
                        }
                    }
                }
            }
            let Some(r) = leave else {
                if bounded {
                    set_aside.push(q);
                    continue;
                }
                return PhaseOutcome::Unbounded;
            };
            set_aside.clear();
            if min_ratio <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q);
            self.iterations += 1;
        }
    }

    /// Drive basic artificial variables out of the basis where a replacement exists.
    fn purge_artificials(&mut self) {
        let n = self.sf.n;
        for r in 0..self.sf.m {
            if self.sf.kinds[self.basis[r]] != ColKind::Artificial {
                continue;
            }
            let candidate = (0..n)
                .filter(|&j| self.sf.kinds[j] != ColKind::Artificial)
                .filter(|j| !self.basis.contains(j))
                .max_by(|&a, &b| {
                    self.t[r * n + a]
                        .abs()
                        .partial_cmp(&self.t[r * n + b].abs())
                        .unwrap()
                        .then(b.cmp(&a))
                });
            if let Some(q) = candidate {
                if self.t[r * n + q].abs() > 1e-7 {
                    self.pivot(r, q);
                }
            }
        }
    }
}

/// Recompute the basic solution and multipliers from the original standard-form data.
fn refactor(sf: &StandardForm, basis: &[usize]) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = sf.m;
    if m == 0 {
        return Some((vec![0.0; sf.n], vec![]));
    }
    let bmat = DMatrix::from_fn(m, m, |i, k| sf.a[i * sf.n + basis[k]]);
    let lu = bmat.clone().lu();
    let xb = lu.solve(&DVector::from_column_slice(&sf.b))?;
    let cb = DVector::from_fn(m, |k, _| sf.c[basis[k]]);
    let w = bmat.transpose().lu().solve(&cb)?;
    let mut z = vec![0.0; sf.n];
    for (k, &j) in basis.iter().enumerate() {
        z[j] = xb[k].max(0.0);
    }
    if !z.iter().all(|v| v.is_finite()) || !w.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some((z, w.iter().copied().collect()))
}

pub(crate) fn solve(lp: &LpInstance, opts: &SolverOptions) -> SolveResult {
    let sf = StandardForm::new(lp);
    let mut tab = Tableau::new(&sf);
    let empty = |status| SolveResult::without_solution(status, 0, "embedded");

    // Phase 1: minimise the sum of artificials.
    let phase1_costs: Vec<f64> = sf
        .kinds
        .iter()
        .map(|k| if *k == ColKind::Artificial { 1.0 } else { 0.0 })
        .collect();
    let has_artificial = sf.initial_basis.iter().any(|&j| sf.kinds[j] == ColKind::Artificial);
    if has_artificial {
        tab.price(&phase1_costs);
        if let PhaseOutcome::IterationLimit = tab.run_phase(&|_| true, 1e-11, opts.max_iters, true) {
            let mut r = empty(SolveStatus::IterationLimit);
            r.iterations = tab.iterations;
            return r;
        }
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(&j, _)| sf.kinds[j] == ColKind::Artificial)
            .map(|(_, v)| v.max(0.0))
            .sum();
        let bnorm = sf.b.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if infeasibility > opts.feas_tol.max(1e-9) * bnorm {
            let mut r = empty(SolveStatus::Infeasible);
            r.iterations = tab.iterations;
            return r;
        }
        tab.purge_artificials();
    }

    // Phase 2.
    tab.price(&sf.c);
    let kinds = &sf.kinds;
    let outcome = tab.run_phase(
        &|j| kinds[j] != ColKind::Artificial,
        opts.opt_tol.min(1e-9),
        opts.max_iters,
        false,
    );
    match outcome {
        PhaseOutcome::Unbounded => {
            let mut r = empty(SolveStatus::Unbounded);
            r.iterations = tab.iterations;
            return r;
        }
        PhaseOutcome::IterationLimit => {
            let mut r = empty(SolveStatus::IterationLimit);
            r.iterations = tab.iterations;
            return r;
        }
        PhaseOutcome::Optimal => {}
    }

    let (z, w) = refactor(&sf, &tab.basis).unwrap_or_else(|| {
        let mut z = vec![0.0; sf.n];
        for (k, &j) in tab.basis.iter().enumerate() {
            z[j] = tab.rhs[k].max(0.0);
        }
        // Multipliers from the final reduced costs of each row's initial basic column.
        let w = (0..sf.m)
            .map(|i| {
                let j = sf.initial_basis[i];
                let sign = sf.a[i * sf.n + j];
                (sf.c[j] - tab.reduced[j]) / sign
            })
            .collect();
        (z, w)
    });

    let mut x = vec![0.0; lp.num_cols()];
    for (k, o) in sf.origins.iter().enumerate() {
        match *o {
            Origin::Plus(j) => x[j] += z[k],
            Origin::Minus(j) => x[j] -= z[k],
            Origin::Aux => {}
        }
    }
    let mut y = vec![0.0; lp.num_rows()];
    for (i, map) in sf.row_map.iter().enumerate() {
        if let Some((orig, factor)) = map {
            y[*orig] = w[i] * factor * sf.cost_scale;
        }
    }
    let objective = lp.objective_value(&x);
    SolveResult::optimal(lp, x, y, objective, tab.iterations, "embedded")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{Bounds, LpBuilder};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn phase_one_drift_is_not_unboundedness() {
        use crate::casegen::{random_case, RandomCaseOptions};
        use crate::formulations::{build_scenario_aro, ScenarioSet, SupportRule};
        let spec = random_case(
            9370018816310147189,
            &RandomCaseOptions {
                min_params: 2,
                ..Default::default()
            },
        );
        let (lp, um) = crate::model::compile_case(&spec).unwrap();
        for g in 0..=um.len() {
            let set = ScenarioSet::over_all(&um, g, SupportRule::Upto).unwrap();
            let art = build_scenario_aro(&lp, &um, &set).unwrap();
            let r = solve(&art.lp, &opts());
            assert_eq!(r.status, SolveStatus::Optimal, "gamma {g}");
            #[cfg(feature = "highs")]
            {
                let h = crate::lp::solve(&art.lp, &SolverOptions::with_backend(crate::lp::Backend::Highs)).unwrap();
                assert!((h.objective - r.objective).abs() <= 1e-7 * h.objective.abs().max(1.0));
            }
        }
    }

    #[test]
    fn one_variable_lower_bound() {
        let mut b = LpBuilder::new();
        let x = b.add_col("x", 1.0, Bounds::NONNEG);
        b.add_row("c0", [(x, 1.0)], Sense::Ge, 3.0);
        let r = solve(&b.build(), &opts());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-12);
        assert!((r.dual[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let mut b = LpBuilder::new();
        let x = b.add_col("x", -1.0, Bounds::NONNEG);
        b.add_row("c0", [(x, 1.0)], Sense::Ge, 3.0);
        assert_eq!(solve(&b.build(), &opts()).status, SolveStatus::Unbounded);
    }

    #[test]
    fn infeasible_detected() {
        let mut b = LpBuilder::new();
        let x = b.add_col("x", 1.0, Bounds::NONNEG);
        b.add_row("lo", [(x, 1.0)], Sense::Ge, 3.0);
        b.add_row("hi", [(x, 1.0)], Sense::Le, 2.0);
        assert_eq!(solve(&b.build(), &opts()).status, SolveStatus::Infeasible);
    }

    #[test]
    fn free_variable_and_upper_bound() {
        // min x + y/2 with x + y = -1: push y up until x >= -3 binds.
        let mut b = LpBuilder::new();
        let x = b.add_col("x", 1.0, Bounds::FREE);
        let y = b.add_col("y", 0.5, Bounds::upper(4.0));
        b.add_row("sum", [(x, 1.0), (y, 1.0)], Sense::Eq, -1.0);
        b.add_row("xlo", [(x, 1.0)], Sense::Ge, -3.0);
        let lp = b.build();
        let r = solve(&lp, &opts());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.primal[0] + 3.0).abs() < 1e-10, "{:?}", r.primal);
        assert!((r.primal[1] - 2.0).abs() < 1e-10);
        assert!((lp.dual_objective(&r.dual) - r.objective).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling LP (cycles under naive Dantzig with lowest-index ties).
        let mut b = LpBuilder::new();
        let x: Vec<usize> = [-0.75, 150.0, -0.02, 6.0]
            .iter()
            .enumerate()
            .map(|(i, c)| b.add_col(format!("x{i}"), *c, Bounds::NONNEG))
            .collect();
        b.add_row(
            "r1",
            [(x[0], 0.25), (x[1], -60.0), (x[2], -0.04), (x[3], 9.0)],
            Sense::Le,
            0.0,
        );
        b.add_row(
            "r2",
            [(x[0], 0.5), (x[1], -90.0), (x[2], -0.02), (x[3], 3.0)],
            Sense::Le,
            0.0,
        );
        b.add_row("r3", [(x[2], 1.0)], Sense::Le, 1.0);
        let r = solve(&b.build(), &opts());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 0.05).abs() < 1e-10, "{}", r.objective);
    }

    #[test]
    fn iteration_limit_reported() {
        let mut b = LpBuilder::new();
        let xs: Vec<usize> = (0..5)
            .map(|i| b.add_col(format!("x{i}"), -1.0, Bounds::upper(1.0)))
            .collect();
        b.add_row("cap", xs.iter().map(|&j| (j, 1.0)), Sense::Le, 3.0);
        let o = SolverOptions {
            max_iters: 1,
            ..SolverOptions::default()
        };
        assert_eq!(solve(&b.build(), &o).status, SolveStatus::IterationLimit);
    }
}
