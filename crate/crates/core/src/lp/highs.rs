//! In-process HiGHS backend over the raw C API.

use std::ffi::{c_void, CStr, CString};
use std::path::Path;

use highs_sys::*;

use super::{ExternalSolution, LpError, LpInstance, Sense, SolveResult, SolveStatus, SolverOptions};

struct Handle(*mut c_void);

impl Handle {
    fn new() -> Handle {
        // SAFETY: Highs_create has no preconditions; the pointer is owned by this handle.
        let ptr = unsafe { Highs_create() };
        assert!(!ptr.is_null(), "Highs_create returned null");
        Handle(ptr)
    }

    fn set_bool(&self, name: &str, value: bool) {
        let c = CString::new(name).unwrap();
        // SAFETY: valid handle and NUL-terminated option name.
        unsafe { Highs_setBoolOptionValue(self.0, c.as_ptr(), value as HighsInt) };
    }

    fn set_int(&self, name: &str, value: HighsInt) {
        let c = CString::new(name).unwrap();
        // SAFETY: as above.
        unsafe { Highs_setIntOptionValue(self.0, c.as_ptr(), value) };
    }

    fn set_double(&self, name: &str, value: f64) {
        let c = CString::new(name).unwrap();
        // SAFETY: as above.
        unsafe { Highs_setDoubleOptionValue(self.0, c.as_ptr(), value) };
    }

    fn set_string(&self, name: &str, value: &str) {
        let c = CString::new(name).unwrap();
        let v = CString::new(value).unwrap();
        // SAFETY: as above.
        unsafe { Highs_setStringOptionValue(self.0, c.as_ptr(), v.as_ptr()) };
    }

    fn configure(&self, opts: &SolverOptions) {
        self.set_bool("output_flag", false);
        self.set_int("threads", 1);
        self.set_string("solver", "simplex");
        self.set_double("primal_feasibility_tolerance", opts.feas_tol.max(1e-10));
        self.set_double("dual_feasibility_tolerance", opts.opt_tol.max(1e-10));
        self.set_int(
            "simplex_iteration_limit",
            opts.max_iters.min(HighsInt::MAX as usize) as HighsInt,
        );
    }

    fn run(&self) -> HighsInt {
        // SAFETY: valid handle with a model passed in.
        unsafe {
            Highs_run(self.0);
            Highs_getModelStatus(self.0)
        }
    }

    fn num_col(&self) -> usize {
        // SAFETY: valid handle.
        unsafe { Highs_getNumCol(self.0) as usize }
    }

    fn num_row(&self) -> usize {
        // SAFETY: valid handle.
        unsafe { Highs_getNumRow(self.0) as usize }
    }

    fn solution(&self) -> (Vec<f64>, Vec<f64>) {
        let (n, m) = (self.num_col(), self.num_row());
        let mut col_value = vec![0.0; n];
        let mut col_dual = vec![0.0; n];
        let mut row_value = vec![0.0; m];
        let mut row_dual = vec![0.0; m];
        // SAFETY: buffers sized to the model dimensions reported by HiGHS.
        unsafe {
            Highs_getSolution(
                self.0,
                col_value.as_mut_ptr(),
                col_dual.as_mut_ptr(),
                row_value.as_mut_ptr(),
                row_dual.as_mut_ptr(),
            );
        }
        (col_value, row_dual)
    }

    fn objective(&self) -> f64 {
        // SAFETY: valid handle.
        unsafe { Highs_getObjectiveValue(self.0) }
    }

    fn iterations(&self) -> usize {
        // SAFETY: valid handle.
        unsafe { Highs_getSimplexIterationCount(self.0).max(0) as usize }
    }

    fn col_name(&self, j: usize) -> String {
        let mut buf = vec![0 as std::os::raw::c_char; kHighsMaximumStringLength as usize + 1];
        // SAFETY: buffer has the documented maximum name length.
        unsafe {
            Highs_getColName(self.0, j as HighsInt, buf.as_mut_ptr());
            CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
        }
    }
}

impl Drop for Handle {
    fn drop(&mut self) {
        // SAFETY: pointer came from Highs_create and is destroyed exactly once.
        unsafe { Highs_destroy(self.0) };
    }
}

fn map_status(status: HighsInt) -> Option<SolveStatus> {
    match status {
        s if s == kHighsModelStatusOptimal => Some(SolveStatus::Optimal),
        s if s == kHighsModelStatusInfeasible => Some(SolveStatus::Infeasible),
        s if s == kHighsModelStatusUnbounded => Some(SolveStatus::Unbounded),
        s if s == kHighsModelStatusIterationLimit => Some(SolveStatus::IterationLimit),
        _ => None,
    }
}

fn run_resolving_ambiguity(h: &Handle) -> Result<SolveStatus, LpError> {
    let mut status = h.run();
    if status == kHighsModelStatusUnboundedOrInfeasible {
        h.set_string("presolve", "off");
        status = h.run();
    }
    map_status(status).ok_or_else(|| LpError::External(format!("HiGHS model status {status}")))
}

pub(crate) fn solve(lp: &LpInstance, opts: &SolverOptions) -> Result<SolveResult, LpError> {
    let n = lp.num_cols();
    let m = lp.num_rows();
    let mut starts = vec![0 as HighsInt; n];
    let mut counts = vec![0usize; n];
    for row in &lp.rows {
        for &(j, _) in &row.coeffs {
            counts[j] += 1;
        }
    }
    let mut acc = 0usize;
    for j in 0..n {
        starts[j] = acc as HighsInt;
        acc += counts[j];
    }
    let nnz = acc;
    let mut fill: Vec<usize> = starts.iter().map(|&s| s as usize).collect();
    let mut index = vec![0 as HighsInt; nnz];
    let mut value = vec![0.0; nnz];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            index[fill[j]] = i as HighsInt;
            value[fill[j]] = a;
            fill[j] += 1;
        }
    }
    let inf = f64::INFINITY;
    let (row_lower, row_upper): (Vec<f64>, Vec<f64>) = lp
        .rows
        .iter()
        .map(|r| match r.sense {
            Sense::Le => (-inf, r.rhs),
            Sense::Ge => (r.rhs, inf),
            Sense::Eq => (r.rhs, r.rhs),
        })
        .unzip();
    let col_lower: Vec<f64> = lp.bounds.iter().map(|b| b.lower).collect();
    let col_upper: Vec<f64> = lp.bounds.iter().map(|b| b.upper).collect();

    let h = Handle::new();
    h.configure(opts);
    // SAFETY: every array has the length HiGHS expects for (n, m, nnz).
    let pass = unsafe {
        Highs_passLp(
            h.0,
            n as HighsInt,
            m as HighsInt,
            nnz as HighsInt,
            kHighsMatrixFormatColwise,
            kHighsObjSenseMinimize,
            lp.objective_offset,
            lp.objective.as_ptr(),
            col_lower.as_ptr(),
            col_upper.as_ptr(),
            row_lower.as_ptr(),
            row_upper.as_ptr(),
            starts.as_ptr(),
            index.as_ptr(),
            value.as_ptr(),
        )
    };
    if pass == kHighsStatusError {
        return Err(LpError::External("HiGHS rejected the model".into()));
    }
    let status = run_resolving_ambiguity(&h)?;
    if status != SolveStatus::Optimal {
        return Ok(SolveResult::without_solution(status, h.iterations(), "highs"));
    }
    let (x, y) = h.solution();
    let objective = lp.objective_value(&x);
    Ok(SolveResult::optimal(lp, x, y, objective, h.iterations(), "highs"))
}

/// Read an LP file with HiGHS's own parser and solve it.
pub fn solve_lp_file(path: &Path, opts: &SolverOptions) -> Result<ExternalSolution, LpError> {
    let h = Handle::new();
    h.configure(opts);
    let c = CString::new(path.to_string_lossy().as_bytes()).map_err(|e| LpError::External(e.to_string()))?;
    // SAFETY: valid handle and NUL-terminated path.
    let read = unsafe { Highs_readModel(h.0, c.as_ptr()) };
    if read == kHighsStatusError {
        return Err(LpError::External(format!("HiGHS could not read {}", path.display())));
    }
    let status = if h.num_col() == 0 {
        SolveStatus::Optimal
    } else {
        run_resolving_ambiguity(&h)?
    };
    let mut sol = ExternalSolution {
        status,
        objective: f64::NAN,
        values: Vec::new(),
    };
    if status == SolveStatus::Optimal {
        let (x, _) = h.solution();
        sol.objective = if h.num_col() == 0 {
            // SAFETY: valid handle.
            let mut offset = 0.0;
            unsafe { Highs_getObjectiveOffset(h.0, &mut offset) };
            offset
        } else {
            h.objective()
        };
        sol.values = x.into_iter().enumerate().map(|(j, v)| (h.col_name(j), v)).collect();
    }
    Ok(sol)
}
