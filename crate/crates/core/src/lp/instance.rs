//! Flat sparse LP container shared by every formulation and backend.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LpError;

/// Row sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    /// Signed violation of `activity (sense) rhs`; zero when satisfied.
    pub fn violation(self, activity: f64, rhs: f64) -> f64 {
        match self {
            Sense::Le => (activity - rhs).max(0.0),
            Sense::Ge => (rhs - activity).max(0.0),
            Sense::Eq => (activity - rhs).abs(),
        }
    }
}

/// Column bounds. Lower bounds are restricted to `0` or `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const NONNEG: Bounds = Bounds {
        lower: 0.0,
        upper: f64::INFINITY,
    };
    pub const FREE: Bounds = Bounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn upper(upper: f64) -> Bounds {
        Bounds { lower: 0.0, upper }
    }

    pub fn is_free(&self) -> bool {
        self.lower == f64::NEG_INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LpRow {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// A minimisation LP: `min c'x + offset` over sparse rows and column bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpInstance {
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub rows: Vec<LpRow>,
    pub bounds: Vec<Bounds>,
    pub col_names: Vec<String>,
    pub row_names: Vec<String>,
}

const REDUCED_COST_ZERO: f64 = 1e-12;

impl LpInstance {
    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest absolute row or bound violation of `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .map(|r| r.sense.violation(r.activity(x), r.rhs))
            .fold(0.0, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(x)
            .map(|(b, &v)| (b.lower - v).max(v - b.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Dual objective implied by row multipliers `y` (convention `c = A'y + d`).
    ///
    /// Reduced costs are attributed to whichever finite bound they price; a
    /// reduced cost pointing at an infinite bound makes the value infinite.
    /// Reduced costs at rounding level relative to the terms that formed them
    /// count as zero.
    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        let mut reduced = self.objective.clone();
        let mut scale: Vec<f64> = self.objective.iter().map(|c| c.abs()).collect();
        for (row, &yi) in self.rows.iter().zip(y) {
            for &(j, a) in &row.coeffs {
                reduced[j] -= a * yi;
                scale[j] += (a * yi).abs();
            }
        }
        for (d, s) in reduced.iter_mut().zip(&scale) {
            if d.abs() <= REDUCED_COST_ZERO * s {
                *d = 0.0;
            }
        }
        let mut value = self.objective_offset + self.rows.iter().zip(y).map(|(r, yi)| r.rhs * yi).sum::<f64>();
        for (d, b) in reduced.iter().zip(&self.bounds) {
            let d = *d;
            if d > 0.0 {
                value += d * b.lower;
            } else if d < 0.0 {
                value += d * b.upper;
            }
        }
        value
    }

    /// Row multipliers whose sign contradicts the row sense.
    pub fn dual_sign_violation(&self, y: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(y)
            .map(|(r, &yi)| match r.sense {
                Sense::Le => yi.max(0.0),
                Sense::Ge => (-yi).max(0.0),
                Sense::Eq => 0.0,
            })
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_cols();
        if self.bounds.len() != n || self.col_names.len() != n {
            return Err(LpError::Invalid(format!(
                "{} objective entries, {} bounds, {} column names",
                n,
                self.bounds.len(),
                self.col_names.len()
            )));
        }
        if self.row_names.len() != self.rows.len() {
            return Err(LpError::Invalid("row name count mismatch".into()));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::Invalid(format!(
                        "row {} references column {j} of {n}",
                        self.row_names[i]
                    )));
                }
                if !seen.insert(j) {
                    return Err(LpError::Invalid(format!(
                        "row {} has duplicate column {j}",
                        self.row_names[i]
                    )));
                }
                if !a.is_finite() {
                    return Err(LpError::Invalid(format!(
                        "row {} has non-finite coefficient",
                        self.row_names[i]
                    )));
                }
            }
            if !row.rhs.is_finite() {
                return Err(LpError::Invalid(format!(
                    "row {} has non-finite rhs",
                    self.row_names[i]
                )));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            let lower_ok = b.lower == 0.0 || b.lower == f64::NEG_INFINITY;
            if !lower_ok || b.upper.is_nan() || b.upper < b.lower {
                return Err(LpError::Invalid(format!(
                    "column {} has bounds [{}, {}]",
                    self.col_names[j], b.lower, b.upper
                )));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) || !self.objective_offset.is_finite() {
            return Err(LpError::Invalid("non-finite objective".into()));
        }
        Ok(())
    }

    /// Same LP with the objective multiplied by `factor`.
    pub fn scaled_objective(&self, factor: f64) -> LpInstance {
        let mut lp = self.clone();
        lp.objective.iter_mut().for_each(|c| *c *= factor);
        lp.objective_offset *= factor;
        lp
    }
}

/// Incremental assembly of an [`LpInstance`]; duplicate coefficients in a row are summed.
#[derive(Debug, Default)]
pub struct LpBuilder {
    objective: Vec<f64>,
    offset: f64,
    bounds: Vec<Bounds>,
    col_names: Vec<String>,
    rows: Vec<LpRow>,
    row_names: Vec<String>,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_col(&mut self, name: impl Into<String>, cost: f64, bounds: Bounds) -> usize {
        self.objective.push(cost);
        self.bounds.push(bounds);
        self.col_names.push(name.into());
        self.objective.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_offset(&mut self, value: f64) {
        self.offset += value;
    }

    pub fn add_row<I>(&mut self, name: impl Into<String>, coeffs: I, sense: Sense, rhs: f64) -> usize
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (j, a) in coeffs {
            *merged.entry(j).or_insert(0.0) += a;
        }
        let coeffs = merged.into_iter().filter(|&(_, a)| a != 0.0).collect();
        self.rows.push(LpRow { coeffs, sense, rhs });
        self.row_names.push(name.into());
        self.rows.len() - 1
    }

    pub fn build(self) -> LpInstance {
        LpInstance {
            objective: self.objective,
            objective_offset: self.offset,
            rows: self.rows,
            bounds: self.bounds,
            col_names: self.col_names,
            row_names: self.row_names,
        }
    }
}
