//! Order-preserving map over independent work items.
//!
//! With the `parallel` feature the map runs on the rayon pool unless the
//! caller asks for [`Exec::Sequential`]; without it every map is sequential.

use serde::{Deserialize, Serialize};

use crate::lp::SolverOptions;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

/// Solver settings plus the execution mode for batches of independent solves.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub solver: SolverOptions,
    pub exec: Exec,
}

impl EvalOptions {
    pub fn sequential(solver: SolverOptions) -> EvalOptions {
        EvalOptions {
            solver,
            exec: Exec::Sequential,
        }
    }
}

pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}
