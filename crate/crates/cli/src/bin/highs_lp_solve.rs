//! Solver shim for the external backend: `highs-lp-solve <input.lp> <output.sol>`.
//! Reads the model with HiGHS's own LP parser, independent of the in-memory path.

use std::path::Path;

use robust_cem::lp::{highs::solve_lp_file, write_solution_file, SolverOptions};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [input, output] = args.as_slice() else {
        eprintln!("usage: highs-lp-solve <input.lp> <output.sol>");
        std::process::exit(1);
    };
    let sol = match solve_lp_file(Path::new(input), &SolverOptions::default()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("highs-lp-solve: {e}");
            std::process::exit(1);
        }
    };
    if let Err(e) = std::fs::write(output, write_solution_file(&sol)) {
        eprintln!("highs-lp-solve: {output}: {e}");
        std::process::exit(1);
    }
}
