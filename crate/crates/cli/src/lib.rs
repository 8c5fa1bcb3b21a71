//! Command-line driver for the robust capacity expansion toolkit.
//!
//! Every subcommand writes under one output root and leaves a `manifest.json`
//! there listing the config hash, settings, outputs and headline numbers.

mod manifest;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use robust_cem::casegen::{
    compare_formulations, gamma_sweep, generate_desk_case, random_case, CaseError, DeskCaseOptions, PlotData,
    RandomCaseOptions,
};
use robust_cem::formulations::{
    build, build_split_budget, BuildArtifacts, BuildRequest, BuildStats, FormulationError, FormulationKind,
    ScenarioSet, SupportRule,
};
use robust_cem::lp::{self, Backend, SolverOptions};
use robust_cem::model::{compile_case, validate_system, ParamKind, Role, SystemSpec, TwoStageLp, UncertaintyModel};
use robust_cem::oracle::OracleError;
use robust_cem::par::{EvalOptions, Exec};
use robust_cem::report::{csv_field, fmt_num, schema_line};
use robust_cem::stress::{
    read_portfolio, stress_test, summarize, summary_csv_rows, write_portfolio, RealizationGrid, StressError,
    StressReport, STRESS_HEADER, SUMMARY_HEADER,
};
use robust_cem::verify::{export_round_trip, run_verify, VerifyOptions};

pub use manifest::{sha256_hex, ConfigRef, OutputRef, Run, RunManifest, MANIFEST_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NOT_OPTIMAL: i32 = 2;
pub const EXIT_DISAGREEMENT: i32 = 3;

/// Config written into the output root when `--config` is not given.
pub const DEFAULT_CONFIG: &str = "system.toml";

#[derive(Debug, Parser)]
#[command(
    name = "robust-cem",
    version,
    about = "Robust capacity expansion planning at desk scale"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a system config: the desk case or a random instance.
    Casegen(CasegenArgs),
    /// Build one formulation and report its size.
    Build(FormulationCmd),
    /// Build and solve one formulation.
    Solve(FormulationCmd),
    /// Deterministic plan plus one scenario solve per Γ.
    Sweep(SweepArgs),
    /// Combined-budget solves against split budgets and their scenario reproductions.
    Compare(CompareArgs),
    /// Second-stage cost of fixed portfolios over k-at-a-time realizations.
    Stress(StressArgs),
    /// Cross-method checks; exits 3 when a gating check disagrees.
    Verify(VerifyArgs),
    /// Write one formulation in LP text format.
    ExportLp(FormulationCmd),
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output root; every file the run writes goes under it.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Common {
    #[command(flatten)]
    out: OutArg,
    /// System config in TOML. Defaults to the desk case, written to the output root.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Absolute primal feasibility tolerance.
    #[arg(long, default_value_t = 1e-8)]
    feas_tol: f64,
    /// Relative optimality tolerance.
    #[arg(long, default_value_t = 1e-8)]
    opt_tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
    /// auto, embedded, highs or external.
    #[arg(long, default_value = "auto")]
    backend: Backend,
    /// Solver command for the external backend; see ROBUST_CEM_EXTERNAL_SOLVER.
    #[arg(long)]
    external_cmd: Option<PathBuf>,
    /// Run independent solves one after another.
    #[arg(long)]
    sequential: bool,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            feas_tol: self.feas_tol,
            opt_tol: self.opt_tol,
            max_iters: self.max_iters,
            backend: self.backend,
            external_cmd: self.external_cmd.clone(),
            ..SolverOptions::default()
        }
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

#[derive(Debug, Args)]
struct CasegenArgs {
    #[command(flatten)]
    out: OutArg,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Hours per representative day (desk case).
    #[arg(long, default_value_t = 24)]
    hours: usize,
    /// Representative days (desk case).
    #[arg(long, default_value_t = 2)]
    seasons: usize,
    /// Small random instance instead of the desk case.
    #[arg(long)]
    random: bool,
    /// File name under the output root.
    #[arg(long, default_value = DEFAULT_CONFIG)]
    file: String,
}

#[derive(Debug, Args)]
struct FormulationArgs {
    /// det, aro, split or penalty.
    #[arg(long, default_value = "det")]
    formulation: FormulationKind,
    /// Combined budget for aro and penalty.
    #[arg(long, default_value_t = 0)]
    gamma: usize,
    /// Cost budget for split.
    #[arg(long, default_value_t = 0.0)]
    gamma_c: f64,
    /// Rhs budget for split.
    #[arg(long, default_value_t = 0)]
    gamma_rhs: usize,
    /// exact or upto.
    #[arg(long, default_value = "exact")]
    support: SupportRule,
    /// Penalty weight; defaults to 100 times the largest nominal cost.
    #[arg(long)]
    penalty_m: Option<f64>,
}

impl FormulationArgs {
    fn request(&self) -> BuildRequest {
        BuildRequest {
            kind: self.formulation,
            gamma: self.gamma,
            gamma_c: self.gamma_c,
            gamma_rhs: self.gamma_rhs,
            support: self.support,
            penalty_m: self.penalty_m,
        }
    }
}

#[derive(Debug, Args)]
struct FormulationCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    formulation: FormulationArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    gammas: Vec<usize>,
    #[arg(long, default_value = "exact")]
    support: SupportRule,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    gammas: Vec<usize>,
    /// Comma-separated `gamma_rhs:gamma_c` pairs.
    #[arg(long, value_delimiter = ',', default_value = "1:1,1:2,2:1", value_parser = parse_split)]
    splits: Vec<(usize, usize)>,
}

fn parse_split(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s.split_once(':').ok_or_else(|| format!("expected r:c, got `{s}`"))?;
    let r = r.parse().map_err(|_| format!("bad gamma_rhs in `{s}`"))?;
    let c = c.parse().map_err(|_| format!("bad gamma_c in `{s}`"))?;
    Ok((r, c))
}

#[derive(Debug, Args)]
struct StressArgs {
    #[command(flatten)]
    common: Common,
    /// Portfolio JSON written by `solve` or `sweep`; repeatable.
    #[arg(long, required = true)]
    portfolio: Vec<PathBuf>,
    /// Downside parameters deviating together.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Also evaluate upside parameters, up to k at a time.
    #[arg(long)]
    include_upside: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 2)]
    max_gamma: usize,
    #[arg(long, default_value_t = 1)]
    gamma_rhs: usize,
    #[arg(long, default_value_t = 1)]
    gamma_c: usize,
    #[arg(long, default_value_t = 200)]
    ccg_max_iter: usize,
}

/// Why a run stopped early, with its exit code.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    NotOptimal(String),
    Disagreement(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::NotOptimal(_) => EXIT_NOT_OPTIMAL,
            Failure::Disagreement(_) => EXIT_DISAGREEMENT,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) | Failure::NotOptimal(m) | Failure::Disagreement(m) => f.write_str(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(format!("i/o: {e}"))
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::NotOptimal { .. } => Failure::NotOptimal(e.to_string()),
            e => Failure::Validation(e.to_string()),
        }
    }
}

impl From<CaseError> for Failure {
    fn from(e: CaseError) -> Self {
        match e {
            CaseError::Oracle(o) => o.into(),
            CaseError::NotOptimal { .. } => Failure::NotOptimal(e.to_string()),
            e => Failure::Validation(e.to_string()),
        }
    }
}

impl From<StressError> for Failure {
    fn from(e: StressError) -> Self {
        match e {
            StressError::Oracle(o) => o.into(),
            e => Failure::Validation(e.to_string()),
        }
    }
}

impl From<FormulationError> for Failure {
    fn from(e: FormulationError) -> Self {
        Failure::Validation(e.to_string())
    }
}

/// Parse `argv` (program name first), run the subcommand, write the manifest,
/// and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let (name, out, solver, exec) = match &cli.command {
        Command::Casegen(a) => ("casegen", &a.out.out, SolverOptions::default(), Exec::default()),
        Command::Build(a) => (
            "build",
            &a.common.out.out,
            a.common.solver.options(),
            a.common.solver.exec(),
        ),
        Command::Solve(a) => (
            "solve",
            &a.common.out.out,
            a.common.solver.options(),
            a.common.solver.exec(),
        ),
        Command::Sweep(a) => (
            "sweep",
            &a.common.out.out,
            a.common.solver.options(),
            a.common.solver.exec(),
        ),
        Command::Compare(a) => (
            "compare",
            &a.common.out.out,
            a.common.solver.options(),
            a.common.solver.exec(),
        ),
        Command::Stress(a) => (
            "stress",
            &a.common.out.out,
            a.common.solver.options(),
            a.common.solver.exec(),
        ),
        Command::Verify(a) => (
            "verify",
            &a.common.out.out,
            a.common.solver.options(),
            a.common.solver.exec(),
        ),
        Command::ExportLp(a) => (
            "export-lp",
            &a.common.out.out,
            a.common.solver.options(),
            a.common.solver.exec(),
        ),
    };
    let eval = EvalOptions {
        solver: solver.clone(),
        exec,
    };
    let mut run = Run::new(out.clone(), name, args, solver, exec);
    let outcome = match &cli.command {
        Command::Casegen(a) => casegen(a, &mut run),
        Command::Build(a) => build_cmd(a, &mut run),
        Command::Solve(a) => solve_cmd(a, &mut run, &eval),
        Command::Sweep(a) => sweep(a, &mut run, &eval),
        Command::Compare(a) => compare(a, &mut run, &eval),
        Command::Stress(a) => stress(a, &mut run, &eval),
        Command::Verify(a) => verify(a, &mut run, &eval),
        Command::ExportLp(a) => export(a, &mut run),
    };
    let (code, error) = match outcome {
        Ok(()) => (EXIT_OK, None),
        Err(f) => {
            eprintln!("error: {f}");
            (f.code(), Some(f.to_string()))
        }
    };
    match run.finish(code, error) {
        Ok(_) => code,
        Err(e) => {
            eprintln!("error: cannot write manifest: {e}");
            code.max(EXIT_VALIDATION)
        }
    }
}

fn load_case(common: &Common, run: &mut Run) -> Result<(TwoStageLp, UncertaintyModel), Failure> {
    let (path, bytes) = match &common.config {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?;
            (p.clone(), bytes)
        }
        None => {
            let bytes = generate_desk_case(&DeskCaseOptions::default()).to_toml().into_bytes();
            (run.write(DEFAULT_CONFIG, &bytes)?, bytes)
        }
    };
    run.set_config(&path, &bytes);
    let text = String::from_utf8(bytes).map_err(|_| Failure::Validation(format!("{}: not UTF-8", path.display())))?;
    let spec = SystemSpec::from_toml(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let violations = validate_system(&spec);
    if !violations.is_empty() {
        return Err(Failure::Validation(format!(
            "{} breaks {} rule(s):\n  {}",
            path.display(),
            violations.len(),
            violations.join("\n  ")
        )));
    }
    let (lp, um) = compile_case(&spec).map_err(|e| Failure::Validation(e.to_string()))?;
    run.result("case", &spec.name);
    Ok((lp, um))
}

fn casegen(a: &CasegenArgs, run: &mut Run) -> Result<(), Failure> {
    let spec = if a.random {
        random_case(a.seed, &RandomCaseOptions::default())
    } else {
        generate_desk_case(&DeskCaseOptions {
            seed: a.seed,
            hours: a.hours,
            seasons: a.seasons,
            ..DeskCaseOptions::default()
        })
    };
    let violations = validate_system(&spec);
    if !violations.is_empty() {
        return Err(Failure::Validation(violations.join("\n  ")));
    }
    run.write(&a.file, spec.to_toml().as_bytes())?;
    run.result("case", &spec.name);
    run.result("parameters", spec.uncertainty.len());
    Ok(())
}

fn stats_csv(stats: &BuildStats) -> String {
    format!(
        "{}{}\n{}\n",
        schema_line("build"),
        BuildStats::CSV_HEADER,
        stats.csv_row()
    )
}

fn build_one(a: &FormulationCmd, run: &mut Run) -> Result<(TwoStageLp, BuildArtifacts, f64), Failure> {
    let (lp, um) = load_case(&a.common, run)?;
    let start = Instant::now();
    let art = build(&lp, &um, &a.formulation.request())?;
    let seconds = start.elapsed().as_secs_f64();
    run.write("build.csv", stats_csv(&art.stats).as_bytes())?;
    run.result("label", a.formulation.request().label());
    run.result("stats", &art.stats);
    Ok((lp, art, seconds))
}

fn build_cmd(a: &FormulationCmd, run: &mut Run) -> Result<(), Failure> {
    build_one(a, run).map(|_| ())
}

fn export(a: &FormulationCmd, run: &mut Run) -> Result<(), Failure> {
    let (_, art, _) = build_one(a, run)?;
    run.write("model.lp", lp::export_lp(&art.lp).as_bytes())?;
    Ok(())
}

const SOLVE_HEADER: &str = "label,formulation,status,objective,epigraph,first_stage_cost,transmission_mw,driver,primal_residual,duality_gap,iterations,backend";

fn solve_cmd(a: &FormulationCmd, run: &mut Run, eval: &EvalOptions) -> Result<(), Failure> {
    let (lp, art, build_seconds) = build_one(a, run)?;
    let label = a.formulation.request().label();
    let res = lp::solve(&art.lp, &eval.solver).map_err(OracleError::from)?;
    run.result("status", res.status.as_str());
    if !res.is_optimal() {
        return Err(Failure::NotOptimal(format!(
            "{label}: solver returned {}",
            res.status.as_str()
        )));
    }
    let portfolio = art.portfolio(&lp, &res, &label);
    let driver = art
        .driver(&res)
        .map(|i| art.index.blocks[i].label.clone())
        .unwrap_or_else(|| "nominal".into());
    let transmission: f64 = portfolio
        .names
        .iter()
        .zip(&portfolio.values)
        .filter(|(n, _)| n.starts_with("tx_"))
        .map(|(_, v)| v)
        .sum();
    let epigraph = art.epigraph(&res).map(fmt_num).unwrap_or_default();
    let csv = format!(
        "{}{SOLVE_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
        schema_line("solve"),
        label,
        art.stats.formulation,
        res.status.as_str(),
        fmt_num(res.objective),
        epigraph,
        fmt_num(portfolio.first_stage_cost),
        fmt_num(transmission),
        csv_field(&driver),
        fmt_num(res.primal_residual),
        fmt_num(res.duality_gap),
        res.iterations,
        res.backend
    );
    run.write("solve.csv", csv.as_bytes())?;
    let timing = format!(
        "{}label,build_seconds,solve_seconds\n{label},{},{}\n",
        schema_line("solve_timing"),
        fmt_num(build_seconds),
        fmt_num(res.wall_seconds)
    );
    run.write("solve_timing.csv", timing.as_bytes())?;
    write_portfolio(&run.path("portfolio.json"), &portfolio)?;
    let bytes = std::fs::read(run.path("portfolio.json"))?;
    run.write("portfolio.json", &bytes)?;
    run.result("objective", fmt_num(res.objective));
    run.result("driver", &driver);
    run.result("certified", res.certifies(&eval.solver));
    Ok(())
}

fn objectives(rows: &[robust_cem::casegen::Solved]) -> std::collections::BTreeMap<String, String> {
    rows.iter().map(|r| (r.label.clone(), fmt_num(r.objective))).collect()
}

fn sweep(a: &SweepArgs, run: &mut Run, eval: &EvalOptions) -> Result<(), Failure> {
    let (lp, um) = load_case(&a.common, run)?;
    let report = gamma_sweep(&lp, &um, &a.gammas, a.support, eval)?;
    run.write("sweep.csv", report.to_csv().as_bytes())?;
    run.write("sweep_timing.csv", report.timing_csv().as_bytes())?;
    run.write("sweep_plot.json", PlotData::from_sweep(&report).to_json().as_bytes())?;
    for r in &report.rows {
        let text = serde_json::to_string_pretty(&r.portfolio).expect("portfolio serializes") + "\n";
        run.write(&format!("portfolios/{}.json", r.label), text.as_bytes())?;
    }
    run.result("objectives", objectives(&report.rows));
    Ok(())
}

fn compare(a: &CompareArgs, run: &mut Run, eval: &EvalOptions) -> Result<(), Failure> {
    let (lp, um) = load_case(&a.common, run)?;
    let report = compare_formulations(&lp, &um, &a.gammas, &a.splits, eval)?;
    run.write("compare.csv", report.to_csv().as_bytes())?;
    run.write("compare_timing.csv", report.timing_csv().as_bytes())?;
    run.write(
        "compare_plot.json",
        PlotData::from_compare(&report).to_json().as_bytes(),
    )?;
    run.result("objectives", objectives(&report.rows));
    Ok(())
}

fn stress(a: &StressArgs, run: &mut Run, eval: &EvalOptions) -> Result<(), Failure> {
    let (lp, um) = load_case(&a.common, run)?;
    let downside = RealizationGrid::k_at_a_time(&um, Role::Downside, a.k, true)?;
    let n_up = um.parameters.iter().filter(|p| p.role == Role::Upside).count();
    let upside = if a.include_upside && n_up > 0 {
        Some(RealizationGrid::k_at_a_time(&um, Role::Upside, a.k.min(n_up), false)?)
    } else {
        None
    };
    let names: Vec<&str> = lp.first.iter().map(|c| c.name.as_str()).collect();
    let mut rows = String::new();
    let mut summary = String::new();
    let mut worst = std::collections::BTreeMap::new();
    for path in &a.portfolio {
        let p = read_portfolio(path)?;
        if p.names.iter().map(String::as_str).ne(names.iter().copied()) || p.values.len() != names.len() {
            return Err(Failure::Validation(format!(
                "{}: portfolio columns do not match the config's first stage",
                path.display()
            )));
        }
        let report = stress_test(&lp, &um, &p, &downside, eval)?;
        rows.push_str(&report.csv_rows());
        summary.push_str(&summary_csv_rows(&report.portfolio, &summarize(&report)?));
        if let Some(w) = report.worst() {
            worst.insert(p.label.clone(), (w.label.clone(), fmt_num(w.cost)));
        }
        if let Some(grid) = &upside {
            let up = stress_test(&lp, &um, &p, grid, eval)?;
            let up = StressReport {
                portfolio: format!("{} upside", p.label),
                rows: up.rows,
            };
            rows.push_str(&up.csv_rows());
            summary.push_str(&summary_csv_rows(&up.portfolio, &summarize(&up)?));
        }
    }
    let csv = format!("{}{STRESS_HEADER}\n{rows}", schema_line("stress"));
    run.write("stress.csv", csv.as_bytes())?;
    let csv = format!("{}{SUMMARY_HEADER}\n{summary}", schema_line("stress_summary"));
    run.write("stress_summary.csv", csv.as_bytes())?;
    run.result("worst", worst);
    Ok(())
}

fn verify(a: &VerifyArgs, run: &mut Run, eval: &EvalOptions) -> Result<(), Failure> {
    let (lp, um) = load_case(&a.common, run)?;
    let opts = VerifyOptions {
        max_gamma: a.max_gamma,
        gamma_rhs: a.gamma_rhs,
        gamma_c: a.gamma_c,
        ccg_max_iter: a.ccg_max_iter,
    };
    let mut report = run_verify(&lp, &um, &opts, eval)?;
    let down = um.downside();
    let (n_cost, n_rhs) = (down.count(ParamKind::Cost), down.count(ParamKind::Rhs));
    if n_cost > 0 && n_rhs > 0 {
        let (gr, gc) = (a.gamma_rhs.min(n_rhs), a.gamma_c.min(n_cost));
        let split_um = down.clone().with_budgets(0, gc as f64, gr);
        let set = ScenarioSet::over_kind(&split_um, ParamKind::Rhs, gr, SupportRule::Exact)?;
        let art = build_split_budget(&lp, &split_um, &set)?;
        let (internal, external) = export_round_trip(&art, &eval.solver)?;
        report.equal(
            format!("lp export round trip split ({gr},{gc})"),
            internal,
            external,
            1e-6,
            true,
        );
    }
    run.write("verify.csv", report.to_csv().as_bytes())?;
    let failures: Vec<String> = report.gating_failures().iter().map(|c| c.name.clone()).collect();
    run.result("checks", report.checks.len());
    run.result("gating_failures", &failures);
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Disagreement(format!(
            "gating checks disagree: {}",
            failures.join(", ")
        )))
    }
}
