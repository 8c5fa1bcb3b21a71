use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use robust_cem::casegen::{desk_case, DeskCaseOptions};
use robust_cem::formulations::{build_deterministic, ScenarioSet, SupportRule};
use robust_cem::lp::{self, SolverOptions};
use robust_cem::model::Role;
use robust_cem::oracle::brute_force_worst_case;
use robust_cem::par::{EvalOptions, Exec};
use robust_cem::stress::{stress_test, RealizationGrid};

fn exec_modes(c: &mut Criterion) {
    let (_, lp, um) = desk_case(&DeskCaseOptions::default()).unwrap();
    let down = um.downside();
    let art = build_deterministic(&lp).unwrap();
    let res = lp::solve(&art.lp, &SolverOptions::default()).unwrap();
    let det = art.portfolio(&lp, &res, "det");
    let set = ScenarioSet::over_all(&down, 2, SupportRule::Exact).unwrap();
    let grid = RealizationGrid::k_at_a_time(&um, Role::Downside, 2, true).unwrap();

    let mut group = c.benchmark_group("desk");
    group.sample_size(10);
    for exec in [Exec::Parallel, Exec::Sequential] {
        let eval = EvalOptions {
            exec,
            ..EvalOptions::default()
        };
        let name = format!("{exec:?}").to_lowercase();
        group.bench_with_input(BenchmarkId::new("brute_force_g2", &name), &eval, |b, eval| {
            b.iter(|| brute_force_worst_case(&lp, &down, &det, &set, eval).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("stress_k2", &name), &eval, |b, eval| {
            b.iter(|| stress_test(&lp, &um, &det, &grid, eval).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, exec_modes);
criterion_main!(benches);
