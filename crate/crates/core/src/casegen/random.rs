//! Small random systems for property tests, and the penalty witness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lp::Sense;
use crate::model::{
    ColKind, Column, Constraint, CorridorSpec, Direction, Effect, ParamKind, ParamSpec, Parameter, Role, SliceSpec,
    StageSpec, StorageSpec, SystemSpec, TechSpec, TwoStageLp, UncertaintyModel, ZoneSpec, FORMAT_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamMix {
    Any,
    CostOnly,
    RhsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomCaseOptions {
    pub max_zones: usize,
    pub max_techs: usize,
    pub max_slices: usize,
    pub max_params: usize,
    /// Minimum number of parameters; clamped to `max_params`.
    pub min_params: usize,
    pub mix: ParamMix,
    pub storage: bool,
}

impl Default for RandomCaseOptions {
    fn default() -> Self {
        RandomCaseOptions {
            max_zones: 3,
            max_techs: 5,
            max_slices: 3,
            max_params: 4,
            min_params: 1,
            mix: ParamMix::Any,
            storage: true,
        }
    }
}

/// A valid random system with downside parameters; the seed fixes everything.
pub fn random_case(seed: u64, opts: &RandomCaseOptions) -> SystemSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nz = rng.random_range(1..=opts.max_zones.max(1));
    let ns = rng.random_range(1..=opts.max_slices.max(1));
    let nt = rng.random_range(2.min(opts.max_techs)..=opts.max_techs.max(1));
    let zones: Vec<ZoneSpec> = (0..nz).map(|z| ZoneSpec { name: format!("z{z}") }).collect();
    let transmission = (1..nz)
        .map(|z| CorridorSpec {
            name: format!("c{z}"),
            from: format!("z{}", z - 1),
            to: format!("z{z}"),
            capex_per_mw: rng.random_range(1.0..20.0),
            max_mw: 50.0,
            existing_mw: rng.random_range(0.0..10.0),
        })
        .collect();
    let time_slices = (0..ns)
        .map(|_| SliceSpec {
            weight_hours: rng.random_range(1.0..5.0),
            duration_h: 1.0,
            sequence: 0,
            demand_mw: (0..nz).map(|_| rng.random_range(0.0..20.0)).collect(),
        })
        .collect();
    let mut technologies = Vec::new();
    for k in 0..nt {
        let buildable = k == 0 || rng.random_bool(0.7);
        let existing = if buildable {
            [0.0, rng.random_range(0.0..5.0)]
        } else {
            [rng.random_range(0.0..15.0), rng.random_range(0.0..15.0)]
        };
        let storage = (opts.storage && k > 0 && rng.random_bool(0.2)).then(|| StorageSpec {
            duration_h: rng.random_range(1.0..4.0),
            efficiency: rng.random_range(0.7..1.0),
        });
        technologies.push(TechSpec {
            name: format!("t{k}"),
            zone: format!("z{}", rng.random_range(0..nz)),
            capex_per_mw: if buildable {
                [rng.random_range(5.0..30.0), rng.random_range(5.0..30.0)]
            } else {
                [0.0, 0.0]
            },
            fom_per_mw_yr: rng.random_range(0.0..5.0),
            var_cost_per_mwh: rng.random_range(0.0..50.0),
            availability: (0..ns).map(|_| rng.random_range(0.2..1.0)).collect(),
            max_build_mw: if buildable {
                [rng.random_range(5.0..40.0), rng.random_range(5.0..40.0)]
            } else {
                [0.0, 0.0]
            },
            existing_mw: existing,
            buildable,
            storage,
        });
    }
    let buildable: Vec<usize> = (0..nt).filter(|&k| technologies[k].buildable).collect();
    let fixed: Vec<usize> = (0..nt).filter(|&k| !technologies[k].buildable).collect();
    let np = rng.random_range(opts.min_params.min(opts.max_params).max(1)..=opts.max_params.max(1));
    let mut uncertainty = Vec::new();
    let (mut limited, mut derated) = (Vec::new(), Vec::new());
    for j in 0..np {
        let cost = match opts.mix {
            ParamMix::CostOnly => true,
            ParamMix::RhsOnly => false,
            ParamMix::Any => rng.random_bool(0.5),
        };
        let pick = |rng: &mut ChaCha8Rng, v: &[usize]| technologies[v[rng.random_range(0..v.len())]].name.clone();
        let effect = if cost {
            match rng.random_range(0..3) {
                0 => Effect::CapexScale {
                    techs: vec![pick(&mut rng, &buildable)],
                    scale: rng.random_range(0.1..1.0),
                },
                1 => Effect::VariableCostScale {
                    techs: vec![pick(&mut rng, &(0..nt).collect::<Vec<_>>())],
                    scale: rng.random_range(0.1..1.0),
                },
                _ => Effect::FixedCostScale {
                    techs: vec![pick(&mut rng, &buildable)],
                    scale: rng.random_range(0.1..1.0),
                },
            }
        } else {
            // Two cuts to one limit could leave a negative right-hand side.
            let t_limit = pick(&mut rng, &buildable);
            let t_fixed = (!fixed.is_empty()).then(|| pick(&mut rng, &fixed));
            let choice = rng.random_range(0..if fixed.is_empty() { 2 } else { 3 });
            match choice {
                1 if !limited.contains(&t_limit) => {
                    let t = t_limit.clone();
                    limited.push(t.clone());
                    let nominal = technologies.iter().find(|x| x.name == t).unwrap().max_build_mw[1];
                    Effect::MaxBuildLimit {
                        tech: t,
                        limit_mw: nominal * rng.random_range(0.0..0.8),
                    }
                }
                2 if !derated.contains(t_fixed.as_ref().unwrap()) => Effect::AvailabilityScale {
                    tech: {
                        let t = t_fixed.clone().unwrap();
                        derated.push(t.clone());
                        t
                    },
                    scale: -rng.random_range(0.1..0.9),
                    slices: vec![],
                },
                _ => Effect::LoadScale {
                    zones: vec![format!("z{}", rng.random_range(0..nz))],
                    scale: rng.random_range(0.05..0.5),
                },
            }
        };
        uncertainty.push(ParamSpec {
            name: format!("p{j}"),
            role: Role::Downside,
            two_sided: false,
            effects: vec![effect],
        });
    }
    SystemSpec {
        format_version: FORMAT_VERSION,
        name: format!("random-{seed}"),
        voll: rng.random_range(200.0..500.0),
        stages: vec![
            StageSpec {
                name: "s1".into(),
                weight: rng.random_range(1.0..3.0),
                demand_scale: 1.0,
            },
            StageSpec {
                name: "s2".into(),
                weight: rng.random_range(1.0..3.0),
                demand_scale: rng.random_range(1.0..1.5),
            },
        ],
        zones,
        transmission,
        technologies,
        time_slices,
        uncertainty,
    }
}

/// Two stage-2 resources, one strictly cheaper, each of which can drop out,
/// with a budget of one outage. A unit of demand is met by `xa` (cost 1),
/// `xb` (cost 2), unserved energy (cost 10), or first-stage capacity `x1`
/// (cost 3) that lowers stage-2 demand one for one.
///
/// Exact robust value is 2. The penalty relaxation lets the adversary split
/// its budget across both resources, which is worth 3 for any `M >= 3`.
pub fn penalty_witness() -> (TwoStageLp, UncertaintyModel) {
    let col = |name: &str, kind, cost| Column {
        name: name.into(),
        kind,
        cost,
        free: false,
    };
    let row = |name: &str, coeffs: Vec<(usize, f64)>, sense, rhs, link| Constraint {
        name: name.into(),
        coeffs,
        sense,
        rhs,
        link,
    };
    let lp = TwoStageLp {
        name: "penalty-witness".into(),
        first: vec![col("x1", ColKind::Investment, 3.0)],
        second: vec![
            col("xa", ColKind::Operation, 1.0),
            col("xb", ColKind::Operation, 2.0),
            col("unserved", ColKind::Slack, 10.0),
        ],
        first_rows: vec![row("x1max", vec![(0, 1.0)], Sense::Le, 1.0, vec![])],
        second_rows: vec![
            row("xa_avail", vec![(0, 1.0)], Sense::Le, 1.0, vec![]),
            row("xb_avail", vec![(1, 1.0)], Sense::Le, 1.0, vec![]),
            row(
                "balance",
                vec![(0, 1.0), (1, 1.0), (2, 1.0)],
                Sense::Ge,
                1.0,
                vec![(0, -1.0)],
            ),
        ],
        offset: 0.0,
        slack_hours: vec![(2, 1.0)],
    };
    let outage = |name: &str, row: usize| Parameter {
        name: name.into(),
        kind: ParamKind::Rhs,
        direction: Direction::OneSided,
        role: Role::Downside,
        entries: vec![(row, -1.0)],
    };
    let um = UncertaintyModel::new(vec![outage("xa_out", 0), outage("xb_out", 1)]).with_budgets(1, 0.0, 1);
    (lp, um)
}
