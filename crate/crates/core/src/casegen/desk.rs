//! Three-zone desk case: north, south and an out-of-state zone.
//!
//! Most load sits in the south. Out-of-state wind and solar are the cheapest
//! stage-2 energy and reach the south over a large existing link, so a
//! deterministic plan leans on them. North has wind and geothermal, but the
//! north-south corridor can only be expanded in stage 1. When load is high and
//! out-of-state builds are limited, a plan without that corridor runs short in
//! the south.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    CorridorSpec, Effect, ParamSpec, Role, SliceSpec, StageSpec, StorageSpec, SystemSpec, TechSpec, ZoneSpec,
    FORMAT_VERSION,
};

/// Downside ranges at `u = 1` and upside amounts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskRanges {
    /// Renewable and storage capex increase (fraction).
    pub renewable_capex: f64,
    /// Gas variable cost increase (fraction).
    pub gas_price: f64,
    /// Thermal fixed O&M increase (fraction).
    pub thermal_fom: f64,
    /// Load increase in every zone (fraction).
    pub load: f64,
    /// Out-of-state stage-2 build limit as a fraction of the nominal limit.
    pub oos_limit_fraction: f64,
    /// Import reduction during peak slices (fraction).
    pub peak_import_cut: f64,
    pub flex_mw: f64,
    pub egs_mw: f64,
    pub diablo_mw: f64,
    /// Import availability increase (fraction).
    pub import_increase: f64,
}

impl Default for DeskRanges {
    fn default() -> Self {
        DeskRanges {
            renewable_capex: 0.5,
            gas_price: 1.0,
            thermal_fom: 1.0,
            load: 0.1,
            oos_limit_fraction: 0.2,
            peak_import_cut: 0.5,
            flex_mw: 300.0,
            egs_mw: 500.0,
            diablo_mw: 600.0,
            import_increase: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskCaseOptions {
    pub seed: u64,
    pub hours: usize,
    pub seasons: usize,
    pub ranges: DeskRanges,
}

impl Default for DeskCaseOptions {
    fn default() -> Self {
        DeskCaseOptions {
            seed: 7,
            hours: 24,
            seasons: 2,
            ranges: DeskRanges::default(),
        }
    }
}

pub const DOWNSIDE: [&str; 7] = [
    "renewable_capex",
    "gas_price",
    "thermal_fom",
    "load_growth",
    "oos_limited",
    "offshore_unavailable",
    "peak_imports",
];

pub const UPSIDE: [&str; 4] = ["load_flex", "egs", "diablo_extension", "import_increase"];

const PEAK_HOURS: std::ops::Range<usize> = 17..22;

struct Profiles {
    demand_south: Vec<f64>,
    demand_north: Vec<f64>,
    solar: Vec<f64>,
    solar_oos: Vec<f64>,
    wind_north: Vec<f64>,
    wind_oos: Vec<f64>,
    offshore: Vec<f64>,
}

fn profiles(opts: &DeskCaseOptions) -> Profiles {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut p = Profiles {
        demand_south: vec![],
        demand_north: vec![],
        solar: vec![],
        solar_oos: vec![],
        wind_north: vec![],
        wind_oos: vec![],
        offshore: vec![],
    };
    let tau = std::f64::consts::TAU;
    let hours = opts.hours as f64;
    for season in 0..opts.seasons {
        // Season 0 is summer: brighter, hotter evenings, calmer nights.
        let summer = season % 2 == 0;
        for h in 0..opts.hours {
            let x = h as f64 * 24.0 / hours;
            let mut noise = |amp: f64| 1.0 + amp * (rng.random::<f64>() * 2.0 - 1.0);
            let evening = (-((x - 19.0) / 3.0).powi(2)).exp();
            let day = (tau * (x - 6.0) / 24.0).sin().max(0.0);
            let base = if summer { 2000.0 } else { 1800.0 };
            let peak = if summer { 900.0 } else { 600.0 };
            p.demand_south.push((base + peak * evening + 200.0 * day) * noise(0.03));
            p.demand_north.push((350.0 + 100.0 * evening) * noise(0.03));
            let sun = if summer { 0.95 } else { 0.7 };
            p.solar.push((sun * day * noise(0.05)).clamp(0.0, 1.0));
            p.solar_oos.push(((sun + 0.05) * day * noise(0.05)).clamp(0.0, 1.0));
            let night = 0.5 + 0.5 * (tau * x / 24.0).cos();
            let wind = if summer { 0.3 } else { 0.4 };
            p.wind_north.push(((wind + 0.25 * night) * noise(0.15)).clamp(0.0, 1.0));
            p.wind_oos
                .push(((wind + 0.15 + 0.2 * night) * noise(0.15)).clamp(0.0, 1.0));
            p.offshore.push((0.5 * noise(0.2)).clamp(0.0, 1.0));
        }
    }
    p
}

#[allow(clippy::too_many_arguments)]
fn tech(
    name: &str,
    zone: &str,
    capex: [f64; 2],
    fom: f64,
    var: f64,
    availability: Vec<f64>,
    max_build: [f64; 2],
    existing: [f64; 2],
) -> TechSpec {
    TechSpec {
        name: name.into(),
        zone: zone.into(),
        capex_per_mw: capex,
        fom_per_mw_yr: fom,
        var_cost_per_mwh: var,
        availability,
        max_build_mw: max_build,
        existing_mw: existing,
        buildable: true,
        storage: None,
    }
}

fn fixed(mut t: TechSpec) -> TechSpec {
    t.buildable = false;
    t.capex_per_mw = [0.0, 0.0];
    t.max_build_mw = [0.0, 0.0];
    t
}

fn storage(mut t: TechSpec, duration_h: f64, efficiency: f64) -> TechSpec {
    t.storage = Some(StorageSpec { duration_h, efficiency });
    t
}

/// The desk system with its 7 downside and 4 upside parameters.
pub fn generate_desk_case(opts: &DeskCaseOptions) -> SystemSpec {
    let p = profiles(opts);
    let n = p.solar.len();
    let r = &opts.ranges;
    let ones = vec![1.0; n];
    let slice_hours = 8760.0 / n as f64;
    let peak: Vec<usize> = (0..n)
        .filter(|&s| PEAK_HOURS.contains(&((s % opts.hours) * 24 / opts.hours)))
        .collect();

    let technologies = vec![
        tech(
            "solar_S",
            "south",
            [70e3, 55e3],
            20e3,
            0.0,
            p.solar.clone(),
            [800.0, 600.0],
            [0.0; 2],
        ),
        tech(
            "solar_N",
            "north",
            [70e3, 55e3],
            20e3,
            0.0,
            p.solar.clone(),
            [2000.0, 3000.0],
            [0.0; 2],
        ),
        tech(
            "wind_N",
            "north",
            [110e3, 95e3],
            40e3,
            0.0,
            p.wind_north,
            [2000.0, 3000.0],
            [0.0; 2],
        ),
        tech(
            "offshore_N",
            "north",
            [260e3, 200e3],
            80e3,
            0.0,
            p.offshore,
            [0.0, 1500.0],
            [0.0; 2],
        ),
        tech(
            "geothermal_N",
            "north",
            [380e3, 380e3],
            110e3,
            5.0,
            vec![0.9; n],
            [200.0, 200.0],
            [0.0; 2],
        ),
        tech(
            "EGS_N",
            "north",
            [300e3, 300e3],
            90e3,
            5.0,
            vec![0.9; n],
            [0.0, 0.0],
            [0.0; 2],
        ),
        tech(
            "wind_oos",
            "oos",
            [0.0, 70e3],
            30e3,
            0.0,
            p.wind_oos,
            [0.0, 3000.0],
            [0.0; 2],
        ),
        tech(
            "solar_oos",
            "oos",
            [0.0, 40e3],
            15e3,
            0.0,
            p.solar_oos,
            [0.0, 3000.0],
            [0.0; 2],
        ),
        tech(
            "gas_S",
            "south",
            [150e3, 150e3],
            25e3,
            60.0,
            vec![0.95; n],
            [0.0, 200.0],
            [1300.0, 1300.0],
        ),
        storage(
            tech(
                "battery_S",
                "south",
                [60e3, 40e3],
                10e3,
                0.0,
                ones.clone(),
                [3000.0, 3000.0],
                [0.0; 2],
            ),
            4.0,
            0.85,
        ),
        fixed(tech(
            "import_S",
            "south",
            [0.0; 2],
            0.0,
            70.0,
            ones.clone(),
            [0.0; 2],
            [300.0, 300.0],
        )),
        fixed(tech(
            "nuclear_diablo_S",
            "south",
            [0.0; 2],
            0.0,
            10.0,
            vec![0.92; n],
            [0.0; 2],
            [600.0, 0.0],
        )),
        storage(
            fixed(tech("ev_flex_S", "south", [0.0; 2], 0.0, 0.0, ones, [0.0; 2], [0.0; 2])),
            4.0,
            0.95,
        ),
    ];

    let time_slices = (0..n)
        .map(|s| SliceSpec {
            weight_hours: slice_hours,
            duration_h: 1.0,
            sequence: s / opts.hours,
            demand_mw: vec![p.demand_north[s], p.demand_south[s], 0.0],
        })
        .collect();

    let renewables = [
        "solar_S",
        "solar_N",
        "wind_N",
        "offshore_N",
        "wind_oos",
        "solar_oos",
        "battery_S",
    ];
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let param = |name: &str, role: Role, effects: Vec<Effect>| ParamSpec {
        name: name.into(),
        role,
        two_sided: false,
        effects,
    };
    let oos_limit = |t: &str, nominal: f64| Effect::MaxBuildLimit {
        tech: t.into(),
        limit_mw: r.oos_limit_fraction * nominal,
    };
    let uncertainty = vec![
        param(
            DOWNSIDE[0],
            Role::Downside,
            vec![Effect::CapexScale {
                techs: names(&renewables),
                scale: r.renewable_capex,
            }],
        ),
        param(
            DOWNSIDE[1],
            Role::Downside,
            vec![Effect::VariableCostScale {
                techs: names(&["gas_S"]),
                scale: r.gas_price,
            }],
        ),
        param(
            DOWNSIDE[2],
            Role::Downside,
            vec![Effect::FixedCostScale {
                techs: names(&["gas_S", "geothermal_N"]),
                scale: r.thermal_fom,
            }],
        ),
        param(
            DOWNSIDE[3],
            Role::Downside,
            vec![Effect::LoadScale {
                zones: names(&["north", "south", "oos"]),
                scale: r.load,
            }],
        ),
        param(
            DOWNSIDE[4],
            Role::Downside,
            vec![oos_limit("wind_oos", 3000.0), oos_limit("solar_oos", 3000.0)],
        ),
        param(
            DOWNSIDE[5],
            Role::Downside,
            vec![Effect::MaxBuildLimit {
                tech: "offshore_N".into(),
                limit_mw: 0.0,
            }],
        ),
        param(
            DOWNSIDE[6],
            Role::Downside,
            vec![Effect::AvailabilityScale {
                tech: "import_S".into(),
                scale: -r.peak_import_cut,
                slices: peak,
            }],
        ),
        param(
            UPSIDE[0],
            Role::Upside,
            vec![Effect::FixedCapacityAdd {
                tech: "ev_flex_S".into(),
                add_mw: r.flex_mw,
            }],
        ),
        param(
            UPSIDE[1],
            Role::Upside,
            vec![Effect::MaxBuildAdd {
                tech: "EGS_N".into(),
                add_mw: r.egs_mw,
            }],
        ),
        param(
            UPSIDE[2],
            Role::Upside,
            vec![Effect::FixedCapacityAdd {
                tech: "nuclear_diablo_S".into(),
                add_mw: r.diablo_mw,
            }],
        ),
        param(
            UPSIDE[3],
            Role::Upside,
            vec![Effect::AvailabilityScale {
                tech: "import_S".into(),
                scale: r.import_increase,
                slices: vec![],
            }],
        ),
    ];

    SystemSpec {
        format_version: FORMAT_VERSION,
        name: format!("desk-seed{}", opts.seed),
        voll: 10_000.0,
        stages: vec![
            StageSpec {
                name: "near".into(),
                weight: 5.0,
                demand_scale: 1.0,
            },
            StageSpec {
                name: "far".into(),
                weight: 10.0,
                demand_scale: 1.3,
            },
        ],
        zones: ["north", "south", "oos"]
            .iter()
            .map(|z| ZoneSpec { name: z.to_string() })
            .collect(),
        transmission: vec![
            CorridorSpec {
                name: "north_south".into(),
                from: "north".into(),
                to: "south".into(),
                capex_per_mw: 60e3,
                max_mw: 3000.0,
                existing_mw: 200.0,
            },
            CorridorSpec {
                name: "oos_south".into(),
                from: "oos".into(),
                to: "south".into(),
                capex_per_mw: 250e3,
                max_mw: 1000.0,
                existing_mw: 2500.0,
            },
        ],
        technologies,
        time_slices,
        uncertainty,
    }
}
