//! Declarative power-system description and its validation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    /// Cost of non-served energy, $/MWh.
    pub voll: f64,
    pub stages: Vec<StageSpec>,
    pub zones: Vec<ZoneSpec>,
    #[serde(default)]
    pub transmission: Vec<CorridorSpec>,
    pub technologies: Vec<TechSpec>,
    pub time_slices: Vec<SliceSpec>,
    #[serde(default)]
    pub uncertainty: Vec<ParamSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub name: String,
    /// Discounted number of years represented by the stage.
    pub weight: f64,
    #[serde(default = "one")]
    pub demand_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub name: String,
}

/// Candidate transmission corridor; expansion is a first-stage decision only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorSpec {
    pub name: String,
    pub from: String,
    pub to: String,
    /// Annualized $/MW-yr.
    pub capex_per_mw: f64,
    pub max_mw: f64,
    #[serde(default)]
    pub existing_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageSpec {
    /// Energy to power ratio in hours.
    pub duration_h: f64,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechSpec {
    pub name: String,
    pub zone: String,
    /// Annualized $/MW-yr for builds in each stage.
    pub capex_per_mw: [f64; 2],
    pub fom_per_mw_yr: f64,
    pub var_cost_per_mwh: f64,
    /// Per-slice availability factor.
    pub availability: Vec<f64>,
    pub max_build_mw: [f64; 2],
    #[serde(default)]
    pub existing_mw: [f64; 2],
    /// Fixed techs have no build or retirement decisions.
    #[serde(default = "yes")]
    pub buildable: bool,
    #[serde(default)]
    pub storage: Option<StorageSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    /// Hours per year represented by the slice.
    pub weight_hours: f64,
    #[serde(default = "one")]
    pub duration_h: f64,
    /// Storage cycles within slices sharing a sequence id.
    #[serde(default)]
    pub sequence: usize,
    /// Demand per zone in zone declaration order.
    pub demand_mw: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Downside,
    Upside,
}

/// A named uncertain parameter; every effect moves linearly with its `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub role: Role,
    #[serde(default)]
    pub two_sided: bool,
    pub effects: Vec<Effect>,
}

/// Stage-2 parameter shifts at `u = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Effect {
    CapexScale {
        techs: Vec<String>,
        scale: f64,
    },
    VariableCostScale {
        techs: Vec<String>,
        scale: f64,
    },
    FixedCostScale {
        techs: Vec<String>,
        scale: f64,
    },
    LoadScale {
        zones: Vec<String>,
        scale: f64,
    },
    MaxBuildLimit {
        tech: String,
        limit_mw: f64,
    },
    MaxBuildAdd {
        tech: String,
        add_mw: f64,
    },
    /// Scales the dispatch limit of a fixed tech; `slices` empty means all.
    AvailabilityScale {
        tech: String,
        scale: f64,
        #[serde(default)]
        slices: Vec<usize>,
    },
    FixedCapacityAdd {
        tech: String,
        add_mw: f64,
    },
}

impl Effect {
    pub fn is_cost(&self) -> bool {
        matches!(
            self,
            Effect::CapexScale { .. } | Effect::VariableCostScale { .. } | Effect::FixedCostScale { .. }
        )
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl SystemSpec {
    pub fn zone_index(&self, name: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.name == name)
    }

    pub fn tech_index(&self, name: &str) -> Option<usize> {
        self.technologies.iter().position(|t| t.name == name)
    }

    pub fn from_toml(text: &str) -> Result<SystemSpec, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("system spec serializes")
    }
}

/// Every rule the spec breaks; empty when the spec is well formed.
pub fn validate_system(spec: &SystemSpec) -> Vec<String> {
    let mut v = Vec::new();
    let nonneg = |x: f64| x.is_finite() && x >= 0.0;
    if spec.format_version != FORMAT_VERSION {
        v.push(format!(
            "format_version {} is not supported (expected {FORMAT_VERSION})",
            spec.format_version
        ));
    }
    if spec.zones.is_empty() {
        v.push("no zones".into());
    }
    if spec.time_slices.is_empty() {
        v.push("no time slices".into());
    }
    if spec.stages.len() != 2 {
        v.push(format!("{} stages given, exactly 2 required", spec.stages.len()));
    }
    for s in &spec.stages {
        if !(s.weight.is_finite() && s.weight > 0.0) {
            v.push(format!("stage {}: weight must be > 0", s.name));
        }
        if !nonneg(s.demand_scale) {
            v.push(format!("stage {}: demand_scale must be >= 0", s.name));
        }
    }
    let mut names = HashSet::new();
    for z in &spec.zones {
        if !names.insert(&z.name) {
            v.push(format!("zone {}: duplicate name", z.name));
        }
    }
    let mut names = HashSet::new();
    for c in &spec.transmission {
        if !names.insert(&c.name) {
            v.push(format!("corridor {}: duplicate name", c.name));
        }
        let from = spec.zone_index(&c.from);
        let to = spec.zone_index(&c.to);
        if from.is_none() || to.is_none() {
            v.push(format!("corridor {}: unknown zone", c.name));
        } else if from == to {
            v.push(format!("corridor {}: endpoints must be distinct zones", c.name));
        }
        if !nonneg(c.capex_per_mw) || !nonneg(c.max_mw) || !nonneg(c.existing_mw) {
            v.push(format!("corridor {}: costs and limits must be >= 0", c.name));
        }
    }
    let slices = spec.time_slices.len();
    let mut names = HashSet::new();
    for t in &spec.technologies {
        if !names.insert(&t.name) {
            v.push(format!("technology {}: duplicate name", t.name));
        }
        if spec.zone_index(&t.zone).is_none() {
            v.push(format!("technology {}: unknown zone {}", t.name, t.zone));
        }
        let numbers = t
            .capex_per_mw
            .iter()
            .chain(&t.max_build_mw)
            .chain(&t.existing_mw)
            .chain([&t.fom_per_mw_yr, &t.var_cost_per_mwh]);
        if !numbers.into_iter().all(|&x| nonneg(x)) {
            v.push(format!("technology {}: costs and capacities must be >= 0", t.name));
        }
        if t.availability.len() != slices {
            v.push(format!(
                "technology {}: {} availability values for {slices} slices",
                t.name,
                t.availability.len()
            ));
        }
        for (s, a) in t.availability.iter().enumerate() {
            if !(0.0..=1.0).contains(a) {
                v.push(format!(
                    "technology {}: availability {a} in slice {s} outside [0, 1]",
                    t.name
                ));
            }
        }
        if let Some(st) = &t.storage {
            if !(st.efficiency > 0.0 && st.efficiency <= 1.0) {
                v.push(format!("technology {}: storage efficiency must be in (0, 1]", t.name));
            }
            if !(st.duration_h.is_finite() && st.duration_h > 0.0) {
                v.push(format!("technology {}: storage duration must be > 0", t.name));
            }
        }
        if !(spec.voll > t.var_cost_per_mwh) {
            v.push(format!(
                "voll {} does not exceed variable cost {} of technology {}",
                spec.voll, t.var_cost_per_mwh, t.name
            ));
        }
    }
    if !(spec.voll.is_finite() && spec.voll > 0.0) {
        v.push("voll must be > 0".into());
    }
    let mut total_weight = 0.0;
    for (s, sl) in spec.time_slices.iter().enumerate() {
        total_weight += sl.weight_hours;
        if !nonneg(sl.weight_hours) || !(sl.duration_h.is_finite() && sl.duration_h > 0.0) {
            v.push(format!("slice {s}: weight must be >= 0 and duration > 0"));
        }
        if sl.demand_mw.len() != spec.zones.len() {
            v.push(format!(
                "slice {s}: {} demand values for {} zones",
                sl.demand_mw.len(),
                spec.zones.len()
            ));
        }
        if !sl.demand_mw.iter().all(|&d| nonneg(d)) {
            v.push(format!("slice {s}: demand must be >= 0"));
        }
    }
    if !spec.time_slices.is_empty() && !(total_weight > 0.0) {
        v.push("slice weights sum to zero".into());
    }
    validate_uncertainty(spec, &mut v);
    v
}

fn validate_uncertainty(spec: &SystemSpec, v: &mut Vec<String>) {
    let mut names = HashSet::new();
    for p in &spec.uncertainty {
        if !names.insert(&p.name) {
            v.push(format!("parameter {}: duplicate name", p.name));
        }
        if p.effects.is_empty() {
            v.push(format!("parameter {}: no effects", p.name));
        }
        let costs = p.effects.iter().filter(|e| e.is_cost()).count();
        if costs != 0 && costs != p.effects.len() {
            v.push(format!("parameter {}: mixes cost and right-hand-side effects", p.name));
        }
        for e in &p.effects {
            let techs: Vec<&String> = match e {
                Effect::CapexScale { techs, .. }
                | Effect::VariableCostScale { techs, .. }
                | Effect::FixedCostScale { techs, .. } => techs.iter().collect(),
                Effect::MaxBuildLimit { tech, .. }
                | Effect::MaxBuildAdd { tech, .. }
                | Effect::AvailabilityScale { tech, .. }
                | Effect::FixedCapacityAdd { tech, .. } => vec![tech],
                Effect::LoadScale { zones, .. } => {
                    for z in zones {
                        if spec.zone_index(z).is_none() {
                            v.push(format!("parameter {}: unknown zone {z}", p.name));
                        }
                    }
                    vec![]
                }
            };
            for t in techs {
                match spec.tech_index(t) {
                    None => v.push(format!("parameter {}: unknown technology {t}", p.name)),
                    Some(k) => {
                        let tech = &spec.technologies[k];
                        let needs_fixed =
                            matches!(e, Effect::AvailabilityScale { .. } | Effect::FixedCapacityAdd { .. });
                        let needs_buildable = matches!(
                            e,
                            Effect::MaxBuildLimit { .. } | Effect::MaxBuildAdd { .. } | Effect::CapexScale { .. }
                        );
                        if needs_fixed && tech.buildable {
                            v.push(format!(
                                "parameter {}: technology {t} must be fixed (non-buildable)",
                                p.name
                            ));
                        }
                        if needs_buildable && !tech.buildable {
                            v.push(format!("parameter {}: technology {t} is not buildable", p.name));
                        }
                    }
                }
            }
            if let Effect::AvailabilityScale { slices, .. } = e {
                if slices.iter().any(|&s| s >= spec.time_slices.len()) {
                    v.push(format!("parameter {}: slice index out of range", p.name));
                }
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn two_zone() -> SystemSpec {
        SystemSpec {
            format_version: FORMAT_VERSION,
            name: "two-zone".into(),
            voll: 1000.0,
            stages: vec![
                StageSpec {
                    name: "s1".into(),
                    weight: 1.0,
                    demand_scale: 1.0,
                },
                StageSpec {
                    name: "s2".into(),
                    weight: 1.0,
                    demand_scale: 1.0,
                },
            ],
            zones: vec![ZoneSpec { name: "a".into() }, ZoneSpec { name: "b".into() }],
            transmission: vec![CorridorSpec {
                name: "ab".into(),
                from: "a".into(),
                to: "b".into(),
                capex_per_mw: 5.0,
                max_mw: 100.0,
                existing_mw: 0.0,
            }],
            technologies: vec![TechSpec {
                name: "gas".into(),
                zone: "a".into(),
                capex_per_mw: [10.0, 10.0],
                fom_per_mw_yr: 1.0,
                var_cost_per_mwh: 20.0,
                availability: vec![1.0],
                max_build_mw: [100.0, 100.0],
                existing_mw: [0.0, 0.0],
                buildable: true,
                storage: None,
            }],
            time_slices: vec![SliceSpec {
                weight_hours: 1.0,
                duration_h: 1.0,
                sequence: 0,
                demand_mw: vec![5.0, 5.0],
            }],
            uncertainty: vec![],
        }
    }

    #[test]
    fn well_formed_spec_has_no_violations() {
        assert!(validate_system(&two_zone()).is_empty());
    }

    #[test]
    fn availability_above_one_is_named() {
        let mut s = two_zone();
        s.technologies[0].availability[0] = 1.2;
        let v = validate_system(&s);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("gas") && v[0].contains("slice 0"), "{v:?}");
    }

    #[test]
    fn voll_below_variable_cost_is_named() {
        let mut s = two_zone();
        s.voll = 15.0;
        let v = validate_system(&s);
        assert_eq!(v.len(), 1);
        assert!(v[0].starts_with("voll"), "{v:?}");
    }

    #[test]
    fn toml_round_trip() {
        let s = two_zone();
        assert_eq!(SystemSpec::from_toml(&s.to_toml()).unwrap(), s);
    }
}
