use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::FormulationError;
use crate::model::{Direction, ParamKind, UncertaintyModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportRule {
    /// Exactly `gamma` parameters deviate.
    Exact,
    /// Between 0 and `gamma` parameters deviate.
    Upto,
}

impl std::str::FromStr for SupportRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SupportRule::Exact),
            "upto" => Ok(SupportRule::Upto),
            other => Err(format!("unknown support rule `{other}`")),
        }
    }
}

/// Upper limit on enumerated vertices.
pub const VERTEX_GUARD: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub vertices: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl ScenarioSet {
    pub fn nominal(p: usize) -> ScenarioSet {
        ScenarioSet {
            vertices: vec![vec![0.0; p]],
            labels: vec!["nominal".into()],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn push(&mut self, u: Vec<f64>, label: String) {
        self.vertices.push(u);
        self.labels.push(label);
    }

    /// Vertices over parameters of one kind, embedded in the full `u` space of `um`.
    pub fn over_kind(
        um: &UncertaintyModel,
        kind: ParamKind,
        gamma: usize,
        rule: SupportRule,
    ) -> Result<ScenarioSet, FormulationError> {
        Self::over_subset(um, &um.indices_of(kind), gamma, rule)
    }

    /// Vertices over all parameters of `um`.
    pub fn over_all(um: &UncertaintyModel, gamma: usize, rule: SupportRule) -> Result<ScenarioSet, FormulationError> {
        Self::over_subset(um, &(0..um.len()).collect::<Vec<_>>(), gamma, rule)
    }

    pub fn over_subset(
        um: &UncertaintyModel,
        subset: &[usize],
        gamma: usize,
        rule: SupportRule,
    ) -> Result<ScenarioSet, FormulationError> {
        let dirs: Vec<Direction> = subset.iter().map(|&j| um.parameters[j].direction).collect();
        let local = enumerate_vertices(&dirs, gamma, rule)?;
        let mut out = ScenarioSet {
            vertices: vec![],
            labels: vec![],
        };
        for v in local.vertices {
            let mut u = vec![0.0; um.len()];
            for (k, &j) in subset.iter().enumerate() {
                u[j] = v[k];
            }
            let label = label_for(um, &u);
            out.push(u, label);
        }
        Ok(out)
    }

    /// Every pairing of a vertex from `a` with one from `b`, `a` outermost.
    pub fn product(um: &UncertaintyModel, a: &ScenarioSet, b: &ScenarioSet) -> Result<ScenarioSet, FormulationError> {
        let n = a.len() * b.len();
        if n > VERTEX_GUARD {
            return Err(FormulationError::TooManyVertices(n));
        }
        let mut out = ScenarioSet {
            vertices: vec![],
            labels: vec![],
        };
        for ua in &a.vertices {
            for ub in &b.vertices {
                let u: Vec<f64> = ua.iter().zip(ub).map(|(x, y)| x + y).collect();
                let label = label_for(um, &u);
                out.push(u, label);
            }
        }
        Ok(out)
    }
}

/// Human-readable name of the deviating parameters in `u`.
pub fn label_for(um: &UncertaintyModel, u: &[f64]) -> String {
    let parts: Vec<String> = um
        .parameters
        .iter()
        .zip(u)
        .filter(|(_, &v)| v != 0.0)
        .map(|(p, &v)| {
            if v < 0.0 {
                format!("-{}", p.name)
            } else {
                p.name.clone()
            }
        })
        .collect();
    if parts.is_empty() {
        "nominal".into()
    } else {
        parts.join("+")
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Budget vertices with a common direction.
pub fn enumerate_budget_vertices(
    p: usize,
    gamma: usize,
    direction: Direction,
    rule: SupportRule,
) -> Result<ScenarioSet, FormulationError> {
    enumerate_vertices(&vec![direction; p], gamma, rule)
}

/// Budget vertices with per-parameter directions, supports in lexicographic order.
pub fn enumerate_vertices(
    dirs: &[Direction],
    gamma: usize,
    rule: SupportRule,
) -> Result<ScenarioSet, FormulationError> {
    let p = dirs.len();
    if gamma > p {
        return Err(FormulationError::GammaTooLarge { gamma, p });
    }
    let sizes: Vec<usize> = match rule {
        SupportRule::Exact => vec![gamma],
        SupportRule::Upto => (0..=gamma).collect(),
    };
    let two_sided = dirs.iter().filter(|&&d| d == Direction::TwoSided).count();
    let bound: usize = sizes
        .iter()
        .map(|&k| binomial(p, k).saturating_mul(1usize.checked_shl(two_sided.min(k) as u32).unwrap_or(usize::MAX)))
        .fold(0usize, |a, b| a.saturating_add(b));
    if bound > VERTEX_GUARD {
        return Err(FormulationError::TooManyVertices(bound));
    }
    let mut out = ScenarioSet {
        vertices: vec![],
        labels: vec![],
    };
    for k in sizes {
        for support in (0..p).combinations(k) {
            if support.is_empty() {
                out.push(vec![0.0; p], "nominal".into());
                continue;
            }
            let choices: Vec<Vec<f64>> = support
                .iter()
                .map(|&j| match dirs[j] {
                    Direction::OneSided => vec![1.0],
                    Direction::TwoSided => vec![-1.0, 1.0],
                })
                .collect();
            for signs in choices.into_iter().multi_cartesian_product() {
                let mut u = vec![0.0; p];
                for (&j, s) in support.iter().zip(&signs) {
                    u[j] = *s;
                }
                let label = support
                    .iter()
                    .zip(&signs)
                    .map(|(j, s)| if *s < 0.0 { format!("-p{j}") } else { format!("p{j}") })
                    .join("+");
                out.push(u, label);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_parameter_counts() {
        for (g, n) in [(1, 7), (2, 21), (3, 35)] {
            let s = enumerate_budget_vertices(7, g, Direction::OneSided, SupportRule::Exact).unwrap();
            assert_eq!(s.len(), n);
        }
    }

    #[test]
    fn upto_counts_and_order() {
        let s = enumerate_budget_vertices(3, 2, Direction::OneSided, SupportRule::Upto).unwrap();
        assert_eq!(s.len(), 1 + 3 + 3);
        assert_eq!(s.vertices[0], vec![0.0; 3]);
        assert_eq!(s.vertices[1], vec![1.0, 0.0, 0.0]);
        assert_eq!(s.vertices[6], vec![0.0, 1.0, 1.0]);
        assert_eq!(s.labels[4], "p0+p1");
    }

    #[test]
    fn gamma_zero_is_nominal_only() {
        let s = enumerate_budget_vertices(4, 0, Direction::OneSided, SupportRule::Exact).unwrap();
        assert_eq!(s.vertices, vec![vec![0.0; 4]]);
    }

    #[test]
    fn two_sided_doubles_per_support() {
        let s = enumerate_budget_vertices(3, 1, Direction::TwoSided, SupportRule::Exact).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.vertices[0], vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn gamma_above_p_rejected() {
        assert!(enumerate_budget_vertices(2, 3, Direction::OneSided, SupportRule::Exact).is_err());
    }

    #[test]
    fn guard_trips() {
        assert!(matches!(
            enumerate_budget_vertices(40, 6, Direction::OneSided, SupportRule::Exact),
            Err(FormulationError::TooManyVertices(_))
        ));
    }
}
