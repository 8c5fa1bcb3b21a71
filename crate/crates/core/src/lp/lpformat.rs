//! CPLEX LP text export.

use std::collections::HashSet;
use std::fmt::Write;

use super::{LpInstance, Sense};

const TERMS_PER_LINE: usize = 8;

const RESERVED: &[&str] = &[
    "min", "minimize", "minimum", "max", "maximize", "maximum", "st", "s.t.", "st.", "subject", "such", "bounds",
    "bound", "free", "inf", "infinity", "end", "general", "generals", "gen", "integer", "integers", "binary",
    "binaries", "bin", "semi", "semis", "sos", "obj",
];

/// Map arbitrary names to unique LP-format identifiers.
///
/// Characters outside `[A-Za-z0-9_.]` become `_`, names that would parse as a
/// number or keyword get a leading `_`, and repeats get a `_<k>` suffix.
pub fn sanitize_names(names: &[String]) -> Vec<String> {
    let mut used = HashSet::new();
    names
        .iter()
        .map(|name| {
            let mut s: String = name
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            let bad_start = s
                .chars()
                .next()
                .is_none_or(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E');
            if bad_start || RESERVED.contains(&s.to_ascii_lowercase().as_str()) {
                s.insert(0, '_');
            }
            let mut candidate = s.clone();
            let mut k = 1;
            while !used.insert(candidate.to_ascii_lowercase()) {
                candidate = format!("{s}_{k}");
                k += 1;
            }
            candidate
        })
        .collect()
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn write_terms(out: &mut String, terms: &[(f64, &str)]) {
    for (k, (a, name)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a.is_sign_negative() { '-' } else { '+' };
        write!(out, " {sign} {} {name}", num(a.abs())).unwrap();
    }
}

/// Render `lp` as CPLEX LP text with sanitized, unique names.
///
/// Every column appears in the objective (zero coefficients included) so a
/// reader sees the full column set in order.
pub fn export_lp(lp: &LpInstance) -> String {
    let cols = sanitize_names(&lp.col_names);
    let rows = sanitize_names(&lp.row_names);
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    let obj: Vec<(f64, &str)> = lp.objective.iter().zip(&cols).map(|(&c, n)| (c, n.as_str())).collect();
    write_terms(&mut out, &obj);
    if lp.objective_offset != 0.0 {
        let sign = if lp.objective_offset < 0.0 { '-' } else { '+' };
        write!(out, " {sign} {}", num(lp.objective_offset.abs())).unwrap();
    }
    out.push_str("\nSubject To\n");
    for (row, name) in lp.rows.iter().zip(&rows) {
        write!(out, " {name}:").unwrap();
        let mut terms: Vec<(f64, &str)> = row.coeffs.iter().map(|&(j, a)| (a, cols[j].as_str())).collect();
        if terms.is_empty() && !cols.is_empty() {
            terms.push((0.0, cols[0].as_str()));
        }
        write_terms(&mut out, &terms);
        let sense = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        writeln!(out, " {sense} {}", num(row.rhs)).unwrap();
    }
    let mut bounds = String::new();
    for (b, name) in lp.bounds.iter().zip(&cols) {
        match (b.is_free(), b.upper.is_finite()) {
            (false, false) => {}
            (false, true) => writeln!(bounds, " {name} <= {}", num(b.upper)).unwrap(),
            (true, false) => writeln!(bounds, " {name} free").unwrap(),
            (true, true) => writeln!(bounds, " -inf <= {name} <= {}", num(b.upper)).unwrap(),
        }
    }
    if !bounds.is_empty() {
        out.push_str("Bounds\n");
        out.push_str(&bounds);
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{Bounds, LpBuilder};

    #[test]
    fn sanitize_handles_collisions_and_keywords() {
        let names: Vec<String> = ["a b", "a_b", "end", "3x", "", "e1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(sanitize_names(&names), vec!["a_b", "a_b_1", "_end", "_3x", "_", "_e1"]);
    }

    #[test]
    fn one_variable_lp_is_five_lines() {
        let mut b = LpBuilder::new();
        let x = b.add_col("x", 1.0, Bounds::NONNEG);
        b.add_row("c", [(x, 1.0)], Sense::Ge, 3.0);
        let text = export_lp(&b.build());
        assert_eq!(text, "Minimize\n obj: + 1.0 x\nSubject To\n c: + 1.0 x >= 3.0\nEnd\n");
    }

    #[test]
    fn bounds_section_covers_all_cases() {
        let mut b = LpBuilder::new();
        b.add_col("a", 1.0, Bounds::upper(2.5));
        b.add_col("f", 0.0, Bounds::FREE);
        b.add_col(
            "g",
            -1.0,
            Bounds {
                lower: f64::NEG_INFINITY,
                upper: 1e-12,
            },
        );
        let text = export_lp(&b.build());
        assert!(text.contains("Bounds\n a <= 2.5\n f free\n -inf <= g <= 1e-12\nEnd\n"));
        assert!(text.contains(" obj: + 1.0 a + 0.0 f - 1.0 g"));
    }
}
