//! Number formatting and CSV helpers shared by every report.

/// `x` rounded to 12 significant digits, printed in shortest round-trip form;
/// exponent notation outside `[1e-4, 1e15)`.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if (1e-4..1e15).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Quote a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Header line naming the schema and its version.
pub fn schema_line(name: &str) -> String {
    format!("#schema:{name}/1\n")
}
