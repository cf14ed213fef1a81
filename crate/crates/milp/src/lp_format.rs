//! Writer for the LP text format (`Minimize` / `Subject To` / `Bounds` /
//! `Binaries` / `End`). Output is a pure function of the model.

use std::fmt::Write;

use crate::model::{ConstraintSense, MilpModel, VarId};

const TERMS_PER_LINE: usize = 6;

/// Formats `v` with 17 significant digits in C-style scientific notation.
pub fn format_coefficient(v: f64) -> String {
    let s = format!("{:.16e}", v);
    let (mantissa, exp) = s.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn bound_text(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format_coefficient(v)
    }
}

pub fn sanitize_name(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E') {
        out.insert(0, '_');
    }
    out
}

fn write_terms(out: &mut String, model: &MilpModel, terms: &[(VarId, f64)]) {
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", format_coefficient(c.abs()), sanitize_name(&model.variable(v).name));
    }
}

pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, model, &model.objective().terms);
    let constant = model.objective().constant;
    if constant != 0.0 {
        let sign = if constant < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {}", format_coefficient(constant.abs()));
    }
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", sanitize_name(&c.name));
        if c.terms.is_empty() {
            let _ = write!(out, " 0 {}", sanitize_name(&model.variables().first().map_or("x".into(), |v| v.name.clone())));
        }
        write_terms(&mut out, model, &c.terms);
        let sense = match c.sense {
            ConstraintSense::Le => "<=",
            ConstraintSense::Ge => ">=",
            ConstraintSense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", format_coefficient(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        let name = sanitize_name(&v.name);
        if v.is_binary() && v.lower == 0.0 && v.upper == 1.0 {
            continue;
        }
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if v.lower == v.upper {
            let _ = writeln!(out, " {name} = {}", format_coefficient(v.lower));
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", bound_text(v.lower), bound_text(v.upper));
        }
    }
    out.push_str("Binaries\n");
    let binaries: Vec<String> =
        model.variables().iter().filter(|v| v.is_binary()).map(|v| sanitize_name(&v.name)).collect();
    for chunk in binaries.chunks(10) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_coefficient(3.0), "3.0000000000000000e+00");
        assert_eq!(format_coefficient(0.1), "1.0000000000000001e-01");
        assert_eq!(format_coefficient(-1234.5), "-1.2345000000000000e+03");
        assert_eq!(format_coefficient(0.0), "0.0000000000000000e+00");
        let v: f64 = format_coefficient(std::f64::consts::PI).parse().unwrap();
        assert_eq!(v, std::f64::consts::PI);
    }

    #[test]
    fn empty_model_has_canonical_sections() {
        let m = MilpModel::new();
        assert_eq!(export_lp(&m), "Minimize\n obj:\nSubject To\nBounds\nBinaries\nEnd\n");
    }

    #[test]
    fn equality_rows_and_free_bounds() {
        let mut m = MilpModel::new();
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let y = m.add_continuous("y", 1.0, 1.0).unwrap();
        m.add_constraint("bal", &[(x, 1.0), (y, -2.0)], ConstraintSense::Eq, 0.5).unwrap();
        let text = export_lp(&m);
        assert!(text.contains(" bal: + 1.0000000000000000e+00 x - 2.0000000000000000e+00 y = 5.0000000000000000e-01\n"));
        assert!(text.contains(" x free\n"));
        assert!(text.contains(" y = 1.0000000000000000e+00\n"));
    }

    #[test]
    fn names_are_made_lp_safe() {
        assert_eq!(sanitize_name("x k"), "x_k");
        assert_eq!(sanitize_name("1abc"), "_1abc");
        assert_eq!(sanitize_name("eps"), "_eps");
    }
}
