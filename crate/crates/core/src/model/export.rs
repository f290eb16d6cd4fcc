//! Free-format MPS writer.
//!
//! Numbers are written in fixed point with 12 decimals, trailing zeros
//! trimmed, so files diff cleanly and parse in any MPS reader. Binary
//! variables get `BV` bounds; other integers sit between `INTORG`/`INTEND`
//! markers.

use std::fmt::Write;

use super::{Domain, MilpModel, Relation};
use crate::scalar::Scalar;

/// Fixed-point rendering used throughout the MPS output.
pub fn format_number(x: f64) -> String {
    let mut s = format!("{x:.12}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub fn write_mps<T: Scalar>(model: &MilpModel<T>, name: &str) -> String {
    let mut out = String::new();
    let n = model.variables.len();
    let _ = writeln!(out, "NAME {name}");
    let _ = writeln!(out, "OBJSENSE");
    let _ = writeln!(out, "    MAX");
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N obj");
    for row in &model.constraints {
        let tag = match row.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        let _ = writeln!(out, " {tag} {}", row.name);
    }

    // Column-major entries.
    let mut by_col: Vec<Vec<(String, f64)>> = vec![Vec::new(); n];
    for (j, c) in &model.objective {
        by_col[*j].push(("obj".into(), c.to_f64()));
    }
    for row in &model.constraints {
        for (j, c) in &row.coeffs {
            by_col[*j].push((row.name.clone(), c.to_f64()));
        }
    }
    let _ = writeln!(out, "COLUMNS");
    let mut in_int = false;
    let mut marker = 0;
    for (j, var) in model.variables.iter().enumerate() {
        let int = var.domain == Domain::Integer;
        if int != in_int {
            let kind = if int { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    MARKER{marker} 'MARKER' '{kind}'");
            marker += 1;
            in_int = int;
        }
        if by_col[j].is_empty() {
            let _ = writeln!(out, "    {} obj 0", var.name);
        }
        for (row, c) in &by_col[j] {
            let _ = writeln!(out, "    {} {} {}", var.name, row, format_number(*c));
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER{marker} 'MARKER' 'INTEND'");
    }

    let _ = writeln!(out, "RHS");
    for row in &model.constraints {
        let r = row.rhs.to_f64();
        if r != 0.0 {
            let _ = writeln!(out, "    rhs {} {}", row.name, format_number(r));
        }
    }

    let _ = writeln!(out, "BOUNDS");
    for var in &model.variables {
        if var.domain == Domain::Binary {
            let _ = writeln!(out, " BV bnd {}", var.name);
            continue;
        }
        let lo = var.lower.as_ref().map(|v| v.to_f64());
        let hi = var.upper.as_ref().map(|v| v.to_f64());
        match (lo, hi) {
            (Some(l), Some(u)) if l == u => {
                let _ = writeln!(out, " FX bnd {} {}", var.name, format_number(l));
            }
            (l, u) => {
                match l {
                    Some(l) if l != 0.0 => {
                        let _ = writeln!(out, " LO bnd {} {}", var.name, format_number(l));
                    }
                    Some(_) => {}
                    None => {
                        if u.is_none() {
                            let _ = writeln!(out, " FR bnd {}", var.name);
                        } else {
                            let _ = writeln!(out, " MI bnd {}", var.name);
                        }
                    }
                }
                if let Some(u) = u {
                    let _ = writeln!(out, " UP bnd {} {}", var.name, format_number(u));
                }
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}
