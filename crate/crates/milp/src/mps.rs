//! Fixed-format MPS export, for handing a model to an external solver.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::problem::{MipProblem, ObjectiveSense, RowSense};

/// Renders `p` as fixed-format MPS text.
///
/// Names longer than eight characters or containing spaces are replaced by
/// generated `R`/`C` names. Maximization is written with an `OBJSENSE` section.
pub fn to_mps(p: &MipProblem, name: &str) -> String {
    let lp = &p.lp;
    let row_names: Vec<String> = lp
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| mps_name(c.name.as_deref(), 'R', i))
        .collect();
    let col_names: Vec<String> = lp
        .variables
        .iter()
        .enumerate()
        .map(|(j, v)| mps_name(v.name.as_deref(), 'C', j))
        .collect();

    // Column-wise view of the matrix.
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, c) in lp.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            match cols[j].last_mut() {
                Some(last) if last.0 == i => last.1 += a,
                _ => cols[j].push((i, a)),
            }
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", truncate(name));
    if lp.sense == ObjectiveSense::Maximize {
        out.push_str("OBJSENSE\n    MAX\n");
    }
    out.push_str("ROWS\n");
    line(&mut out, "N", "COST", "", None, "", None);
    for (c, rn) in lp.constraints.iter().zip(&row_names) {
        let s = match c.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        line(&mut out, s, rn, "", None, "", None);
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (j, cn) in col_names.iter().enumerate() {
        let int = p.kinds[j].is_integral();
        if int != in_int {
            let tag = if int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{marker:07}  'MARKER'                 {tag}");
            marker += 1;
            in_int = int;
        }
        let mut entries: Vec<(&str, f64)> = Vec::new();
        let cost = lp.variables[j].cost;
        if cost != 0.0 {
            entries.push(("COST", cost));
        }
        for &(i, a) in &cols[j] {
            if a != 0.0 {
                entries.push((&row_names[i], a));
            }
        }
        if entries.is_empty() {
            entries.push(("COST", 0.0));
        }
        for pair in entries.chunks(2) {
            let second = pair.get(1).copied();
            line(&mut out, "", cn, pair[0].0, Some(pair[0].1), second.map_or("", |e| e.0), second.map(|e| e.1));
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{marker:07}  'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    let rhs: Vec<(&str, f64)> = lp
        .constraints
        .iter()
        .zip(&row_names)
        .filter(|(c, _)| c.rhs != 0.0)
        .map(|(c, n)| (n.as_str(), c.rhs))
        .collect();
    for pair in rhs.chunks(2) {
        let second = pair.get(1).copied();
        line(&mut out, "", "RHS", pair[0].0, Some(pair[0].1), second.map_or("", |e| e.0), second.map(|e| e.1));
    }

    out.push_str("BOUNDS\n");
    for (v, cn) in lp.variables.iter().zip(&col_names) {
        let (l, u) = (v.lower, v.upper);
        if l == u {
            line(&mut out, "FX", "BND", cn, Some(l), "", None);
            continue;
        }
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            line(&mut out, "FR", "BND", cn, None, "", None);
            continue;
        }
        if l == f64::NEG_INFINITY {
            line(&mut out, "MI", "BND", cn, None, "", None);
        } else if l != 0.0 {
            line(&mut out, "LO", "BND", cn, Some(l), "", None);
        }
        if u.is_finite() {
            line(&mut out, "UP", "BND", cn, Some(u), "", None);
        } else {
            line(&mut out, "PL", "BND", cn, None, "", None);
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(p: &MipProblem, name: &str, path: &Path) -> io::Result<()> {
    std::fs::write(path, to_mps(p, name))
}

fn mps_name(name: Option<&str>, prefix: char, k: usize) -> String {
    match name {
        Some(n) if !n.is_empty() && n.len() <= 8 && n.is_ascii() && !n.contains(' ') => n.to_string(),
        _ => format!("{prefix}{k:07}"),
    }
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(8) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Writes one data line using the fixed field columns 2-3, 5-12, 15-22,
/// 25-36, 40-47 and 50-61.
fn line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: Option<f64>, f5: &str, f6: Option<f64>) {
    let n4 = f4.map(num12).unwrap_or_default();
    let n6 = f6.map(num12).unwrap_or_default();
    let s = format!(" {f1:<2} {f2:<8}  {f3:<8}  {n4:>12}   {f5:<8}  {n6:>12}");
    out.push_str(s.trim_end());
    out.push('\n');
}

/// Formats a number in at most twelve characters, keeping as many digits as fit.
pub(crate) fn num12(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        return plain;
    }
    for prec in (0..=10).rev() {
        let s = format!("{v:.prec$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{v:.0e}")
}
