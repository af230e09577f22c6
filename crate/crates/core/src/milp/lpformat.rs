use std::fmt::Write;

use super::MILProblem;

/// Renders the model in CPLEX LP text form. Ranged rows become a `_lo`/`_hi`
/// pair. Output depends only on the model, so it is stable across runs.
pub fn write_lp(mip: &MILProblem) -> String {
    let lp = &mip.lp;
    let names: Vec<String> = lp.vars.iter().map(|v| sanitize(&v.name)).collect();
    let mut out = String::new();
    out.push_str("Minimize\n obj:");
    let terms: Vec<(usize, f64)> = lp
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.cost != 0.0)
        .map(|(j, v)| (j, v.cost))
        .collect();
    push_terms(&mut out, &terms, &names);
    out.push_str("\nSubject To\n");
    for r in &lp.rows {
        let name = sanitize(&r.name);
        let both = r.lower.is_finite() && r.upper.is_finite();
        if both && r.lower == r.upper {
            push_row(&mut out, &name, &r.coeffs, &names, "=", r.upper);
        } else if both {
            push_row(&mut out, &format!("{name}_lo"), &r.coeffs, &names, ">=", r.lower);
            push_row(&mut out, &format!("{name}_hi"), &r.coeffs, &names, "<=", r.upper);
        } else if r.lower.is_finite() {
            push_row(&mut out, &name, &r.coeffs, &names, ">=", r.lower);
        } else if r.upper.is_finite() {
            push_row(&mut out, &name, &r.coeffs, &names, "<=", r.upper);
        }
    }
    out.push_str("Bounds\n");
    for (v, name) in lp.vars.iter().zip(&names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => writeln!(out, " {name} free"),
            (true, false) => writeln!(out, " {name} >= {}", v.lower),
            (false, true) => writeln!(out, " -inf <= {name} <= {}", v.upper),
            (true, true) if v.lower == v.upper => writeln!(out, " {name} = {}", v.lower),
            (true, true) => writeln!(out, " {} <= {name} <= {}", v.lower, v.upper),
        }
        .unwrap();
    }
    if !mip.binaries.is_empty() {
        out.push_str("Binaries\n");
        for &b in &mip.binaries {
            writeln!(out, " {}", names[b]).unwrap();
        }
    }
    out.push_str("End\n");
    out
}

fn push_row(out: &mut String, name: &str, coeffs: &[(usize, f64)], names: &[String], op: &str, rhs: f64) {
    write!(out, " {name}:").unwrap();
    push_terms(out, coeffs, names);
    writeln!(out, " {op} {rhs}").unwrap();
}

fn push_terms(out: &mut String, terms: &[(usize, f64)], names: &[String]) {
    if terms.is_empty() {
        out.push_str(" 0");
    }
    for (k, &(j, a)) in terms.iter().enumerate() {
        let sign = if a < 0.0 { "-" } else { "+" };
        if k == 0 && a >= 0.0 {
            write!(out, " {} {}", a, names[j]).unwrap();
        } else {
            write!(out, " {sign} {} {}", a.abs(), names[j]).unwrap();
        }
    }
}

/// LP names may not contain spaces or operators; brackets and commas are kept.
fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[],".contains(c) { c } else { '_' })
        .collect()
}
