use std::fmt::Write;

use super::{ConeKind, ConeProgram};

/// CBF-flavoured text: header, variables, objective, then one block per
/// cone with its affine rows `b − A x`. Meant for eyeballing and diffing,
/// not for loading into other solvers.
pub(super) fn render(p: &ConeProgram) -> String {
    let mut out = String::new();
    let form = match p.standard_form() {
        Ok(f) => f,
        Err(e) => return format!("# invalid program: {e}\n"),
    };
    let _ = writeln!(out, "# cone program dump");
    let _ = writeln!(out, "OBJSENSE MAX");
    let _ = writeln!(out, "VAR {}", form.n);
    for i in 0..form.n {
        let _ = writeln!(out, "  {i} {}", p.var_names[i]);
    }
    let _ = writeln!(
        out,
        "OBJ {} terms, offset {:e}",
        p.objective.terms().len(),
        form.objective_offset
    );
    for &(v, c) in p.objective.terms() {
        let _ = writeln!(out, "  {} {:e}", v.0, c);
    }
    let ranges = form.row_ranges();
    let _ = writeln!(
        out,
        "CON {} rows, {} cones",
        form.num_rows(),
        form.cones.len()
    );
    for (cone, range) in form.cones.iter().zip(ranges) {
        let tag = match cone {
            ConeKind::Zero(m) => format!("L= {m}"),
            ConeKind::Nonnegative(m) => format!("L+ {m}"),
            ConeKind::Exponential => "EXP 3".to_owned(),
            ConeKind::PsdTriangle(d) => format!("SVECPSD {d}"),
        };
        let _ = writeln!(out, "{tag}");
        for r in range {
            let _ = write!(out, "  b={:e}", form.b[r]);
            for &(c, v) in &form.a_rows[r] {
                let _ = write!(out, " {c}:{:e}", -v);
            }
            out.push('\n');
        }
    }
    out
}
