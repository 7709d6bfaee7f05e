//! Identity suite over the built-in corpus.

use serde::Serialize;
use serde_json::json;

use covertime::corpus::builtin;
use covertime::exact::{
    exact_cover_time, hitting_from_resistance, matthews_bounds, max_relative_gap,
    resistance_triangle_excess, triangle_equation_residual, verify_commute_resistance, WalkTables,
};
use covertime::packing::pack;
use covertime::surface::{hex_refine, triangular_torus};

use crate::commands::{pretty, resolve, Failure};
use crate::Format;

#[derive(Debug, Serialize)]
struct Row {
    check: &'static str,
    subject: String,
    value: f64,
    tolerance: f64,
    pass: bool,
}

impl Row {
    fn at_most(check: &'static str, subject: &str, value: f64, tolerance: f64) -> Self {
        Row {
            check,
            subject: subject.to_string(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

fn rows() -> Result<Vec<Row>, Failure> {
    let mut rows = Vec::new();
    for entry in builtin() {
        let (name, g) = (entry.name.as_str(), &entry.graph);
        let t = WalkTables::compute(g)?;
        rows.push(Row::at_most(
            "triangle_equation",
            name,
            triangle_equation_residual(&t.d),
            1e-9,
        ));
        rows.push(Row::at_most(
            "commute_resistance",
            name,
            verify_commute_resistance(g, &t.c, &t.r).max_rel,
            1e-8,
        ));
        rows.push(Row::at_most(
            "resistance_triangle",
            name,
            resistance_triangle_excess(&t.r),
            1e-9,
        ));
        rows.push(Row::at_most(
            "hitting_from_resistance",
            name,
            max_relative_gap(&hitting_from_resistance(g, &t.r), &t.h),
            1e-8,
        ));
        if g.n() <= 10 {
            let all: Vec<usize> = (0..g.n()).collect();
            let m = matthews_bounds(&t.h, &all)?;
            let cover = exact_cover_time(g)?.cover_time;
            let slack = 1e-9 * (1.0 + cover);
            // signed distance outside the bracket; non-positive when it holds
            let excess = (m.lower - cover).max(cover - m.upper);
            rows.push(Row::at_most("matthews_bracket", name, excess, slack));
        }
    }
    let mut tori: Vec<(String, _)> = (3..=6)
        .map(|k| {
            (
                format!("triangular_torus({k})"),
                triangular_torus(k).unwrap(),
            )
        })
        .collect();
    tori.push((
        "hex_refine(triangular_torus(3))".into(),
        hex_refine(&triangular_torus(3).unwrap()),
    ));
    for (name, tri) in &tori {
        let (p, lay) = pack(tri, 1e-10)?;
        rows.push(Row::at_most("packing_angle", name, p.angle_residual, 1e-10));
        rows.push(Row::at_most(
            "packing_tangency",
            name,
            lay.tangency_residual,
            1e-7,
        ));
    }
    Ok(rows)
}

pub fn run(format: Option<Format>) -> Result<(String, bool), Failure> {
    let format = resolve(format, &[Format::Text, Format::Json], "verify")?;
    let rows = rows()?;
    let ok = rows.iter().all(|r| r.pass);
    if format == Format::Json {
        let doc = json!({ "command": "verify", "config": { "corpus": "builtin" }, "passed": ok, "rows": rows });
        return Ok((pretty(&doc), ok));
    }
    let mut out = format!(
        "{:<24} {:<32} {:>12} {:>9}  {}\n",
        "check", "subject", "value", "tol", "result"
    );
    for r in &rows {
        out.push_str(&format!(
            "{:<24} {:<32} {:>12.3e} {:>9.0e}  {}\n",
            r.check,
            r.subject,
            r.value,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        ));
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} checks, {failed} failed\n", rows.len()));
    Ok((out, ok))
}
