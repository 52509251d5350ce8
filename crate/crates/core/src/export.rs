//! CSV renderings of densities and scenario tables.
//!
//! Every file starts with `# key: value` metadata lines. Floats are written in
//! shortest round-trip form (exponent notation when very small), so they parse
//! back bit-for-bit.

use std::fmt::Write;

use crate::scenarios::{LadderTable, Outcome, SweepTable};
use crate::solver::HittingDensity;

fn header(out: &mut String, metadata: &[(String, String)]) {
    for (k, v) in metadata {
        // keep each entry on one line
        let v = v.replace('\n', " ");
        let _ = writeln!(out, "# {k}: {v}");
    }
}

/// Columns `t,rho,cumulative` on the density grid.
pub fn density_csv(density: &HittingDensity, metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    header(&mut out, metadata);
    let _ = writeln!(out, "# clamp_events: {}", density.clamp_events);
    out.push_str("t,rho,cumulative\n");
    for ((t, r), c) in density.times().iter().zip(&density.rho).zip(density.cumulative()) {
        let _ = writeln!(out, "{t:?},{r:?},{c:?}");
    }
    out
}

/// `axis_value,price,clamp_events,error`, one row per sweep value.
pub fn sweep_csv(table: &SweepTable, metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    header(&mut out, metadata);
    let axis = serde_json::to_string(&table.spec.axis).unwrap_or_default();
    let _ = writeln!(out, "# axis: {}", axis.trim_matches('"'));
    out.push_str("axis_value,price,clamp_events,error\n");
    for row in &table.rows {
        match &row.outcome {
            Outcome::Ok(p) => {
                let _ = writeln!(out, "{:?},{:?},{},", row.value, p.price, p.clamp_events);
            }
            Outcome::Failed { error } => {
                let _ = writeln!(out, "{:?},,,\"{}\"", row.value, error.replace('"', "'"));
            }
        }
    }
    out
}

/// Cumulative hitting curves, one column per sweep value.
pub fn sweep_curves_csv(table: &SweepTable) -> String {
    let mut out = String::from("t");
    for row in &table.rows {
        let _ = write!(out, ",{:?}", row.value);
    }
    out.push('\n');
    for (i, t) in table.times.iter().enumerate() {
        let _ = write!(out, "{t:?}");
        for row in &table.rows {
            match &row.outcome {
                Outcome::Ok(p) => {
                    let _ = write!(out, ",{:?}", p.cumulative[i]);
                }
                Outcome::Failed { .. } => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// `rung,name,price_bp,error`.
pub fn ladder_csv(table: &LadderTable, metadata: &[(String, String)]) -> String {
    let mut out = String::new();
    header(&mut out, metadata);
    out.push_str("rung,name,price_bp,error\n");
    for row in &table.rows {
        let name = row.name.replace('"', "'");
        match &row.outcome {
            Outcome::Ok(bp) => {
                let _ = writeln!(out, "{},\"{}\",{:?},", row.rung, name, bp);
            }
            Outcome::Failed { error } => {
                let _ = writeln!(out, "{},\"{}\",,\"{}\"", row.rung, name, error.replace('"', "'"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_csv_round_trips_values() {
        let d = HittingDensity {
            dt: 0.1,
            rho: vec![0.0, 0.123_456_789_012_345_67, 1.0 / 3.0],
            clamp_events: 0,
        };
        let csv = density_csv(&d, &[("source".into(), "unit test\nsecond line".into())]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("# source: unit test second line"));
        assert_eq!(lines.next(), Some("# clamp_events: 0"));
        assert_eq!(lines.next(), Some("t,rho,cumulative"));
        let parsed: Vec<Vec<f64>> = lines
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect();
        assert_eq!(parsed.len(), 3);
        for (row, (r, c)) in parsed.iter().zip(d.rho.iter().zip(d.cumulative())) {
            assert_eq!(row[1].to_bits(), r.to_bits());
            assert_eq!(row[2].to_bits(), c.to_bits());
        }
    }
}
