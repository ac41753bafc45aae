//! CSV and JSON serialization of results.
//!
//! Reals are written with 17 significant digits so a parse of the file
//! reproduces the in-memory values exactly. Lines end in `\n`.

use serde::Serialize;

use crate::channel::SuiteSummary;
use crate::design::GridCell;
use crate::error::{Error, Result};
use crate::lindblad::{ProtocolConfig, VisibilityTrace};

/// Formats a real with 17 significant digits.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn trace_csv(trace: &VisibilityTrace) -> String {
    let mut header = vec!["t", "V", "re_sigma_minus", "im_sigma_minus", "trace_error", "tail_mass"];
    let diag = trace.negativity.as_ref().zip(trace.min_eigenvalue.as_ref());
    if diag.is_some() {
        header.extend(["negativity", "min_eigenvalue"]);
    }
    let rows = (0..trace.len()).map(|i| {
        let mut row = vec![
            real(trace.times[i]),
            real(trace.visibility[i]),
            real(trace.sigma_minus[i].re),
            real(trace.sigma_minus[i].im),
            real(trace.trace_error[i]),
            real(trace.tail_mass[i]),
        ];
        if let Some((neg, mins)) = diag {
            row.push(real(neg[i]));
            row.push(real(mins[i]));
        }
        row
    });
    table(&header, rows)
}

#[derive(Serialize)]
struct TraceDocument<'a> {
    config: &'a ProtocolConfig,
    trace: &'a VisibilityTrace,
}

pub fn trace_json(cfg: &ProtocolConfig, trace: &VisibilityTrace) -> Result<String> {
    to_json(&TraceDocument { config: cfg, trace })
}

pub fn curve_csv(omega_t: &[f64], v: &[f64]) -> String {
    table(
        &["omega_t", "V"],
        omega_t.iter().zip(v).map(|(t, v)| vec![real(*t), real(*v)]),
    )
}

pub fn grid_csv(grid: &[GridCell]) -> String {
    table(
        &["tau_s", "temp_K", "log10_delta_v", "log10_delta_v_boosted"],
        grid.iter().map(|c| {
            vec![
                real(c.tau_s),
                real(c.temp_k),
                real(c.log10_delta_v),
                real(c.log10_delta_v_boosted),
            ]
        }),
    )
}

pub fn suite_csv(summary: &SuiteSummary) -> String {
    table(
        &["seed", "monotonic", "max_violation", "negativity_peak"],
        summary.rows.iter().map(|r| {
            vec![
                r.seed.to_string(),
                r.monotonic.to_string(),
                real(r.max_violation),
                real(r.negativity_peak),
            ]
        }),
    )
}

/// Pretty JSON with a trailing newline; key order follows field order.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Config(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Parses a numeric CSV into its header and columns.
pub fn parse_numeric_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config("empty csv".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); header.len()];
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Config(format!("csv row {} has {} fields", n + 2, fields.len())));
        }
        for (col, f) in columns.iter_mut().zip(fields) {
            col.push(
                f.parse()
                    .map_err(|_| Error::Config(format!("csv row {}: bad number '{f}'", n + 2)))?,
            );
        }
    }
    Ok((header, columns))
}
