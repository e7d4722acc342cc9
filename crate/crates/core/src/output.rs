//! Plot-ready CSV and JSON serialization shared by the command-line tools.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::dsge::DsgeState;
use crate::planar::PlanarState;

/// First line of every CSV file.
pub const CSV_MAGIC: &str = "# stopflow v1";

/// Version stamped into every JSON document.
pub const JSON_SCHEMA: u32 = 1;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes the version line, a header row and the records.
pub fn write_csv<W, I, R>(out: W, header: &[&str], rows: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut out = out;
    writeln!(out, "{CSV_MAGIC}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `{"schema": 1, "kind": kind, "data": data}`.
pub fn json_document<T: Serialize>(kind: &str, data: &T) -> serde_json::Result<Value> {
    Ok(json!({ "schema": JSON_SCHEMA, "kind": kind, "data": serde_json::to_value(data)? }))
}

pub fn trajectory_rows(traj: &[PlanarState]) -> impl Iterator<Item = Vec<String>> + '_ {
    traj.iter().enumerate().map(|(n, st)| {
        vec![n.to_string(), fmt_f64(st.x()), fmt_f64(st.s()), fmt_f64(st.p())]
    })
}

pub const TRAJECTORY_HEADER: [&str; 4] = ["n", "x", "s", "p"];

pub fn dsge_rows(traj: &[DsgeState]) -> impl Iterator<Item = Vec<String>> + '_ {
    traj.iter().enumerate().map(|(n, st)| {
        vec![
            n.to_string(),
            fmt_f64(st.y),
            fmt_f64(st.u),
            fmt_f64(st.v),
            fmt_f64(st.s),
            fmt_f64(st.sigma),
        ]
    })
}

pub const DSGE_HEADER: [&str; 6] = ["n", "y", "u", "v", "s", "sigma"];
