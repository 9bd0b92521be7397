use std::fs;
use std::path::{Path, PathBuf};

use nullseries_core::pla::{NullSeries, SeriesMeta};
use nullseries_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Tolerances};
use crate::CliError;

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// JSON written next to series.csv.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: RunConfig,
    pub code_version: String,
    pub tolerances: Tolerances,
    pub meta: SeriesMeta,
    pub fitted: Fitted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fitted {
    pub c_hat: f64,
    pub plateau: f64,
    pub max_abs: f64,
    pub max_abs_negative: f64,
    pub interior_leakage: f64,
    pub boundary_leakage: f64,
    pub g_dc_sampled: f64,
}

/// Envelope for every report-*.json.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'a str,
    pub code_version: &'a str,
    pub tolerances: &'a Tolerances,
    pub pass: bool,
    pub report: &'a T,
}

#[derive(Serialize, Deserialize)]
struct Row {
    n: i64,
    re: f64,
    im: f64,
}

fn io<E: std::fmt::Display>(p: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", p.display()))
}

pub fn ensure_dir(p: &Path) -> Result<(), CliError> {
    fs::create_dir_all(p).map_err(io(p))
}

pub fn write_json<T: Serialize>(p: &Path, v: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(io(p))?;
    s.push('\n');
    fs::write(p, s).map_err(io(p))
}

pub fn write_series(p: &Path, s: &NullSeries) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(p).map_err(io(p))?;
    let m = s.m_max as i64;
    for n in -m..=m {
        let c = s.get(n);
        w.serialize(Row { n, re: c.re, im: c.im }).map_err(io(p))?;
    }
    w.flush().map_err(io(p))
}

pub fn sidecar_path(series: &Path) -> PathBuf {
    series.with_file_name("series.json")
}

/// Reads series.csv and its sidecar; a missing sidecar is a configuration error.
pub fn read_series(p: &Path) -> Result<(NullSeries, Sidecar), CliError> {
    let sc = sidecar_path(p);
    let text = fs::read_to_string(&sc).map_err(|e| CliError::Config(format!("sidecar {}: {e}", sc.display())))?;
    let side: Sidecar =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("sidecar {}: {e}", sc.display())))?;
    let mut r = csv::Reader::from_path(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    let mut rows = Vec::new();
    for row in r.deserialize::<Row>() {
        rows.push(row.map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?);
    }
    let m = rows.len() / 2;
    if rows.len() != 2 * m + 1 || rows.iter().enumerate().any(|(i, r)| r.n != i as i64 - m as i64) {
        return Err(CliError::Config(format!("{}: rows must cover n = -M..=M in order", p.display())));
    }
    let coeffs = rows.iter().map(|r| Complex64::new(r.re, r.im)).collect();
    Ok((NullSeries { m_max: m, coeffs, meta: side.meta.clone() }, side))
}

/// Writes a CSV with a header and rows of floats.
pub fn write_table(p: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(p).map_err(io(p))?;
    w.write_record(header).map_err(io(p))?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string())).map_err(io(p))?;
    }
    w.flush().map_err(io(p))
}
