//! Result records and their CSV, JSON and aggregate forms.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which optimizer produced a record.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Method {
    Joint,
    /// Separate baseline with fraction α of the deadline for transmission.
    Separate(f64),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Joint => write!(f, "joint"),
            Method::Separate(a) => write!(f, "separate:{a}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "joint" {
            return Ok(Method::Joint);
        }
        let alpha = s
            .strip_prefix("separate:")
            .ok_or_else(|| Error::config("method", format!("unknown method `{s}`")))?;
        let a: f64 = alpha
            .parse()
            .map_err(|_| Error::config("method", format!("bad split fraction `{alpha}`")))?;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::config(
                "method",
                format!("split fraction {a} outside (0, 1)"),
            ));
        }
        Ok(Method::Separate(a))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub const STATUS_OPTIMAL: &str = "optimal";

/// One (scenario, seed, method, swept value) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub scenario: String,
    pub seed: u64,
    pub method: Method,
    /// Swept parameter name, or "none".
    pub param: String,
    pub value: f64,
    pub energy_total_j: Option<f64>,
    pub energy_cloud_j: Option<f64>,
    /// Unweighted radio energy Σ p_i D_i / r_i.
    pub energy_tx_j: Option<f64>,
    pub rates: Option<Vec<f64>>,
    pub powers: Option<Vec<f64>>,
    /// Clone capacities f_i.
    pub capacities: Option<Vec<f64>>,
    /// Mean |C_i| over UEs with data.
    pub mean_cluster_size: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub status: String,
    /// Wall time in milliseconds; 0 unless timing was requested.
    pub wall_ms: u64,
}

impl SolutionRecord {
    pub fn is_optimal(&self) -> bool {
        self.status == STATUS_OPTIMAL
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "scenario",
    "seed",
    "method",
    "param",
    "value",
    "energy_total_j",
    "energy_cloud_j",
    "energy_tx_j",
    "iterations",
    "status",
    "wall_ms",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn nonempty(records: &[SolutionRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::domain("no records to emit"));
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

pub fn write_csv<W: Write>(records: &[SolutionRecord], out: W) -> Result<()> {
    nonempty(records)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.scenario.clone(),
            r.seed.to_string(),
            r.method.to_string(),
            r.param.clone(),
            r.value.to_string(),
            opt(r.energy_total_j),
            opt(r.energy_cloud_j),
            opt(r.energy_tx_j),
            r.iterations.to_string(),
            r.status.clone(),
            r.wall_ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(records: &[SolutionRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn to_json_string(records: &[SolutionRecord]) -> Result<String> {
    nonempty(records)?;
    serde_json::to_string_pretty(records).map_err(|e| Error::Parse(e.to_string()))
}

pub fn from_json_str(s: &str) -> Result<Vec<SolutionRecord>> {
    serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
}

/// Mean and sample standard deviation of one energy column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stdev: f64,
}

fn stat(values: &mut [f64]) -> Stat {
    // Sorted so the result does not depend on record order.
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Stat {
        mean,
        stdev: var.sqrt(),
    }
}

/// Summary over the optimal records of one (param, value, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub param: String,
    pub value: f64,
    pub method: Method,
    pub runs: usize,
    pub optimal: usize,
    pub energy_total: Option<Stat>,
    pub energy_cloud: Option<Stat>,
    pub energy_tx: Option<Stat>,
}

/// Groups by (param, value, method); rows come out ordered by that key.
pub fn aggregate(records: &[SolutionRecord]) -> Result<Vec<AggregateRow>> {
    nonempty(records)?;
    type Key = (String, u64, String);
    let mut groups: BTreeMap<Key, Vec<&SolutionRecord>> = BTreeMap::new();
    for r in records {
        // Sort key for f64 values: map to a monotone integer.
        let bits = r.value.to_bits();
        let ord = if r.value.is_sign_negative() {
            !bits
        } else {
            bits | (1 << 63)
        };
        let method_key = match r.method {
            Method::Joint => String::from("0"),
            Method::Separate(a) => format!("1{:020}", (a * 1e15) as u64),
        };
        groups
            .entry((r.param.clone(), ord, method_key))
            .or_default()
            .push(r);
    }
    Ok(groups
        .into_values()
        .map(|rs| {
            let ok: Vec<&&SolutionRecord> = rs.iter().filter(|r| r.is_optimal()).collect();
            let column = |f: fn(&SolutionRecord) -> Option<f64>| {
                let mut v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                (!v.is_empty()).then(|| stat(&mut v))
            };
            AggregateRow {
                param: rs[0].param.clone(),
                value: rs[0].value,
                method: rs[0].method,
                runs: rs.len(),
                optimal: ok.len(),
                energy_total: column(|r| r.energy_total_j),
                energy_cloud: column(|r| r.energy_cloud_j),
                energy_tx: column(|r| r.energy_tx_j),
            }
        })
        .collect())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "param",
        "value",
        "method",
        "runs",
        "optimal",
        "energy_total_mean_j",
        "energy_total_stdev_j",
        "energy_cloud_mean_j",
        "energy_cloud_stdev_j",
        "energy_tx_mean_j",
        "energy_tx_stdev_j",
    ])
    .map_err(csv_err)?;
    for r in rows {
        let s = |x: Option<Stat>| {
            x.map(|s| [s.mean.to_string(), s.stdev.to_string()])
                .unwrap_or_default()
        };
        let [tm, ts] = s(r.energy_total);
        let [cm, cs] = s(r.energy_cloud);
        let [xm, xs] = s(r.energy_tx);
        w.write_record([
            r.param.clone(),
            r.value.to_string(),
            r.method.to_string(),
            r.runs.to_string(),
            r.optimal.to_string(),
            tm,
            ts,
            cm,
            cs,
            xm,
            xs,
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Output format of `emit_records`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Both,
}

/// Writes `records.csv` and/or `records.json` plus `aggregate.csv` into `dir`.
pub fn emit_records(records: &[SolutionRecord], dir: &Path, format: Format) -> Result<()> {
    nonempty(records)?;
    std::fs::create_dir_all(dir)?;
    if matches!(format, Format::Csv | Format::Both) {
        write_csv(records, std::fs::File::create(dir.join("records.csv"))?)?;
    }
    if matches!(format, Format::Json | Format::Both) {
        std::fs::write(dir.join("records.json"), to_json_string(records)?)?;
    }
    let rows = aggregate(records)?;
    write_aggregate_csv(&rows, std::fs::File::create(dir.join("aggregate.csv"))?)?;
    Ok(())
}
