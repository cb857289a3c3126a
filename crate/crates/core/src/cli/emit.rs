//! Tables and report files. Floats in CSV carry 17 significant digits, so
//! every value reads back to the same double; JSON uses the shortest
//! representation that does the same.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, Regime};
use crate::verify::EstimateReport;

pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// One kernel evaluation, the row schema of `kernel` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelRecord {
    pub alpha: f64,
    pub d: usize,
    pub kind: KernelKind,
    pub n: usize,
    pub m: usize,
    pub t: f64,
    pub x: Vec<f64>,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub value: f64,
    pub regime: Regime,
    /// `ok` or `underflow`
    pub flag: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlRecord {
    pub alpha: f64,
    pub beta: f64,
    pub z: f64,
    pub value: f64,
    pub strategy: String,
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn kernel_header(d: usize) -> Vec<String> {
    let mut h: Vec<String> = ["alpha", "d", "kind", "n", "m", "t"].iter().map(|s| s.to_string()).collect();
    h.extend((1..=d).map(|i| format!("x{i}")));
    h.extend(["R", "value", "regime", "flag"].iter().map(|s| s.to_string()));
    h
}

/// Kernel table; an empty record list gives the header alone.
pub fn kernel_csv(d: usize, records: &[KernelRecord]) -> Result<Vec<u8>> {
    if let Some(r) = records.iter().find(|r| r.x.len() != d) {
        return Err(Error::invalid("x", format!("record with {} coordinates in a d = {d} table", r.x.len())));
    }
    csv_bytes(
        &kernel_header(d),
        records.iter().map(|r| {
            let mut row = vec![
                fmt17(r.alpha),
                r.d.to_string(),
                r.kind.name().to_string(),
                r.n.to_string(),
                r.m.to_string(),
                fmt17(r.t),
            ];
            row.extend(r.x.iter().map(|&v| fmt17(v)));
            row.extend([fmt17(r.big_r), fmt17(r.value), r.regime.name().to_string(), r.flag.clone()]);
            row
        }),
    )
}

fn parse_regime(s: &str) -> Result<Regime> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| Error::invalid("regime", format!("unknown regime `{s}`")))
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, name: &'static str) -> Result<T> {
    row.get(i)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::invalid(name, format!("unreadable column {i}")))
}

/// Reads a kernel table written by [`kernel_csv`].
pub fn read_kernel_csv(bytes: &[u8]) -> Result<Vec<KernelRecord>> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
    let d = header.iter().filter(|h| h.starts_with('x')).count();
    let want = kernel_header(d);
    if header.iter().ne(want.iter().map(String::as_str)) {
        return Err(Error::invalid("header", format!("expected {}", want.join(","))));
    }
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| Error::Io(e.to_string()))?;
        let kind: String = field(&row, 2, "kind")?;
        out.push(KernelRecord {
            alpha: field(&row, 0, "alpha")?,
            d: field(&row, 1, "d")?,
            kind: kind.parse()?,
            n: field(&row, 3, "n")?,
            m: field(&row, 4, "m")?,
            t: field(&row, 5, "t")?,
            x: (0..d).map(|i| field(&row, 6 + i, "x")).collect::<Result<_>>()?,
            big_r: field(&row, 6 + d, "R")?,
            value: field(&row, 7 + d, "value")?,
            regime: parse_regime(row.get(8 + d).unwrap_or(""))?,
            flag: field(&row, 9 + d, "flag")?,
        });
    }
    Ok(out)
}

pub fn ml_csv(records: &[MlRecord]) -> Result<Vec<u8>> {
    let header: Vec<String> = ["alpha", "beta", "z", "value", "strategy"].iter().map(|s| s.to_string()).collect();
    csv_bytes(
        &header,
        records
            .iter()
            .map(|r| vec![fmt17(r.alpha), fmt17(r.beta), fmt17(r.z), fmt17(r.value), r.strategy.clone()]),
    )
}

/// One JSON document per line.
pub fn json_lines<T: Serialize>(records: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Io(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn read_json_lines<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<Vec<T>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Io(e.to_string())))
        .collect()
}

/// id, constant, drift, drift_limit, pass per report.
pub fn report_summary_csv(reports: &[EstimateReport]) -> Result<Vec<u8>> {
    let header: Vec<String> = ["id", "constant", "drift", "drift_limit", "pass"].iter().map(|s| s.to_string()).collect();
    csv_bytes(
        &header,
        reports.iter().map(|r| {
            vec![
                r.id.clone(),
                fmt17(r.constant),
                fmt17(r.drift),
                fmt17(r.drift_limit),
                r.pass.to_string(),
            ]
        }),
    )
}

/// Sidecar for `name`: the resolved configuration and artifact metadata.
pub fn sidecar_name(name: &str) -> String {
    format!("{name}.meta.json")
}

pub fn sidecar(config: &impl Serialize, artifact: &str, extra: serde_json::Value) -> Vec<u8> {
    let doc = serde_json::json!({
        "artifact": artifact,
        "config": config,
        "meta": extra,
    });
    let mut out = serde_json::to_vec_pretty(&doc).expect("sidecar serializes");
    out.push(b'\n');
    out
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial artifact.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(path)
}
