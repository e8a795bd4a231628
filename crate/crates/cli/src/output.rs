//! Artifact writers. Numbers use a fixed, locale-free format so identical
//! inputs give byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use imrc_core::{MonteCarloResult, SweepCurve};
use serde::Serialize;

use crate::error::CliError;

/// Rates: fixed point with 15 decimals.
pub fn fmt_rate(v: f64) -> String {
    format!("{v:.15}")
}

/// Grid values: shortest representation that parses back exactly.
pub fn fmt_db(v: f64) -> String {
    format!("{v}")
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Runtime(format!("cannot write in {}: {e}", dir.display())))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create output directory {}: {e}", dir.display())))
}

fn csv_bytes(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&header).map_err(|e| CliError::Runtime(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

/// `snr_db,scheme,sum_rate_bits,r_1,…,r_K`, grouped by curve in the given order.
pub fn sweep_csv(curves: &[SweepCurve], users: usize) -> Result<Vec<u8>, CliError> {
    let mut header: Vec<String> = ["snr_db", "scheme", "sum_rate_bits"].map(String::from).to_vec();
    header.extend((1..=users).map(|k| format!("r_{k}")));
    let rows = curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |pt| {
                let mut row = vec![fmt_db(pt.snr_db), c.scheme.clone(), fmt_rate(pt.sum_rate_bits)];
                row.extend(pt.per_user.iter().map(|&r| fmt_rate(r)));
                row
            })
        })
        .collect();
    csv_bytes(header, rows)
}

/// One value per row: `snr_db,scheme,quantity,value` with quantity `sum` or `r_k`.
pub fn sweep_long_csv(curves: &[SweepCurve]) -> Result<Vec<u8>, CliError> {
    let header = ["snr_db", "scheme", "quantity", "value"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for c in curves {
        for pt in &c.points {
            rows.push(vec![fmt_db(pt.snr_db), c.scheme.clone(), "sum".into(), fmt_rate(pt.sum_rate_bits)]);
            for (k, r) in pt.per_user.iter().enumerate() {
                rows.push(vec![fmt_db(pt.snr_db), c.scheme.clone(), format!("r_{}", k + 1), fmt_rate(*r)]);
            }
        }
    }
    csv_bytes(header, rows)
}

/// `snr_db,scheme,mean_rate,std_rate,n`.
pub fn mc_csv(results: &[MonteCarloResult]) -> Result<Vec<u8>, CliError> {
    let header = ["snr_db", "scheme", "mean_rate", "std_rate", "n"].map(String::from).to_vec();
    let rows = results
        .iter()
        .flat_map(|r| {
            (0..r.grid_db.len()).map(move |i| {
                vec![
                    fmt_db(r.grid_db[i]),
                    r.scheme.clone(),
                    fmt_rate(r.mean[i]),
                    fmt_rate(r.std_dev[i]),
                    r.n[i].to_string(),
                ]
            })
        })
        .collect();
    csv_bytes(header, rows)
}

/// `(snr_db, scheme, sum_rate_bits)` rows of a sweep CSV.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<(f64, String, f64)>, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Config(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{} has no {name} column", path.display())))
    };
    let (i_db, i_scheme, i_rate) = (col("snr_db")?, col("scheme")?, col("sum_rate_bits")?);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("row {}: bad number in column {i}", line + 2)))
        };
        out.push((num(i_db)?, rec.get(i_scheme).unwrap_or_default().to_string(), num(i_rate)?));
    }
    Ok(out)
}

pub fn artifact(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
