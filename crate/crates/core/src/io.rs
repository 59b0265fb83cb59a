//! CSV and JSON artifact formats.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which round-trips `f64` exactly and keeps re-runs byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::composition::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::train::{LossRecord, MetricsRecord};

/// Full-precision float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

pub fn save_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

/// Write a dataset as `u_1,...,u_n,Y_1,...,Y_m` rows.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    data.validate()?;
    create_parent(path)?;
    let mut out = String::new();
    let (n, m) = (data.input_dim(), data.output_dim());
    let mut header: Vec<String> = (1..=n).map(|i| format!("u_{i}")).collect();
    header.extend((1..=m).map(|i| format!("Y_{i}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for (u, y) in data.inputs.iter().zip(data.outputs.iter()) {
        let row: Vec<String> = u.iter().chain(y.iter()).map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Read a dataset back. Column counts come from the `u_*`/`Y_*` header
/// prefixes; provenance is `Custom` until reclassified against an input set.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig(format!("{}: empty dataset file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n = cols.iter().take_while(|c| c.starts_with("u_")).count();
    let m = cols.len() - n;
    if n == 0 || !cols[n..].iter().all(|c| c.starts_with("Y_")) {
        return Err(Error::InvalidConfig(format!(
            "{}: header must be u_1,...,u_n,Y_1,...,Y_m, got {header:?}",
            path.display()
        )));
    }
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| {
                v.trim().parse::<f64>().map_err(|e| {
                    Error::InvalidConfig(format!(
                        "{}: line {}: bad number {v:?}: {e}",
                        path.display(),
                        lineno + 2
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != n + m {
            return Err(Error::InvalidConfig(format!(
                "{}: line {} has {} fields, expected {}",
                path.display(),
                lineno + 2,
                vals.len(),
                n + m
            )));
        }
        inputs.push(vals[..n].to_vec());
        outputs.push(vals[n..].to_vec());
    }
    let data = Dataset { inputs, outputs, provenance: Provenance::Custom };
    data.validate()?;
    Ok(data)
}

/// Write the training log: `epoch,loss,E_G1..m,E_f1..n,E_theta1..n`.
pub fn write_metrics_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    create_parent(path)?;
    let mut out = String::new();
    let (m, n) = records
        .first()
        .map(|r| (r.e_g.len(), r.e_f.len()))
        .unwrap_or((0, 0));
    let mut header = vec!["epoch".to_string(), "loss".to_string()];
    header.extend((1..=m).map(|i| format!("E_G{i}")));
    header.extend((1..=n).map(|i| format!("E_f{i}")));
    header.extend((1..=n).map(|i| format!("E_theta{i}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for r in records {
        let mut row = vec![r.epoch.to_string(), fmt_f64(r.loss)];
        row.extend(r.e_g.iter().map(|&v| fmt_f64(v)));
        row.extend(r.e_f.iter().map(|&v| fmt_f64(v)));
        row.extend(r.e_theta.iter().map(|&v| fmt_f64(v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a metrics CSV back into records (used by the trend analysis).
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidConfig(format!("{}: empty metrics file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let m = cols.iter().filter(|c| c.starts_with("E_G")).count();
    let n = cols.iter().filter(|c| c.starts_with("E_f")).count();
    let mut records = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != 2 + m + 2 * n {
            return Err(Error::InvalidConfig(format!("{}: ragged metrics row", path.display())));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("{}: bad number: {e}", path.display())))
        };
        records.push(MetricsRecord {
            epoch: vals[0]
                .parse::<usize>()
                .map_err(|e| Error::InvalidConfig(format!("{}: bad epoch: {e}", path.display())))?,
            loss: parse(vals[1])?,
            e_g: vals[2..2 + m].iter().map(|v| parse(v)).collect::<Result<_>>()?,
            e_f: vals[2 + m..2 + m + n].iter().map(|v| parse(v)).collect::<Result<_>>()?,
            e_theta: vals[2 + m + n..].iter().map(|v| parse(v)).collect::<Result<_>>()?,
        });
    }
    Ok(records)
}

/// Write a monolithic loss history: `epoch,loss`.
pub fn write_loss_csv(path: &Path, records: &[LossRecord]) -> Result<()> {
    create_parent(path)?;
    let mut out = String::from("epoch,loss\n");
    for r in records {
        out.push_str(&format!("{},{}\n", r.epoch, fmt_f64(r.loss)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write a pointwise relative-error surface: `u_1,...,u_n,E_G1,...,E_Gm`.
/// Undefined points (true output zero) are written as `nan`.
pub fn write_surface_csv(path: &Path, surface: &crate::train::GridEvaluation) -> Result<()> {
    create_parent(path)?;
    let n = surface.inputs.first().map_or(0, Vec::len);
    let m = surface.rel_err.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (1..=n).map(|i| format!("u_{i}")).collect();
    header.extend((1..=m).map(|i| format!("E_G{i}")));
    let mut out = header.join(",");
    out.push('\n');
    for (u, errs) in surface.inputs.iter().zip(surface.rel_err.iter()) {
        let mut row: Vec<String> = u.iter().map(|&v| fmt_f64(v)).collect();
        row.extend(errs.iter().map(|e| match e {
            Some(v) => fmt_f64(*v),
            None => "nan".to_string(),
        }));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
