//! Report files. JSON reports carry a schema version; the timestamp is the
//! only field that varies between runs with the same config and seed, and
//! it sits on a line of its own.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    generated_at: String,
    schema_version: u32,
    command: &'a str,
    seed: u64,
    report: &'a T,
}

pub fn to_json<T: Serialize>(command: &str, seed: u64, report: &T) -> Result<String> {
    let env = Envelope {
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        schema_version: SCHEMA_VERSION,
        command,
        seed,
        report,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

/// Rows for the CSV companion of a report.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes `<command>.json` and `<command>.csv` into `out`, or the JSON to
/// stdout when no directory is given.
pub fn emit<T: Serialize>(
    out: Option<&Path>,
    command: &str,
    seed: u64,
    report: &T,
    table: &Table,
) -> Result<Vec<PathBuf>> {
    let json = to_json(command, seed, report)?;
    match out {
        None => {
            std::io::stdout().write_all(json.as_bytes())?;
            Ok(Vec::new())
        }
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let json_path = dir.join(format!("{command}.json"));
            std::fs::write(&json_path, json).with_context(|| format!("writing {}", json_path.display()))?;
            let csv_path = dir.join(format!("{command}.csv"));
            table.write(&csv_path)?;
            Ok(vec![json_path, csv_path])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_is_isolated() {
        let a = to_json("scan", 3, &vec![1.5, 2.0]).unwrap();
        let lines: Vec<&str> = a.lines().collect();
        assert!(lines[1].trim_start().starts_with("\"generated_at\""));
        assert_eq!(lines.iter().filter(|l| l.contains("generated_at")).count(), 1);
        assert!(a.contains("\"schema_version\": 1"));
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["report"][0], 1.5);
    }
}
