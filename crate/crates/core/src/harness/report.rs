//! Experiment reports: a CSV table plus a metadata sidecar.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::EstimateWithError;

/// A table cell or summary value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => write!(f, "{}", fmt_float(*v)),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Echo of the inputs that produced the report.
    pub config: toml::Table,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub verdict: Option<String>,
    pub summary: BTreeMap<String, Cell>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.into(),
            config: toml::Table::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            verdict: None,
            summary: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Records a serializable config section.
    pub fn echo<T: Serialize>(&mut self, section: &str, value: &T) -> Result<()> {
        let v = toml::Value::try_from(value).map_err(|e| Error::Config(e.to_string()))?;
        self.config.insert(section.to_owned(), v);
        Ok(())
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn set(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.insert(key.to_owned(), value.into());
    }

    pub fn set_estimate(&mut self, key: &str, e: EstimateWithError) {
        self.set(key, e.value);
        self.set(&format!("{key}_se"), e.std_error);
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        match self.summary.get(key)? {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        self.column(name)?
            .into_iter()
            .map(|c| match c {
                Cell::Float(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                _ => None,
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(e.to_string());
        wr.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            wr.write_record(row.iter().map(|c| c.to_string())).map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }

    /// Metadata as TOML; `timestamp` is the only field that varies between runs.
    pub fn meta_toml(&self, timestamp: u64) -> Result<String> {
        #[derive(Serialize)]
        struct Meta<'a> {
            experiment: &'a str,
            timestamp_unix: u64,
            #[serde(skip_serializing_if = "Option::is_none")]
            verdict: Option<&'a str>,
            notes: &'a [String],
            summary: BTreeMap<&'a str, String>,
            config: &'a toml::Table,
        }
        let summary = self.summary.iter().map(|(k, v)| (k.as_str(), v.to_string())).collect();
        toml::to_string(&Meta {
            experiment: &self.experiment,
            timestamp_unix: timestamp,
            verdict: self.verdict.as_deref(),
            notes: &self.notes,
            summary,
            config: &self.config,
        })
        .map_err(|e| Error::Config(e.to_string()))
    }

    /// Writes `path` (CSV) and `path.meta.toml`; returns the sidecar path.
    pub fn write_files(&self, path: &Path) -> Result<PathBuf> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))?;
        let meta = sidecar_path(path);
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        std::fs::write(&meta, self.meta_toml(now)?)?;
        Ok(meta)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.toml");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_full_precision() {
        let mut r = ExperimentReport::new("demo", &["k", "value"]);
        r.push_row(vec![3.into(), (1.0f64 / 3.0).into()]);
        let s = r.csv_string().unwrap();
        assert_eq!(s, "k,value\n3,3.3333333333333331e-1\n");
    }

    #[test]
    fn meta_round_trips_as_toml() {
        let mut r = ExperimentReport::new("demo", &["a"]);
        r.verdict = Some("diverging".into());
        r.set("ratio", 2.5);
        r.echo("quadrature", &crate::quadrature::QuadratureConfig::default()).unwrap();
        let m = r.meta_toml(7).unwrap();
        let t: toml::Table = toml::from_str(&m).unwrap();
        assert_eq!(t["verdict"].as_str(), Some("diverging"));
        assert_eq!(t["timestamp_unix"].as_integer(), Some(7));
        assert!(t["config"]["quadrature"]["k_min"].is_integer());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/x.csv")), PathBuf::from("out/x.csv.meta.toml"));
    }
}
