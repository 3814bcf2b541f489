//! Run reports: a single JSON document per command, echoing the resolved
//! configuration (with a content hash), the analytic quantities, every
//! estimate with its uncertainty and seed provenance, and any tables.
//!
//! Numbers in tables are rendered with 17 significant digits so a report
//! round-trips `f64` values losslessly; the JSON fields themselves rely on
//! the shortest-roundtrip float encoding, which is lossless as well.
//! Wall-clock time goes to stderr only, keeping report artifacts
//! byte-deterministic for a fixed `(config, seed)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rwre_core::ExtReal;
use rwre_core::stats::EstimateWithCI;

use crate::error::Result;

/// 17 significant digits: lossless decimal rendering of an `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Extended real rendered as a JSON number, or the strings "inf"/"-inf".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsonExt(pub ExtReal);

impl Serialize for JsonExt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            ExtReal::Finite(x) => s.serialize_f64(x),
            ExtReal::PosInf => s.serialize_str("inf"),
            ExtReal::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for JsonExt {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(JsonExt(ExtReal::Finite(x))),
            Raw::Tag(t) if t == "inf" => Ok(JsonExt(ExtReal::PosInf)),
            Raw::Tag(t) if t == "-inf" => Ok(JsonExt(ExtReal::NegInf)),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!(
                "expected a number, \"inf\" or \"-inf\", got \"{t}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub name: String,
    pub point: f64,
    pub stderr: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub replicates: u64,
    pub seed: u64,
}

impl NamedEstimate {
    pub fn new(name: impl Into<String>, e: &EstimateWithCI) -> Self {
        NamedEstimate {
            name: name.into(),
            point: e.point,
            stderr: e.stderr,
            ci95_lo: e.ci95.0,
            ci95_hi: e.ci95.1,
            replicates: e.replicates,
            seed: e.seed,
        }
    }
}

/// A rectangular table with stringly cells (numbers pre-rendered at 17
/// significant digits).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }
}

/// Analytic quantities reported by the `lambda` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticReport {
    pub lambda: JsonExt,
    pub kappa: Option<f64>,
    /// "transient", "recurrent" or "borderline".
    pub transience: String,
    pub l_prime: JsonExt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub seed: u64,
    pub workers: usize,
    pub config: BTreeMap<String, String>,
    /// SHA-256 over the canonical `key=value` lines of the config echo.
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub analytic: Option<AnalyticReport>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub estimates: Vec<NamedEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub tables: Vec<Table>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub censoring_rate: Option<f64>,
    /// Not serialized into artifacts (it would break byte determinism);
    /// reported on stderr instead.
    #[serde(skip)]
    pub wall_clock_ms: Option<u64>,
}

impl RunReport {
    pub fn new(
        command: &str,
        seed: u64,
        workers: usize,
        config: &BTreeMap<String, String>,
    ) -> Self {
        RunReport {
            command: command.to_string(),
            seed,
            workers,
            config: config.clone(),
            config_hash: config_hash(config),
            analytic: None,
            estimates: Vec::new(),
            tables: Vec::new(),
            censoring_rate: None,
            wall_clock_ms: None,
        }
    }

    pub fn push_estimate(&mut self, name: &str, e: &EstimateWithCI) {
        self.estimates.push(NamedEstimate::new(name, e));
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<RunReport> {
        Ok(serde_json::from_str(text)?)
    }

    /// Render all tables as CSV blocks: a `table,<name>` line, the header,
    /// the rows, and a blank line between tables.
    pub fn tables_to_csv(&self) -> String {
        let mut out = String::new();
        for table in &self.tables {
            let _ = writeln!(out, "table,{}", table.name);
            let _ = writeln!(out, "{}", table.columns.join(","));
            for row in &table.rows {
                let _ = writeln!(out, "{}", row.join(","));
            }
            out.push('\n');
        }
        out
    }
}

pub fn config_hash(config: &BTreeMap<String, String>) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in config {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_is_lossless() {
        for &x in &[1.0 / 3.0, 0.058891517829915434, 1e-300, -2.5e17, 0.0] {
            let rendered = fmt17(x);
            let back: f64 = rendered.parse().unwrap();
            assert_eq!(back, x, "{rendered}");
        }
        assert_eq!(fmt17(f64::INFINITY), "inf");
    }

    #[test]
    fn report_round_trips_through_its_parser() {
        let mut config = BTreeMap::new();
        config.insert("seed".to_string(), "7".to_string());
        let mut report = RunReport::new("lambda", 7, 2, &config);
        report.analytic = Some(AnalyticReport {
            lambda: JsonExt(ExtReal::PosInf),
            kappa: Some(0.771_242_382_411_2),
            transience: "transient".into(),
            l_prime: JsonExt(ExtReal::NegInf),
        });
        report.estimates.push(NamedEstimate {
            name: "speed".into(),
            point: 1.0 / 3.0,
            stderr: 0.001,
            ci95_lo: 0.331,
            ci95_hi: 0.335,
            replicates: 100,
            seed: 7,
        });
        let mut t = Table::new("l_table", &["lambda", "value"]);
        t.push_row(vec![fmt17(0.5), fmt17(0.01)]);
        report.tables.push(t);
        report.wall_clock_ms = Some(123);

        let json = report.to_json().unwrap();
        let parsed = RunReport::from_json(&json).unwrap();
        // Wall clock is intentionally dropped; everything else survives.
        let mut expected = report.clone();
        expected.wall_clock_ms = None;
        assert_eq!(parsed, expected);
        assert!(!json.contains("wall_clock"));
    }

    #[test]
    fn hash_tracks_content() {
        let mut a = BTreeMap::new();
        a.insert("x".to_string(), "1".to_string());
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.insert("y".to_string(), "2".to_string());
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn csv_blocks() {
        let mut config = BTreeMap::new();
        config.insert("seed".to_string(), "1".to_string());
        let mut report = RunReport::new("line", 1, 1, &config);
        let mut t = Table::new("m_table", &["n", "m_hat"]);
        t.push_row(vec!["10".into(), fmt17(1.5)]);
        report.tables.push(t);
        let csv = report.tables_to_csv();
        assert!(csv.starts_with("table,m_table\nn,m_hat\n10,"));
    }
}
