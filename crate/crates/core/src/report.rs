//! Machine-readable reports (JSON, CSV).
//!
//! CSV column order: `functional, parameters, value_re, value_im, exact_num,
//! exact_den, abs_error, method, seed, stderr, runtime_ms, paper_anchor`.
//! `parameters` is `key=value` pairs joined by `;`. Nested extras (tables,
//! diagnostics) only appear in JSON.

use crate::error::{Error, Result};
use crate::ring::{q_to_f64, C64, Q};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub re: String,
    pub im: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalField {
    pub num: String,
    pub den: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub functional: String,
    pub parameters: BTreeMap<String, String>,
    pub value: ComplexField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<RationalField>,
    pub abs_error: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<String>,
    pub runtime_ms: f64,
    pub paper_anchor: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Range(format!("unknown format '{s}' (json or csv)"))),
        }
    }
}

fn f64_str(x: f64) -> String {
    // shortest round-trip representation
    format!("{x:?}")
}

impl Report {
    fn base(functional: &str, anchor: &str, method: &str) -> Self {
        Report {
            functional: functional.to_string(),
            parameters: BTreeMap::new(),
            value: ComplexField { re: "0".into(), im: "0".into() },
            exact: None,
            abs_error: "0".into(),
            method: method.to_string(),
            seed: None,
            stderr: None,
            runtime_ms: 0.0,
            paper_anchor: anchor.to_string(),
            extra: BTreeMap::new(),
        }
    }

    /// An exact rational result: the value's real part is the rational
    /// itself (`"20"`, `"1/12"`), with `abs_error = "0"`.
    pub fn exact(functional: &str, anchor: &str, method: &str, v: &Q) -> Self {
        let mut r = Self::base(functional, anchor, method);
        r.value = ComplexField { re: v.to_string(), im: "0".into() };
        r.exact = Some(RationalField { num: v.numer().to_string(), den: v.denom().to_string() });
        r
    }

    pub fn approx(functional: &str, anchor: &str, method: &str, v: C64, abs_error: f64) -> Self {
        let mut r = Self::base(functional, anchor, method);
        r.value = ComplexField { re: f64_str(v.re), im: f64_str(v.im) };
        r.abs_error = f64_str(abs_error);
        r
    }

    /// A Monte-Carlo result: the standard error doubles as `abs_error`.
    pub fn monte_carlo(functional: &str, anchor: &str, v: C64, stderr: f64, seed: u64) -> Self {
        let mut r = Self::approx(functional, anchor, "mc", v, stderr);
        r.seed = Some(seed);
        r.stderr = Some(f64_str(stderr));
        r
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_extra(mut self, key: &str, value: serde_json::Value) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    pub fn with_runtime(mut self, ms: f64) -> Self {
        self.runtime_ms = ms;
        self
    }

    /// The value as a complex double (exact rationals converted last).
    pub fn value_c64(&self) -> Option<C64> {
        if let Some(e) = &self.exact {
            let q = Q::new(e.num.parse().ok()?, e.den.parse().ok()?);
            return Some(C64::new(q_to_f64(&q), 0.0));
        }
        Some(C64::new(self.value.re.parse().ok()?, self.value.im.parse().ok()?))
    }
}

pub const CSV_COLUMNS: [&str; 12] = [
    "functional",
    "parameters",
    "value_re",
    "value_im",
    "exact_num",
    "exact_den",
    "abs_error",
    "method",
    "seed",
    "stderr",
    "runtime_ms",
    "paper_anchor",
];

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn to_csv_row(r: &Report) -> Vec<String> {
    let params: Vec<String> = r.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
    vec![
        r.functional.clone(),
        params.join(";"),
        r.value.re.clone(),
        r.value.im.clone(),
        r.exact.as_ref().map(|e| e.num.clone()).unwrap_or_default(),
        r.exact.as_ref().map(|e| e.den.clone()).unwrap_or_default(),
        r.abs_error.clone(),
        r.method.clone(),
        r.seed.map(|s| s.to_string()).unwrap_or_default(),
        r.stderr.clone().unwrap_or_default(),
        f64_str(r.runtime_ms),
        r.paper_anchor.clone(),
    ]
}

/// Renders reports as a string: a JSON array, or CSV with a header row.
pub fn render(reports: &[Report], format: Format) -> Result<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(reports).map_err(|e| Error::Io(e.to_string())),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS).map_err(|e| Error::Io(e.to_string()))?;
            for r in reports {
                w.write_record(to_csv_row(r)).map_err(|e| Error::Io(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
        }
    }
}

pub fn emit_report(reports: &[Report], format: Format, path: &Path) -> Result<()> {
    let text = render(reports, format)?;
    fs::write(path, text).map_err(|e| csv_err(path, e))
}

/// Reads back a CSV report written by [`emit_report`]. JSON extras are not
/// part of the CSV and come back empty.
pub fn read_csv(path: &Path) -> Result<Vec<Report>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = rd.headers().map_err(|e| csv_err(path, e))?.iter().map(String::from).collect();
    if header != CSV_COLUMNS {
        return Err(csv_err(path, format!("unexpected columns {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let f = |i: usize| rec.get(i).unwrap_or("").to_string();
        let opt = |i: usize| Some(f(i)).filter(|s| !s.is_empty());
        let parameters = f(1)
            .split(';')
            .filter(|s| !s.is_empty())
            .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
            .collect();
        let exact = match (opt(4), opt(5)) {
            (Some(num), Some(den)) => Some(RationalField { num, den }),
            _ => None,
        };
        out.push(Report {
            functional: f(0),
            parameters,
            value: ComplexField { re: f(2), im: f(3) },
            exact,
            abs_error: f(6),
            method: f(7),
            seed: opt(8).map(|s| s.parse()).transpose().map_err(|e| csv_err(path, e))?,
            stderr: opt(9),
            runtime_ms: f(10).parse().map_err(|e| csv_err(path, e))?,
            paper_anchor: f(11),
            extra: BTreeMap::new(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::{q, qf};

    #[test]
    fn exact_integer_json() {
        let r = Report::exact("KS", "EqPhi:KS", "jacobi-trudi", &q(20));
        let v: serde_json::Value = serde_json::from_str(&render(&[r], Format::Json).unwrap()).unwrap();
        assert_eq!(v[0]["value"]["re"], "20");
        assert_eq!(v[0]["value"]["im"], "0");
        assert_eq!(v[0]["abs_error"], "0");
        assert_eq!(v[0]["exact"]["den"], "1");
    }

    #[test]
    fn mc_has_seed_and_stderr() {
        let r = Report::monte_carlo("sample", "Eq:WeylHaarRealisationBis", C64::new(1.0, 0.0), 0.01, 7);
        let v: serde_json::Value = serde_json::from_str(&render(&[r], Format::Json).unwrap()).unwrap();
        assert_eq!(v[0]["seed"], 7);
        assert_eq!(v[0]["stderr"], "0.01");
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("cue-lab-report-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("r.csv");
        let rs = vec![
            Report::exact("KS", "EqPhi:KS", "hankel", &qf(1, 12)).with_param("k", 2),
            Report::monte_carlo("sample", "Eq:WeylHaarRealisationBis", C64::new(7.01, -0.5), 0.08, 3)
                .with_param("N", 6)
                .with_param("f", "|Z(1)|^2")
                .with_runtime(12.5),
        ];
        emit_report(&rs, Format::Csv, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rs);
        fs::remove_dir_all(&dir).ok();
    }
}
