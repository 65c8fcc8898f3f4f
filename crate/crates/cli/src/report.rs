use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sutherland_core::kks::{Couplings, MuParams};
use sutherland_core::lie::Scheme;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    /// `abs` or `rel`.
    pub metric: &'static str,
    pub max_abs_err: f64,
    pub tol: f64,
    pub detail: String,
}

impl Check {
    pub fn measured(name: &str, metric: &'static str, err: f64, tol: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: if err <= tol { Status::Pass } else { Status::Fail },
            metric,
            max_abs_err: err,
            tol,
            detail: detail.into(),
        }
    }

    /// A yes/no check reported with error 0 or 1.
    pub fn exact(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            metric: "exact",
            max_abs_err: if ok { 0.0 } else { 1.0 },
            tol: 0.0,
            detail: detail.into(),
        }
    }

    pub fn skipped(name: &str, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: Status::Skip,
            metric: "exact",
            max_abs_err: 0.0,
            tol: 0.0,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeInfo {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub s: usize,
}

impl From<&Scheme> for SchemeInfo {
    fn from(s: &Scheme) -> Self {
        SchemeInfo {
            m: s.m(),
            n: s.n(),
            r: s.r(),
            s: s.s(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingInfo {
    #[serde(flatten)]
    pub couplings: Couplings,
    pub mu: MuParams,
}

impl From<Couplings> for CouplingInfo {
    fn from(c: Couplings) -> Self {
        CouplingInfo { couplings: c, mu: c.mu() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<Value>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<CouplingInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Value>>,
    pub seed: u64,
    pub wall_clock_s: f64,
}

impl Report {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            status: Status::Pass,
            scheme: None,
            case: None,
            params: None,
            checks: Vec::new(),
            couplings: None,
            rows: None,
            samples: None,
            seed,
            wall_clock_s: 0.0,
        }
    }

    /// Overall status: pass iff no check failed.
    pub fn finalize(&mut self) {
        self.status = if self.checks.iter().any(|c| c.status == Status::Fail) {
            Status::Fail
        } else {
            Status::Pass
        };
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn print_summary(&self) {
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            println!(
                "{tag} {:<28} {}={:.3e} tol={:.1e}  {}",
                c.name, c.metric, c.max_abs_err, c.tol, c.detail
            );
        }
        if let Some(ci) = &self.couplings {
            let c = &ci.couplings;
            println!(
                "couplings a={} b={} c={} C={}  mu(e+-e)={} mu(e)={} mu(2e)={}",
                c.a, c.b, c.c, c.constant, ci.mu.mu_pm, ci.mu.mu_short, ci.mu.mu_long
            );
        }
        if let Some(rows) = &self.rows {
            println!("{} rows", rows.len());
        }
        println!("status: {}", if self.passed() { "pass" } else { "fail" });
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        if path.as_os_str() == "-" {
            println!("{text}");
            return Ok(());
        }
        let mut f = File::create(path)?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")
    }

    /// Rows when present, otherwise the checks, as a flat table.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(std::io::Error::other)?;
        match &self.rows {
            Some(rows) if !rows.is_empty() => {
                let header: Vec<String> = flat_keys(&rows[0]);
                w.write_record(&header).map_err(std::io::Error::other)?;
                for r in rows {
                    let rec: Vec<String> = header.iter().map(|k| flat_get(r, k)).collect();
                    w.write_record(&rec).map_err(std::io::Error::other)?;
                }
            }
            _ => {
                w.write_record(["name", "status", "metric", "max_abs_err", "tol", "detail"])
                    .map_err(std::io::Error::other)?;
                for c in &self.checks {
                    let status = serde_json::to_value(c.status).unwrap();
                    w.write_record([
                        c.name.clone(),
                        status.as_str().unwrap_or_default().to_string(),
                        c.metric.to_string(),
                        c.max_abs_err.to_string(),
                        c.tol.to_string(),
                        c.detail.clone(),
                    ])
                    .map_err(std::io::Error::other)?;
                }
            }
        }
        w.flush()
    }
}

fn flat_keys(v: &Value) -> Vec<String> {
    match v {
        Value::Object(m) => m.keys().cloned().collect(),
        _ => vec!["value".into()],
    }
}

fn flat_get(v: &Value, k: &str) -> String {
    match v.get(k) {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}
