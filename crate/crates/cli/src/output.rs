use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use singcert::report::VerificationReport;

pub const SCHEMA: &str = "singcert-report/1";

#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub schema: &'static str,
    pub version: &'static str,
    /// Excluded from reproducibility comparisons.
    pub timestamp: String,
    pub config: Value,
    pub status: &'a str,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification: Option<&'a VerificationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Null => {}
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// One `field,value` row per scalar leaf of the report.
pub fn write_csv(path: &Path, report: &Value) -> std::io::Result<()> {
    let mut rows = Vec::new();
    flatten("", report, &mut rows);
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["field", "value"])?;
    for (k, v) in rows {
        w.write_record([k, v])?;
    }
    w.flush()
}
