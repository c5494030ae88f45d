//! Machine-readable verification reports.
//!
//! Reports are deterministic for a fixed configuration: records are kept in
//! insertion order (the drivers iterate checks and samples in a fixed
//! order), maps serialize with sorted keys, and floats print with 17
//! significant digits so equal runs produce byte-identical JSON.

use serde::Serialize;
use serde_json::Value;

/// One verification record: a named check at a serialized point.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    /// Stable identifier of the identity being verified.
    pub name: String,
    /// Serialized sample point (group element, arrow, ...).
    pub point: Value,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// A batch verification report.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub group: String,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub records: Vec<Record>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

impl Report {
    pub fn new(group: &str, seed: u64, samples: usize, tolerance: f64) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            group: group.to_string(),
            seed,
            samples,
            tolerance,
            timestamp: None,
            records: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn with_timestamp(mut self) -> Self {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.timestamp = Some(format!("{now}"));
        self
    }

    pub fn push(&mut self, name: impl Into<String>, point: Value, residual: f64, tolerance: f64) {
        let pass = residual <= tolerance;
        self.records.push(Record {
            name: name.into(),
            point,
            residual,
            tolerance,
            pass,
        });
        self.summary.total += 1;
        if pass {
            self.summary.passed += 1;
        } else {
            self.summary.failed += 1;
        }
    }

    /// Push a record that carries a boolean outcome rather than a residual.
    pub fn push_flag(&mut self, name: impl Into<String>, point: Value, pass: bool) {
        self.push(name, point, if pass { 0.0 } else { 1.0 }, 0.5);
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// Deterministic JSON with sorted keys and 17-significant-digit floats.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        to_json_17sig(&value)
    }
}

/// Render a JSON value with object keys sorted and every float printed with
/// 17 significant digits (enough to round-trip any f64 bit pattern).
pub fn to_json_17sig(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, indent: usize) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                write_f64(out, f);
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string escapes"));
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item, indent);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            let pad = "  ".repeat(indent + 1);
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push_str(",\n");
                }
                out.push_str(&pad);
                out.push_str(&serde_json::to_string(key).expect("key escapes"));
                out.push_str(": ");
                write_value(out, &map[*key], indent + 1);
            }
            out.push('\n');
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
    }
}

fn write_f64(out: &mut String, f: f64) {
    if !f.is_finite() {
        // JSON has no inf/nan; encode as strings so documents stay valid
        out.push_str(&format!("\"{f}\""));
        return;
    }
    if f == f.trunc() && f.abs() < 1e15 {
        // integral value: keep it readable, still bit-exact
        out.push_str(&format!("{:.1}", f));
    } else {
        out.push_str(&format!("{:.16e}", f));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorted_keys_and_float_format() {
        let v = json!({"b": 1.5, "a": {"z": 0.1, "y": 2}});
        let s = to_json_17sig(&v);
        let a_pos = s.find("\"a\"").unwrap();
        let b_pos = s.find("\"b\"").unwrap();
        assert!(a_pos < b_pos);
        assert!(s.contains("1.5"));
        assert!(s.contains("1.0000000000000001e-1"));
    }

    #[test]
    fn float_round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 2.0_f64.powi(-40), -1.2345678901234567e88] {
            let s = to_json_17sig(&json!({ "x": x }));
            let v: Value = serde_json::from_str(&s).unwrap();
            assert_eq!(v["x"].as_f64().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn report_counts_and_determinism() {
        let mut r = Report::new("so3", 42, 10, 1e-9);
        r.push("check-a", json!([1.0, 0.0]), 1e-12, 1e-9);
        r.push("check-b", json!([0.0, 1.0]), 1e-3, 1e-9);
        assert_eq!(r.summary.total, 2);
        assert_eq!(r.summary.passed, 1);
        assert!(!r.all_passed());
        let s1 = r.to_json();
        let s2 = r.to_json();
        assert_eq!(s1, s2);
        assert!(!s1.contains("timestamp"));
    }
}
