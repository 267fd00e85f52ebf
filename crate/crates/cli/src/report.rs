use std::fmt::Write as _;

use mec_core::{BigRational, Scalar};
use serde_json::{Map, Value};

/// One invocation's output. `json` keys are sorted by `serde_json`'s
/// default map, so structured output is byte-stable.
pub struct Report {
    pub json: Map<String, Value>,
    pub text: String,
    /// `false` exits with status 2 after printing.
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut json = Map::new();
        json.insert("command".into(), command.into());
        Report {
            json,
            text: String::new(),
            passed: true,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.json.insert(key.into(), value.into());
    }

    pub fn line(&mut self, line: impl AsRef<str>) {
        self.text.push_str(line.as_ref());
        self.text.push('\n');
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let mut out = serde_json::to_string_pretty(&self.json).expect("json map serializes");
            out.push('\n');
            out
        } else {
            let mut out = self.text.clone();
            let _ = writeln!(out, "result: {}", if self.passed { "PASS" } else { "FAIL" });
            out
        }
    }
}

/// Full precision float, or an `"a/b"` string in exact mode.
pub fn mass_json<T: Scalar>(x: &T) -> Value {
    if T::is_exact() {
        Value::String(x.to_string())
    } else {
        float_json(x.to_f64())
    }
}

pub fn masses_json<T: Scalar>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(mass_json).collect())
}

/// Exact oracle masses shown in the instance's own mode.
pub fn rational_json(x: &BigRational, exact: bool) -> Value {
    if exact {
        Value::String(x.to_string())
    } else {
        float_json(Scalar::to_f64(x))
    }
}

/// Non-finite values have no JSON form and become `null`.
pub fn float_json(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn fixed(x: f64) -> String {
    format!("{x:.9}")
}

pub fn mass_text<T: Scalar>(x: &T) -> String {
    if T::is_exact() {
        format!("{} ({})", fixed(x.to_f64()), x)
    } else {
        fixed(x.to_f64())
    }
}

pub fn masses_text<T: Scalar>(xs: &[T]) -> String {
    xs.iter().map(mass_text).collect::<Vec<_>>().join(", ")
}

pub fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "FAIL"
    }
}
