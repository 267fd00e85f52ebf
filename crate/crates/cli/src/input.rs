//! Instance documents and inline distributions.
//!
//! An instance document is a JSON object:
//!
//! ```json
//! {"distributions": [[0.6, 0.4], ["1/2", "1/2"]], "renormalize": false}
//! ```
//!
//! Masses are JSON numbers or strings holding a decimal or `a/b` rational.
//! Any string mass, `"numeric_mode": "exact-rational"` or `--exact` selects
//! exact arithmetic; numbers are then read from their decimal text, so
//! `0.1` means exactly `1/10`.

use std::fs;
use std::path::Path;

use mec_core::scalar::parse_rational;
use mec_core::{make_distribution, BigRational, Instance, NumericMode, Scalar, Tolerance};
use serde_json::Value;

use crate::error::CliError;

pub enum Loaded {
    Float(Instance<f64>),
    Exact(Instance<BigRational>),
}

struct Mass {
    text: String,
    path: String,
}

struct Document {
    masses: Vec<Vec<Mass>>,
    exact: bool,
    renormalize: bool,
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

pub fn load_file(path: &Path, force_exact: bool, tol: Tolerance) -> Result<Loaded, CliError> {
    let origin = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| input(format!("{origin}: {e}")))?;
    parse_document(&text, &origin, force_exact, tol)
}

pub fn parse_document(
    text: &str,
    origin: &str,
    force_exact: bool,
    tol: Tolerance,
) -> Result<Loaded, CliError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| input(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
    let doc = read_document(&value).map_err(|e| input(format!("{origin}: {e}")))?;
    build(doc, force_exact, tol, origin)
}

/// Parses `"0.5,0.25,1/4"`. A rational `a/b` entry selects exact mode.
pub fn parse_inline(text: &str, force_exact: bool, tol: Tolerance) -> Result<Loaded, CliError> {
    let masses: Vec<Mass> = text
        .split(',')
        .enumerate()
        .map(|(k, t)| Mass {
            text: t.trim().to_string(),
            path: format!("--dist[{k}]"),
        })
        .collect();
    let exact = masses.iter().any(|m| m.text.contains('/'));
    let doc = Document {
        masses: vec![masses],
        exact,
        renormalize: false,
    };
    build(doc, force_exact, tol, "--dist")
}

fn read_document(value: &Value) -> Result<Document, String> {
    let Value::Object(map) = value else {
        return Err("expected an object with a \"distributions\" array".into());
    };
    if let Some(key) = map
        .keys()
        .find(|k| !["distributions", "numeric_mode", "renormalize"].contains(&k.as_str()))
    {
        return Err(format!("unknown field \"{key}\""));
    }
    let mut exact = match map.get("numeric_mode") {
        None => false,
        Some(Value::String(s)) if s == NumericMode::Float64.as_str() => false,
        Some(Value::String(s)) if s == NumericMode::ExactRational.as_str() => true,
        Some(other) => {
            return Err(format!(
                "numeric_mode: expected \"float64\" or \"exact-rational\", found {other}"
            ))
        }
    };
    let renormalize = match map.get("renormalize") {
        None => false,
        Some(Value::Bool(b)) => *b,
        Some(other) => return Err(format!("renormalize: expected a boolean, found {other}")),
    };
    let Some(dists) = map.get("distributions") else {
        return Err("missing field \"distributions\"".into());
    };
    let Value::Array(dists) = dists else {
        return Err("distributions: expected an array of arrays".into());
    };
    if dists.is_empty() {
        return Err("distributions: instance needs at least one marginal".into());
    }
    let mut masses = Vec::with_capacity(dists.len());
    for (i, d) in dists.iter().enumerate() {
        let Value::Array(values) = d else {
            return Err(format!("distributions[{i}]: expected an array of masses"));
        };
        if values.is_empty() {
            return Err(format!("distributions[{i}]: distribution has no states"));
        }
        let mut row = Vec::with_capacity(values.len());
        for (k, v) in values.iter().enumerate() {
            let path = format!("distributions[{i}][{k}]");
            let text = match v {
                Value::Number(x) => x.to_string(),
                Value::String(s) => {
                    exact = true;
                    s.clone()
                }
                other => return Err(format!("{path}: expected a number, found {other}")),
            };
            row.push(Mass { text, path });
        }
        masses.push(row);
    }
    Ok(Document {
        masses,
        exact,
        renormalize,
    })
}

fn build(
    doc: Document,
    force_exact: bool,
    tol: Tolerance,
    origin: &str,
) -> Result<Loaded, CliError> {
    if force_exact || doc.exact {
        build_as::<BigRational>(&doc, tol, origin).map(Loaded::Exact)
    } else {
        build_as::<f64>(&doc, tol, origin).map(Loaded::Float)
    }
}

fn build_as<T: Scalar>(
    doc: &Document,
    tol: Tolerance,
    origin: &str,
) -> Result<Instance<T>, CliError> {
    let mut marginals = Vec::with_capacity(doc.masses.len());
    for (i, row) in doc.masses.iter().enumerate() {
        let mut values = Vec::with_capacity(row.len());
        for mass in row {
            let value = parse_rational(&mass.text).ok_or_else(|| {
                input(format!(
                    "{origin}: {}: not a number: \"{}\"",
                    mass.path, mass.text
                ))
            })?;
            if value < BigRational::from_integer(0.into()) && !within_clamp::<T>(&value, tol) {
                return Err(input(format!(
                    "{origin}: {}: negative mass {}",
                    mass.path, mass.text
                )));
            }
            values.push(T::from_rational(&value));
        }
        let d = make_distribution(values, doc.renormalize, tol)
            .map_err(|e| input(format!("{origin}: distributions[{i}]: {e}")))?;
        marginals.push(d);
    }
    Instance::new(marginals).map_err(|e| input(format!("{origin}: {e}")))
}

/// Float mode tolerates tiny negative masses (they are clamped to zero).
fn within_clamp<T: Scalar>(value: &BigRational, tol: Tolerance) -> bool {
    !T::is_exact() && Scalar::to_f64(value) >= -tol.mass
}
