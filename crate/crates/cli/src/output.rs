//! CSV and JSON artifacts.

use std::fs;
use std::path::Path;

use noonsim::config::ConfigDoc;
use noonsim::experiment::SweepResult;
use noonsim::FitResult;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Version of the CSV/JSON layout written by this build.
pub const SCHEMA_VERSION: u64 = 1;

pub const CSV_HEADER: [&str; 9] = [
    "control",
    "P_split",
    "P_bunch_A",
    "P_bunch_B",
    "R_cc_expected",
    "acc_expected",
    "counts_raw",
    "counts_net",
    "sigma",
];

/// SHA-256 of the parsed document, so key order and comments do not matter.
pub fn config_hash(doc: &ConfigDoc) -> String {
    let canonical = serde_json::to_string(doc).expect("config serialises");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> CliResult<()> {
    if result.rows.is_empty() {
        return Err(CliError::Runtime(format!("{}: sweep has no rows", result.name)));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| io_err(path, e))?;
    for r in &result.rows {
        let fields = [
            r.control,
            r.p_split,
            r.p_bunch_a,
            r.p_bunch_b,
            r.r_cc_expected,
            r.acc_expected,
            r.counts_raw,
            r.counts_net,
            r.sigma,
        ];
        w.write_record(fields.iter().map(|v| num(*v))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Reads `control`, `counts_net` and `sigma` from a sweep CSV.
pub fn read_csv(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(format!("cannot read: {e}")))?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("missing column {name:?}")))
    };
    let idx = [column("control")?, column("counts_net")?, column("sigma")?];
    let mut cols = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let mut vals = [0.0; 3];
        for (k, &i) in idx.iter().enumerate() {
            let field = rec.get(i).unwrap_or("");
            vals[k] = field
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: {:?} is not a number", line + 2, field)))?;
        }
        cols.0.push(vals[0]);
        cols.1.push(vals[1]);
        cols.2.push(vals[2]);
    }
    if cols.0.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(cols)
}

fn named(names: &[&str], values: &[f64]) -> Value {
    let mut m = Map::new();
    for (n, v) in names.iter().zip(values) {
        m.insert(n.to_string(), json!(v));
    }
    Value::Object(m)
}

pub fn fit_value(fit: &FitResult) -> Value {
    let names = fit.model.param_names();
    let pick = |flags: &[bool]| -> Vec<&str> {
        names.iter().zip(flags).filter(|(_, f)| **f).map(|(n, _)| *n).collect()
    };
    json!({
        "model": fit.model.to_string(),
        "params": named(names, &fit.params),
        "uncertainties": named(names, &fit.uncertainties),
        "fixed": pick(&fit.fixed),
        "at_bound": pick(&fit.at_bound),
        "covariance": fit.covariance,
        "covariance_unscaled": fit.covariance_unscaled,
        "chi2": fit.chi2,
        "dof": fit.dof,
        "chi2_per_dof": fit.chi2_per_dof(),
        "iterations": fit.iterations,
        "converged": fit.converged,
        "n_max": fit.n_max,
        "n_min": fit.n_min,
        "visibility": fit.visibility,
        "visibility_sigma": fit.visibility_sigma,
    })
}

pub fn result_value(result: &SweepResult, config_hash: &str) -> Value {
    let series: Vec<Value> = result
        .series
        .iter()
        .map(|s| {
            json!({
                "label": s.label,
                "points": s.x.len(),
                "fit": s.fit.as_ref().map(fit_value),
            })
        })
        .collect();
    let mut metrics = Map::new();
    for (k, v) in &result.metrics {
        metrics.insert(k.clone(), json!(v));
    }
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": result.kind.as_str(),
        "name": result.name,
        "config_hash": config_hash,
        "seed": result.seed,
        "noiseless": result.seed.is_none(),
        "points": result.rows.len(),
        "columns": CSV_HEADER,
        "series": series,
        "metrics": metrics,
    })
}

pub fn fit_json(fit: &FitResult, source: &str) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "fit",
        "name": source,
        "source": source,
        "series": [{ "label": source, "points": fit.dof + fit.fixed.iter().filter(|f| !**f).count(), "fit": fit_value(fit) }],
        "metrics": {},
    })
}

pub fn write_json(value: &Value, path: &Path) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("json value serialises");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn emit_json(result: &SweepResult, config_hash: &str, path: &Path) -> CliResult<()> {
    write_json(&result_value(result, config_hash), path)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

/// Human-readable summary of a result file.
pub fn summarise(doc: &Value) -> Result<String, String> {
    match doc.get("schema_version").and_then(Value::as_u64) {
        Some(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(format!(
                "schema_version {v} is not supported (this build reads version {SCHEMA_VERSION})"
            ))
        }
        None => return Err("missing schema_version".into()),
    }
    let field = |k: &str| doc.get(k).and_then(Value::as_str).unwrap_or("?").to_string();
    let mut out = format!("{} [{}]\n", field("name"), field("kind"));
    match doc.get("seed").and_then(Value::as_u64) {
        Some(s) => out += &format!("seed: {s}\n"),
        None => out += "seed: none (expected counts)\n",
    }
    if let Some(h) = doc.get("config_hash").and_then(Value::as_str) {
        out += &format!("config: {h}\n");
    }
    for s in doc.get("series").and_then(Value::as_array).into_iter().flatten() {
        let label = s.get("label").and_then(Value::as_str).unwrap_or("?");
        match s.get("fit").filter(|f| !f.is_null()) {
            Some(fit) => {
                out += &format!(
                    "{label}: {} V = {} ± {} (χ²/dof {})\n",
                    fit.get("model").and_then(Value::as_str).unwrap_or("?"),
                    fmt_opt(fit.get("visibility").and_then(Value::as_f64)),
                    fmt_opt(fit.get("visibility_sigma").and_then(Value::as_f64)),
                    fmt_opt(fit.get("chi2_per_dof").and_then(Value::as_f64)),
                );
            }
            None => out += &format!("{label}: no fit\n"),
        }
    }
    if let Some(m) = doc.get("metrics").and_then(Value::as_object) {
        for (k, v) in m {
            out += &format!("{k} = {}\n", fmt_opt(v.as_f64()));
        }
    }
    Ok(out)
}
