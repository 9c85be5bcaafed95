//! Run manifests and the numeric diff between two runs.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use emhd_cascade::diagnostics::MonitorSummary;
use emhd_cascade::{CascadeError, Result};

use crate::config::{Mode, RunConfig};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub mode: Mode,
    /// Full configuration with every default filled in.
    pub config: RunConfig,
    pub version: String,
    pub wall_time_s: f64,
    pub threads: usize,
    pub exit_code: i32,
    pub status: String,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub failures: Vec<MonitorSummary>,
    pub error: Option<String>,
}

/// Hash of the configuration without its output section.
pub fn run_id(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.output = Default::default();
    let text = serde_json::to_string(&c).expect("config serializes");
    let digest = Sha256::digest(text.as_bytes());
    format!("{digest:x}")[..16].to_string()
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let path = if path.is_dir() { path.join(MANIFEST) } else { path.to_path_buf() };
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| CascadeError::Schema(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigChange {
    pub key: String,
    pub a: serde_json::Value,
    pub b: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactDiff {
    pub name: String,
    /// Numbers compared.
    pub compared: usize,
    pub max_abs: f64,
    pub max_rel: f64,
    /// Set when the two files cannot be compared number by number.
    pub schema: Option<String>,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffReport {
    pub mode: Mode,
    pub tolerance: f64,
    /// The runs differ in configuration, so numeric differences are expected.
    pub config_level: bool,
    pub config_changes: Vec<ConfigChange>,
    pub artifacts: Vec<ArtifactDiff>,
    pub identical: bool,
    /// Same configuration and every artifact within `tolerance` (relative).
    pub pass: bool,
}

/// Compares the CSV and JSON artifacts of two runs of the same mode.
pub fn diff_runs(manifest_a: &Path, manifest_b: &Path, tolerance: f64) -> Result<DiffReport> {
    let ma = read_manifest(manifest_a)?;
    let mb = read_manifest(manifest_b)?;
    if ma.mode != mb.mode {
        return Err(CascadeError::Schema(format!("runs have different modes ({} vs {})", ma.mode, mb.mode)));
    }
    let dir = |p: &Path| if p.is_dir() { p.to_path_buf() } else { p.parent().unwrap_or(Path::new(".")).to_path_buf() };
    let (da, db) = (dir(manifest_a), dir(manifest_b));

    let mut ca = serde_json::to_value(&ma.config)?;
    let mut cb = serde_json::to_value(&mb.config)?;
    for c in [&mut ca, &mut cb] {
        if let Some(o) = c.as_object_mut() {
            o.remove("output");
        }
    }
    let (fa, fb) = (flatten(&ca), flatten(&cb));
    let keys: BTreeSet<&String> = fa.keys().chain(fb.keys()).collect();
    let config_changes: Vec<ConfigChange> = keys
        .into_iter()
        .filter(|k| fa.get(*k) != fb.get(*k))
        .map(|k| ConfigChange {
            key: k.clone(),
            a: fa.get(k).cloned().unwrap_or(serde_json::Value::Null),
            b: fb.get(k).cloned().unwrap_or(serde_json::Value::Null),
        })
        .collect();

    let names: BTreeSet<&String> = ma.artifacts.iter().chain(&mb.artifacts).collect();
    let mut artifacts = Vec::new();
    for name in names {
        if name.ends_with(".svg") {
            continue;
        }
        let mut d = ArtifactDiff {
            name: name.clone(),
            compared: 0,
            max_abs: 0.0,
            max_rel: 0.0,
            schema: None,
            within: true,
        };
        let texts = (fs::read_to_string(da.join(name)), fs::read_to_string(db.join(name)));
        let (Ok(ta), Ok(tb)) = texts else {
            d.schema = Some("missing in one run".into());
            d.within = false;
            artifacts.push(d);
            continue;
        };
        let numbers = if name.ends_with(".json") {
            json_numbers(&ta, &tb)
        } else {
            csv_numbers(&ta, &tb)
        };
        match numbers {
            Ok(pairs) => {
                for (x, y) in pairs {
                    d.compared += 1;
                    let abs = (x - y).abs();
                    if abs.is_nan() {
                        if x.is_nan() != y.is_nan() {
                            d.max_abs = f64::INFINITY;
                            d.max_rel = f64::INFINITY;
                        }
                        continue;
                    }
                    if x == y {
                        continue;
                    }
                    d.max_abs = d.max_abs.max(abs);
                    d.max_rel = d.max_rel.max(abs / x.abs().max(y.abs()));
                }
                d.within = d.max_rel <= tolerance;
            }
            Err(msg) => {
                d.schema = Some(msg);
                d.within = false;
            }
        }
        artifacts.push(d);
    }
    let identical = config_changes.is_empty() && artifacts.iter().all(|a| a.schema.is_none() && a.max_abs == 0.0);
    let config_level = !config_changes.is_empty();
    let pass = !config_level && artifacts.iter().all(|a| a.within);
    Ok(DiffReport {
        mode: ma.mode,
        tolerance,
        config_level,
        config_changes,
        artifacts,
        identical,
        pass,
    })
}

fn flatten(v: &serde_json::Value) -> BTreeMap<String, serde_json::Value> {
    fn go(prefix: &str, v: &serde_json::Value, out: &mut BTreeMap<String, serde_json::Value>) {
        match v {
            serde_json::Value::Object(m) => {
                for (k, x) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    go(&key, x, out);
                }
            }
            serde_json::Value::Array(a) => {
                for (i, x) in a.iter().enumerate() {
                    go(&format!("{prefix}[{i}]"), x, out);
                }
            }
            _ => {
                out.insert(prefix.to_string(), v.clone());
            }
        }
    }
    let mut out = BTreeMap::new();
    go("", v, &mut out);
    out
}

fn json_numbers(a: &str, b: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let va: serde_json::Value = serde_json::from_str(a).map_err(|e| e.to_string())?;
    let vb: serde_json::Value = serde_json::from_str(b).map_err(|e| e.to_string())?;
    let (fa, fb) = (flatten(&va), flatten(&vb));
    let num = |v: &serde_json::Value| v.as_f64().or_else(|| v.is_null().then_some(f64::NAN));
    let ka: BTreeSet<&String> = fa.iter().filter(|(_, v)| num(v).is_some()).map(|(k, _)| k).collect();
    let kb: BTreeSet<&String> = fb.iter().filter(|(_, v)| num(v).is_some()).map(|(k, _)| k).collect();
    if ka != kb {
        let first = ka.symmetric_difference(&kb).next().map(|s| s.as_str()).unwrap_or("");
        return Err(format!("JSON structure differs at '{first}'"));
    }
    Ok(ka.into_iter().map(|k| (num(&fa[k]).unwrap(), num(&fb[k]).unwrap())).collect())
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(|l| l.split(',').map(|c| c.trim().parse::<f64>().ok()).collect::<Option<Vec<f64>>>())
        .collect()
}

fn csv_numbers(a: &str, b: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let (ra, rb) = (csv_rows(a), csv_rows(b));
    if ra.len() != rb.len() {
        return Err(format!("row count differs ({} vs {})", ra.len(), rb.len()));
    }
    let mut out = Vec::new();
    for (i, (x, y)) in ra.iter().zip(&rb).enumerate() {
        if x.len() != y.len() {
            return Err(format!("column count differs in row {i}"));
        }
        out.extend(x.iter().copied().zip(y.iter().copied()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_ignores_output_dir() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output.dir = "elsewhere".into();
        assert_eq!(run_id(&a), run_id(&b));
        b.params.amp = 1.5;
        assert_ne!(run_id(&a), run_id(&b));
    }

    #[test]
    fn csv_diff_skips_metadata_and_headers() {
        let a = "# x = 1\nt,v\n1,2\n3,4\n";
        let b = "# x = 2\nt,v\n1,2\n3,4.5\n";
        let p = csv_numbers(a, b).unwrap();
        assert_eq!(p.len(), 4);
        assert!(csv_numbers(a, "t,v\n1,2\n").is_err());
    }

    #[test]
    fn json_diff_by_path() {
        let p = json_numbers(r#"{"a": 1, "b": [2, 3], "s": "x"}"#, r#"{"a": 1.5, "b": [2, 3], "s": "y"}"#).unwrap();
        assert_eq!(p.len(), 3);
        assert!(json_numbers(r#"{"a": 1}"#, r#"{"b": 1}"#).is_err());
    }
}
