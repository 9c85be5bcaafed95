//! Run configuration: TOML or JSON, dotted overrides, validation before any work.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use emhd_cascade::cascade_ode::IntegrationOptions;
use emhd_cascade::diagnostics::{HolderOptions, ProbeOptions};
use emhd_cascade::direct_solver::{CrosscheckOptions, DirectOptions};
use emhd_cascade::profile::CoupledOptions;
use emhd_cascade::{CascadeError, ModelParams, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Cascade,
    Direct,
    Crosscheck,
    Diagnose,
    Root,
    HilbertSelftest,
}

impl FromStr for Mode {
    type Err = CascadeError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| CascadeError::Config(format!("unknown mode '{s}' (cascade|direct|crosscheck|diagnose|root|hilbert-selftest)")))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Numerics {
    /// Grid points per bubble profile.
    pub points_per_bubble: usize,
    /// Bubble count minus one for the ODE-only cascade and the diagnostics snapshots.
    pub ode_bubbles: usize,
    /// The ODE runs from 0 back to `-ode_window`.
    pub ode_window: f64,
    /// `|t|` range of the blow-up rate fit and the self-similarity checkpoints.
    pub fit_window: (f64, f64),
    /// Checkpoints kept for the self-similarity probe.
    pub checkpoints: usize,
    /// Run the coupled profile solver in cascade mode.
    pub profiles: bool,
    /// Run the self-similarity probe in diagnose mode.
    pub selfsim_probe: bool,
    /// Points of the sampled field written to `field.csv`.
    pub field_points: usize,
    /// Bubble count minus one embedded by the direct mode.
    pub direct_bubbles: usize,
    pub direct_points: usize,
    pub direct_period: f64,
    pub direct_time: f64,
    /// Seed resolution used by the crosscheck embedding.
    pub crosscheck_seed_points: usize,
    pub integration: IntegrationOptions,
    pub coupled: CoupledOptions,
    pub direct: DirectOptions,
    pub crosscheck: CrosscheckOptions,
    pub holder: HolderOptions,
    pub probe: ProbeOptions,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            points_per_bubble: 512,
            ode_bubbles: 30,
            ode_window: 2.0,
            fit_window: (2f64.powi(-25), 2f64.powi(-5)),
            checkpoints: 49,
            profiles: false,
            selfsim_probe: true,
            field_points: 8192,
            direct_bubbles: 1,
            direct_points: 1 << 15,
            direct_period: 16.0,
            direct_time: 1e-6,
            crosscheck_seed_points: 4096,
            integration: IntegrationOptions::default(),
            coupled: CoupledOptions::default(),
            direct: DirectOptions::default(),
            crosscheck: CrosscheckOptions::default(),
            holder: HolderOptions::default(),
            probe: ProbeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Output {
    pub dir: PathBuf,
    pub plots: bool,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("emhd-run"),
            plots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: ModelParams,
    pub numerics: Numerics,
    pub output: Output,
}

impl RunConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let value = parse_value(text)?;
        from_value(value)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CascadeError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `key=value` overrides with dotted keys, e.g. `params.A=1.5` or `numerics.coupled.steps=32`.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| CascadeError::Config(format!("override '{item}' is not key=value")))?;
            set_dotted(&mut value, key.trim(), parse_scalar(raw.trim()))?;
        }
        from_value(value)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n = &self.numerics;
        if n.points_per_bubble < 64 || !n.points_per_bubble.is_power_of_two() {
            return Err(CascadeError::Config(format!(
                "points_per_bubble must be a power of two ≥ 64 (got {})",
                n.points_per_bubble
            )));
        }
        if matches!(self.mode, Mode::Cascade | Mode::Diagnose) {
            if !(n.fit_window.0 > 0.0 && n.fit_window.0 < n.fit_window.1) {
                return Err(CascadeError::Config("fit_window needs 0 < lo < hi".into()));
            }
            if !(n.ode_window >= n.fit_window.1) {
                return Err(CascadeError::Config(format!(
                    "ode_window ≥ fit_window upper end violated ({} < {})",
                    n.ode_window, n.fit_window.1
                )));
            }
            let a = emhd_cascade::solve_root(self.params.amp)?;
            if !(n.ode_window >= a) {
                return Err(CascadeError::Config(format!(
                    "ode_window ≥ a violated ({} < {a:.6}); the integral bound needs [-a, 0]",
                    n.ode_window
                )));
            }
            let ode = ModelParams {
                n: n.ode_bubbles,
                ..self.params.clone()
            };
            ode.validate()?;
        }
        Ok(())
    }
}

fn parse_value(text: &str) -> Result<serde_json::Value> {
    if text.trim_start().starts_with('{') {
        return Ok(serde_json::from_str(text)?);
    }
    let table: toml::Table = toml::from_str(text).map_err(|e| CascadeError::Config(format!("TOML: {e}")))?;
    serde_json::to_value(table).map_err(Into::into)
}

fn from_value(value: serde_json::Value) -> Result<RunConfig> {
    serde_json::from_value(value).map_err(|e| CascadeError::Config(e.to_string()))
}

fn parse_scalar(raw: &str) -> serde_json::Value {
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(raw) {
        return v;
    }
    serde_json::Value::String(raw.to_string())
}

fn set_dotted(root: &mut serde_json::Value, key: &str, value: serde_json::Value) -> Result<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CascadeError::Config(format!("override '{key}': '{part}' is not inside a table")))?;
        let name = if obj.contains_key(*part) {
            part.to_string()
        } else {
            obj.keys()
                .find(|k| k.eq_ignore_ascii_case(part))
                .cloned()
                .ok_or_else(|| CascadeError::Config(format!("override '{key}': unknown key '{part}'")))?
        };
        if i + 1 == parts.len() {
            obj.insert(name, value);
            return Ok(());
        }
        cur = obj.get_mut(&name).expect("key present");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let t = RunConfig::parse("mode = \"root\"\n[params]\nA = 3.0\n").unwrap();
        let j = RunConfig::parse(r#"{"mode": "root", "params": {"A": 3.0}}"#).unwrap();
        assert_eq!(t, j);
        assert_eq!(t.params.amp, 3.0);
        assert_eq!(t.params.r, 0.05);
    }

    #[test]
    fn dotted_overrides() {
        let c = RunConfig::default()
            .with_overrides(&["params.A=1.5".into(), "numerics.coupled.steps=32".into(), "mode=diagnose".into()])
            .unwrap();
        assert_eq!(c.params.amp, 1.5);
        assert_eq!(c.numerics.coupled.steps, 32);
        assert_eq!(c.mode, Mode::Diagnose);
        assert!(RunConfig::default().with_overrides(&["params.nope=1".into()]).is_err());
        assert!(RunConfig::default().with_overrides(&["params.A".into()]).is_err());
    }

    #[test]
    fn invalid_parameters_name_the_inequality() {
        let c = RunConfig::default().with_overrides(&["params.A=5".into()]).unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("Ar^{1/2} ≥ 1"), "{msg}");
    }

    #[test]
    fn mode_names() {
        assert_eq!("hilbert-selftest".parse::<Mode>().unwrap(), Mode::HilbertSelftest);
        assert_eq!(Mode::Crosscheck.to_string(), "crosscheck");
        assert!("fast".parse::<Mode>().is_err());
    }
}
