//! Parameter records shared by every stage of the construction.

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

/// Largest bubble count accepted; `A^n` must stay well inside f64 range.
pub const MAX_BUBBLES: usize = 64;
/// Cap on the initial amplitude span `A^n`.
pub const MAX_AMPLITUDE_SPAN: f64 = 2.0e19;

/// Optional `mu |xi|^alpha` damping, used only by the direct solver as a stabilizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Dissipation {
    pub enabled: bool,
    pub mu: f64,
    pub alpha: f64,
}

impl Default for Dissipation {
    fn default() -> Self {
        Self {
            enabled: false,
            mu: 1e-6,
            alpha: 2.0,
        }
    }
}

impl Dissipation {
    pub fn effective_mu(&self) -> f64 {
        if self.enabled {
            self.mu
        } else {
            0.0
        }
    }
}

/// Exponents of the profile ansatz `B_k = x_k^c (r/A)^{dk} W_k(...)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileExponents {
    pub c: f64,
    pub d: f64,
}

impl Default for ProfileExponents {
    fn default() -> Self {
        Self { c: 4.0, d: 3.0 }
    }
}

/// Every constant of the construction in one validated record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Model coefficient multiplying both nonlinear terms.
    pub b: f64,
    /// Amplitude ratio `A`.
    #[serde(rename = "A", alias = "amp")]
    pub amp: f64,
    /// Length ratio `r`.
    pub r: f64,
    /// Index of the last bubble; the atlas holds `n + 1` bubbles.
    pub n: usize,
    /// Bootstrap radius in the homogeneous H^4 seminorm.
    pub epsilon: f64,
    pub c: f64,
    pub d: f64,
    /// Length of the backward time window `[-T, 0]`.
    #[serde(rename = "T", alias = "t_final")]
    pub t_final: f64,
    /// Constant coupling used by the ODE-only cascade.
    pub delta: f64,
    /// Multiply the scaling-factor ODE by `b`.
    pub include_b_in_ode: bool,
    pub dissipation: Dissipation,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            b: 1.0,
            amp: 2.0,
            r: 0.05,
            n: 12,
            epsilon: 0.1,
            c: 4.0,
            d: 3.0,
            t_final: 1.0,
            delta: 1.0,
            include_b_in_ode: true,
            dissipation: Dissipation::default(),
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.cascade().validate()?;
        if !(self.epsilon > 0.0) {
            return Err(CascadeError::Config(format!(
                "epsilon > 0 violated (epsilon = {})",
                self.epsilon
            )));
        }
        if !(self.t_final > 0.0) {
            return Err(CascadeError::Config(format!("T > 0 violated (T = {})", self.t_final)));
        }
        if !self.c.is_finite() || !self.d.is_finite() {
            return Err(CascadeError::Config("profile exponents must be finite".into()));
        }
        if self.dissipation.enabled && !(self.dissipation.mu >= 0.0 && self.dissipation.alpha > 0.0) {
            return Err(CascadeError::Config(
                "dissipation requires mu >= 0 and alpha > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn cascade(&self) -> CascadeParams {
        CascadeParams {
            amp: self.amp,
            r: self.r,
            n: self.n,
            delta: self.delta,
            b: self.b,
        }
    }

    pub fn exponents(&self) -> ProfileExponents {
        ProfileExponents { c: self.c, d: self.d }
    }

    /// Factor multiplying the scaling-factor ODE.
    pub fn ode_factor(&self) -> f64 {
        if self.include_b_in_ode {
            self.b
        } else {
            1.0
        }
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }
}

/// The finite-dimensional cascade constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeParams {
    pub amp: f64,
    pub r: f64,
    pub n: usize,
    pub delta: f64,
    pub b: f64,
}

impl CascadeParams {
    pub fn validate(&self) -> Result<()> {
        let Self { amp, r, n, delta, b } = *self;
        if !(amp > 1.0) {
            return Err(CascadeError::Config(format!("A > 1 violated (A = {amp})")));
        }
        if !(r > 0.0 && r < 0.125) {
            return Err(CascadeError::Config(format!("0 < r < 1/8 violated (r = {r})")));
        }
        if amp * r >= 1.0 {
            return Err(CascadeError::Config(format!("Ar ≥ 1 (Ar = {})", amp * r)));
        }
        if amp * r.sqrt() >= 1.0 {
            return Err(CascadeError::Config(format!(
                "Ar^{{1/2}} ≥ 1 (Ar^{{1/2}} = {})",
                amp * r.sqrt()
            )));
        }
        if (1.0 + 2.0 * r) * r >= 1.0 - 2.0 * r {
            return Err(CascadeError::Config("(1+2r)r < 1-2r violated".into()));
        }
        if n > MAX_BUBBLES || amp.powi(n as i32) > MAX_AMPLITUDE_SPAN {
            return Err(CascadeError::Config(format!(
                "bubble count n = {n} exceeds the double-precision span (A^n ≤ {MAX_AMPLITUDE_SPAN:e}, n ≤ {MAX_BUBBLES})"
            )));
        }
        if !(delta > 0.0) {
            return Err(CascadeError::Config(format!("delta > 0 violated (delta = {delta})")));
        }
        if b == 0.0 || !b.is_finite() {
            return Err(CascadeError::Config("b ≠ 0 violated".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ModelParams::default().validate().unwrap();
    }

    #[test]
    fn violations_name_the_inequality() {
        let p = ModelParams {
            amp: 5.0,
            r: 0.05,
            ..Default::default()
        };
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("Ar^{1/2} ≥ 1"), "{msg}");

        let p = ModelParams {
            r: 0.2,
            ..Default::default()
        };
        assert!(p.validate().unwrap_err().to_string().contains("r < 1/8"));

        let p = ModelParams {
            amp: 0.8,
            ..Default::default()
        };
        assert!(p.validate().unwrap_err().to_string().contains("A > 1"));

        let p = ModelParams {
            n: 65,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn toml_round_trip_uses_model_symbols() {
        let p = ModelParams::default();
        let s = toml::to_string(&p).unwrap();
        assert!(s.contains("A = 2.0"));
        let back: ModelParams = toml::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
