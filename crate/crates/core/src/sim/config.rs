//! Experiment configuration.
//!
//! The file is a flat list of dotted keys, e.g.
//!
//! ```text
//! sim.h = 1.0
//! sim.L = 8
//! plant.zeta = 0.1
//! plant.secondary.frequencies = [1.0, 2.0, 3.0, 4.0]
//! ```
//!
//! which is also valid TOML, so it is read with the `toml` parser. Every
//! key is optional; missing keys take the defaults of [`SimConfig::default`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{AncError, Result};
use crate::lti::ContinuousStateSpace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub sim: SimSection,
    pub plant: PlantSection,
    pub noise: NoiseSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    /// Sampling period (s).
    pub h: f64,
    /// Fast-sampling ratio of the proposed update; also the simulation grid.
    #[serde(rename = "L")]
    pub l: usize,
    /// FIR length.
    #[serde(rename = "N")]
    pub n_taps: usize,
    pub mu: f64,
    /// Horizon (s), a multiple of `h`.
    #[serde(rename = "T")]
    pub horizon: f64,
    pub mu_sweep: Vec<f64>,
    /// `‖e‖₂` level that separates acceptable from failed runs in a sweep.
    pub threshold: f64,
    /// Slowly-varying bound for the stability-condition report.
    pub epsilon: f64,
    /// Bisection steps used to sharpen the stable step-size estimate.
    pub refine_steps: usize,
    pub seed: u64,
    pub initial_taps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    /// Damping shared by every resonant section that does not list its own.
    pub zeta: f64,
    pub primary: BankSpec,
    pub secondary: BankSpec,
}

/// `Π 1/(s+p_i) · Σ_k g_k ω_k² / (s² + 2ζ_k ω_k s + ω_k²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankSpec {
    pub gains: Vec<f64>,
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub first_order_poles: Vec<f64>,
    #[serde(default)]
    pub dampings: Option<Vec<f64>>,
}

/// Sum of damped sinusoids `a_i e^{−σ_i t} sin(ω_i t + φ_i)`, or an
/// external waveform sampled on the fast grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub amplitudes: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub decays: Vec<f64>,
    /// Drawn uniformly from `[0, 2π)` with the run seed when absent.
    pub phases: Option<Vec<f64>>,
    /// One sample per line (optional header), spacing `h / L`.
    pub waveform: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            h: 1.0,
            l: 8,
            n_taps: 8,
            mu: 0.1,
            horizon: 100.0,
            mu_sweep: (1..=20).map(|i| i as f64 / 20.0).collect(),
            threshold: 10.0,
            epsilon: 0.1,
            refine_steps: 12,
            seed: 1,
            initial_taps: None,
        }
    }
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            zeta: 0.1,
            secondary: BankSpec {
                gains: vec![0.05; 4],
                frequencies: vec![1.0, 2.0, 3.0, 4.0],
                first_order_poles: vec![1.1],
                dampings: None,
            },
            primary: BankSpec {
                // 1.2 · 1.3 / 20
                gains: vec![0.078; 4],
                frequencies: vec![1.2, 2.4, 3.6, 4.8],
                first_order_poles: vec![1.2, 1.3],
                dampings: None,
            },
        }
    }
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            amplitudes: vec![2.0; 6],
            frequencies: vec![0.8, 1.6, 2.4, 3.6, 4.2, 4.8],
            decays: vec![0.03; 6],
            phases: None,
            waveform: None,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sim: SimSection::default(),
            plant: PlantSection::default(),
            noise: NoiseSection::default(),
            output: OutputSection::default(),
        }
    }
}

fn finite_all(field: &str, values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AncError::config(field, "all entries must be finite"));
    }
    Ok(())
}

impl BankSpec {
    pub fn build(&self, zeta: f64, field: &str) -> Result<ContinuousStateSpace> {
        let dampings = match &self.dampings {
            Some(d) => d.clone(),
            None => vec![zeta; self.gains.len()],
        };
        if self.gains.len() != self.frequencies.len() || dampings.len() != self.gains.len() {
            return Err(AncError::config(
                format!("{field}.gains"),
                "gains, frequencies and dampings must have the same length",
            ));
        }
        ContinuousStateSpace::from_second_order_bank(
            &self.gains,
            &dampings,
            &self.frequencies,
            &self.first_order_poles,
        )
        .map_err(|e| AncError::config(field, e.to_string()))
    }
}

impl SimConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| {
            AncError::config("config", e.message().to_string() + &span_hint(text, e.span()))
        })?;
        // Keys not given keep their defaults, also inside a plant bank.
        let mut merged = toml::Table::try_from(SimConfig::default())
            .map_err(|e| AncError::config("config", e.to_string()))?;
        merge(&mut merged, user);
        let cfg: SimConfig = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| AncError::config("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AncError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_str(&text)?;
        // waveform paths are relative to the config file
        if let (Some(wf), Some(dir)) = (&cfg.noise.waveform, path.parent()) {
            if wf.is_relative() {
                cfg.noise.waveform = Some(dir.join(wf));
            }
        }
        Ok(cfg)
    }

    pub fn steps(&self) -> usize {
        (self.sim.horizon / self.sim.h).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.sim;
        if !(s.h > 0.0) || !s.h.is_finite() {
            return Err(AncError::config("sim.h", "must be positive"));
        }
        if s.l == 0 {
            return Err(AncError::config("sim.L", "must be at least 1"));
        }
        if s.n_taps == 0 {
            return Err(AncError::config("sim.N", "must be at least 1"));
        }
        if !(s.mu >= 0.0) || !s.mu.is_finite() {
            return Err(AncError::config("sim.mu", "must be non-negative"));
        }
        if !(s.horizon > 0.0) || !s.horizon.is_finite() {
            return Err(AncError::config("sim.T", "must be positive"));
        }
        let ratio = s.horizon / s.h;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(AncError::config("sim.T", "must be a multiple of sim.h"));
        }
        if s.mu_sweep.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(AncError::config("sim.mu_sweep", "entries must be non-negative"));
        }
        if !(s.threshold > 0.0) {
            return Err(AncError::config("sim.threshold", "must be positive"));
        }
        if !(s.epsilon > 0.0) {
            return Err(AncError::config("sim.epsilon", "must be positive"));
        }
        if let Some(taps) = &s.initial_taps {
            if taps.len() != s.n_taps {
                return Err(AncError::config("sim.initial_taps", "length must equal sim.N"));
            }
            finite_all("sim.initial_taps", taps)?;
        }

        if !(self.plant.zeta > 0.0) {
            return Err(AncError::config("plant.zeta", "must be positive"));
        }
        self.secondary()?;
        self.primary()?;

        let n = &self.noise;
        if n.waveform.is_none() {
            let k = n.amplitudes.len();
            if n.frequencies.len() != k || n.decays.len() != k {
                return Err(AncError::config(
                    "noise.amplitudes",
                    "amplitudes, frequencies and decays must have the same length",
                ));
            }
            finite_all("noise.amplitudes", &n.amplitudes)?;
            finite_all("noise.frequencies", &n.frequencies)?;
            if n.decays.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
                return Err(AncError::config(
                    "noise.decays",
                    "decay rates must be positive for a square-integrable noise",
                ));
            }
            if let Some(p) = &n.phases {
                if p.len() != k {
                    return Err(AncError::config("noise.phases", "length must match noise.amplitudes"));
                }
                finite_all("noise.phases", p)?;
            }
        }
        Ok(())
    }

    pub fn secondary(&self) -> Result<ContinuousStateSpace> {
        let f = self.plant.secondary.build(self.plant.zeta, "plant.secondary")?;
        f.validate_plant("plant.secondary")
            .map_err(|e| AncError::config("plant.secondary", e.to_string()))?;
        Ok(f)
    }

    pub fn primary(&self) -> Result<ContinuousStateSpace> {
        let p = self.plant.primary.build(self.plant.zeta, "plant.primary")?;
        p.validate_plant("plant.primary")
            .map_err(|e| AncError::config("plant.primary", e.to_string()))?;
        Ok(p)
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::default().validate().unwrap();
        let cfg = SimConfig::from_str("").unwrap();
        assert_eq!(cfg, SimConfig::default());
        assert_eq!(cfg.steps(), 100);
    }

    #[test]
    fn dotted_keys_parse() {
        let cfg = SimConfig::from_str(
            "sim.h = 0.5\nsim.L = 4\nsim.T = 10.0\nplant.zeta = 0.2\nnoise.phases = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]\n",
        )
        .unwrap();
        assert_eq!(cfg.sim.h, 0.5);
        assert_eq!(cfg.sim.l, 4);
        assert_eq!(cfg.steps(), 20);
        assert_eq!(cfg.plant.zeta, 0.2);
    }

    #[test]
    fn field_level_errors() {
        let err = SimConfig::from_str("sim.T = 10.5").unwrap_err();
        assert!(matches!(err, AncError::Config { ref field, .. } if field == "sim.T"));
        let err = SimConfig::from_str("sim.L = 0").unwrap_err();
        assert!(matches!(err, AncError::Config { ref field, .. } if field == "sim.L"));
        let err = SimConfig::from_str("noise.decays = [0.1, 0.1, 0.1, 0.1, 0.1, 0.0]").unwrap_err();
        assert!(matches!(err, AncError::Config { ref field, .. } if field == "noise.decays"));
        let err = SimConfig::from_str("plant.secondary.first_order_poles = [-1.0]").unwrap_err();
        assert!(matches!(err, AncError::Config { ref field, .. } if field == "plant.secondary"));
        let err = SimConfig::from_str("sim.bogus = 1").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn default_plants_have_expected_order() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.secondary().unwrap().state_dim(), 9);
        assert_eq!(cfg.primary().unwrap().state_dim(), 10);
    }
}
