//! Run configuration: a TOML file of flat sections.
//!
//! ```toml
//! [flow]
//! vorticity = [0.3, 0.0, 0.5]   # polynomial coefficients, constant first
//! h = 1.0
//! lambda = 0.8
//! regime = "fixed_period"       # or "variable_period"
//!
//! [continuation]
//! ds = 0.005
//! max_steps = 20
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use crate::continuation::ContinuationConfig;
use crate::linear_wave::{CStarChoice, Regime};
use crate::uniform_stream::DEFAULT_NODES;
use crate::vorticity::VorticityFn;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config value {key}: {message}")]
    Invalid { key: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    /// Polynomial coefficients of ω, constant first; empty means ω = 0.
    pub vorticity: Vec<f64>,
    pub h: f64,
    pub lambda: f64,
    pub regime: Regime,
    /// Nodes of the uniform-stream integrator.
    pub nodes: usize,
    /// Rows of `stream.csv`.
    pub samples: usize,
}

impl Default for FlowSection {
    fn default() -> Self {
        FlowSection {
            vorticity: Vec::new(),
            h: 1.0,
            lambda: 0.8,
            regime: Regime::FixedPeriod,
            nodes: DEFAULT_NODES,
            samples: 101,
        }
    }
}

impl FlowSection {
    pub fn vorticity_fn(&self) -> VorticityFn {
        if self.vorticity.iter().all(|&c| c == 0.0) {
            VorticityFn::Zero
        } else {
            VorticityFn::polynomial(self.vorticity.clone())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionSection {
    pub tau_max: f64,
    pub tau_points: usize,
    /// Optional [λ_min, λ_max] for a τ*(λ) table.
    pub lambda_range: Option<[f64; 2]>,
    pub lambda_points: usize,
    /// Step in λ for the transversality derivative.
    pub transversality_step: f64,
}

impl Default for DispersionSection {
    fn default() -> Self {
        DispersionSection {
            tau_max: 10.0,
            tau_points: 200,
            lambda_range: None,
            lambda_points: 11,
            transversality_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveSection {
    /// Amplitude of the linear wave, also the seed of `continue`.
    pub t: f64,
    pub c_star: CStarChoice,
    /// Points of the residual and surface samples.
    pub samples: usize,
}

impl Default for WaveSection {
    fn default() -> Self {
        WaveSection {
            t: 0.005,
            c_star: CStarChoice::Surface,
            samples: 65,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub flow: FlowSection,
    pub dispersion: DispersionSection,
    pub wave: WaveSection,
    pub continuation: ContinuationConfig,
    pub output: OutputSection,
}

fn positive(key: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key,
            message: format!("must be positive and finite, got {v}"),
        })
    }
}

fn at_least(key: &'static str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(ConfigError::Invalid {
            key,
            message: format!("must be at least {min}, got {v}"),
        })
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// λ itself may be zero or negative; the solvers report the degenerate case.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let f = &self.flow;
        positive("flow.h", f.h)?;
        if !f.lambda.is_finite() {
            return Err(ConfigError::Invalid {
                key: "flow.lambda",
                message: "must be finite".into(),
            });
        }
        if f.vorticity.iter().any(|c| !c.is_finite()) {
            return Err(ConfigError::Invalid {
                key: "flow.vorticity",
                message: "coefficients must be finite".into(),
            });
        }
        at_least("flow.nodes", f.nodes, 16)?;
        at_least("flow.samples", f.samples, 2)?;
        let d = &self.dispersion;
        positive("dispersion.tau_max", d.tau_max)?;
        at_least("dispersion.tau_points", d.tau_points, 2)?;
        at_least("dispersion.lambda_points", d.lambda_points, 2)?;
        positive("dispersion.transversality_step", d.transversality_step)?;
        if let Some([a, b]) = d.lambda_range {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(ConfigError::Invalid {
                    key: "dispersion.lambda_range",
                    message: format!("need finite lo < hi, got [{a}, {b}]"),
                });
            }
        }
        if !self.wave.t.is_finite() {
            return Err(ConfigError::Invalid {
                key: "wave.t",
                message: "must be finite".into(),
            });
        }
        at_least("wave.samples", self.wave.samples, 2)?;
        self.continuation.validate().map_err(|e| ConfigError::Invalid {
            key: "continuation",
            message: e.to_string(),
        })
    }
}
