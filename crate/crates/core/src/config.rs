//! JSON model descriptions and unit handling.
//!
//! ```json
//! { "model": "fw", "kappa": 1e-4, "gamma": 1e-2, "omega_d": 1.01, "beta": 1e-10,
//!   "background": 0.0, "units": "normalized" }
//! ```
//!
//! In absolute units every rate and frequency is in rad/s and is divided by
//! `omega_a` on load; times (`round_trip`) are in seconds and `length` in metres,
//! giving `T = 2L/c`. Everything downstream works in units of `omega_a`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{FanoMirror, KernelError, KernelModel, Parity, SystemError, SystemParams};

/// Vacuum light speed in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model `{model}` needs `{field}`")]
    Missing { model: &'static str, field: &'static str },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Absolute,
    #[default]
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fw,
    Markov,
    Fano,
}

/// Parity given either as `"even"`/`"odd"` or as `+1`/`-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Name(ParityName),
    Sign(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityName {
    Even,
    Odd,
}

impl SigmaSpec {
    fn parity(self) -> Result<Parity, ConfigError> {
        match self {
            SigmaSpec::Name(ParityName::Even) => Ok(Parity::Even),
            SigmaSpec::Name(ParityName::Odd) => Ok(Parity::Odd),
            SigmaSpec::Sign(s) => {
                Parity::from_sign(s).ok_or_else(|| ConfigError::Invalid(format!("sigma must be +1 or -1, got {s}")))
            }
        }
    }
}

/// Model description as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    /// Bare resonance. Required in absolute units, must be 1 (or absent) when normalized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_a: Option<f64>,
    #[serde(default)]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_trip: Option<f64>,
    /// Cavity length in metres (absolute units only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2: Option<f64>,
    #[serde(default)]
    pub background: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<Units>,
}

/// A loaded model together with the factor that converts user frequencies to
/// normalized ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedModel {
    pub spec: ModelSpec,
    pub units: Units,
    /// `omega_a` in the input units (1 when normalized).
    pub omega_scale: f64,
    pub system: SystemParams,
}

impl ResolvedModel {
    /// Converts a user-supplied frequency or rate to units of `omega_a`.
    pub fn freq(&self, v: f64) -> f64 {
        v / self.omega_scale
    }

    /// Converts a user-supplied time to units of `1/omega_a`.
    pub fn time(&self, v: f64) -> f64 {
        v * self.omega_scale
    }
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Builds the normalized system. `units_flag` is the command-line override; it must
    /// agree with the document when both are given.
    pub fn resolve(&self, units_flag: Option<Units>) -> Result<ResolvedModel, ConfigError> {
        let units = match (self.units, units_flag) {
            (Some(a), Some(b)) if a != b => {
                return Err(ConfigError::Invalid(format!(
                    "model file says units {a:?} but --units says {b:?}"
                )))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => Units::Normalized,
        };
        let scale = match units {
            Units::Normalized => {
                if let Some(w) = self.omega_a.filter(|w| *w != 1.0) {
                    return Err(ConfigError::Invalid(format!(
                        "normalized units fix omega_a = 1, got {w}"
                    )));
                }
                if self.length.is_some() {
                    return Err(ConfigError::Invalid(
                        "`length` needs absolute units (use `round_trip` in 1/omega_a instead)".into(),
                    ));
                }
                1.0
            }
            Units::Absolute => match self.omega_a {
                Some(w) if w.is_finite() && w > 0.0 => w,
                Some(w) => return Err(ConfigError::Invalid(format!("omega_a must be positive, got {w}"))),
                None => {
                    return Err(ConfigError::Missing {
                        model: "absolute units",
                        field: "omega_a",
                    })
                }
            },
        };
        let name = match self.model {
            ModelKind::Fw => "fw",
            ModelKind::Markov => "markov",
            ModelKind::Fano => "fano",
        };
        let need = |v: Option<f64>, field: &'static str| v.ok_or(ConfigError::Missing { model: name, field });
        let rate = |v: Option<f64>, field: &'static str| need(v, field).map(|x| x / scale);
        let kernel = match self.model {
            ModelKind::Markov => KernelModel::markovian(rate(self.gamma, "gamma")?)?,
            ModelKind::Fw => KernelModel::friedrich_wintgen(
                rate(self.kappa, "kappa")?,
                rate(self.gamma, "gamma")?,
                rate(self.omega_d, "omega_d")?,
            )?,
            ModelKind::Fano => {
                let r_d = need(self.r_d, "r_d")?;
                let t_d = self.t_d.unwrap_or_else(|| (1.0 - r_d * r_d).max(0.0).sqrt());
                let sigma = self
                    .sigma
                    .ok_or(ConfigError::Missing {
                        model: name,
                        field: "sigma",
                    })?
                    .parity()?;
                let round_trip = match (self.round_trip, self.length) {
                    (Some(_), Some(_)) => {
                        return Err(ConfigError::Invalid(
                            "give either `round_trip` or `length`, not both".into(),
                        ))
                    }
                    (Some(t), None) => t * scale,
                    (None, Some(l)) => 2.0 * l / SPEED_OF_LIGHT * scale,
                    (None, None) => {
                        return Err(ConfigError::Missing {
                            model: name,
                            field: "round_trip",
                        })
                    }
                };
                let mirror = FanoMirror::with_phases(
                    rate(self.kappa, "kappa")?,
                    r_d,
                    t_d,
                    sigma,
                    round_trip,
                    self.theta1,
                    self.theta2,
                )?;
                KernelModel::fano(mirror)
            }
        };
        let kernel = if self.background != 0.0 {
            kernel.with_background(self.background / scale)?
        } else {
            kernel
        };
        let system = SystemParams::new(1.0, self.beta / scale, kernel)?;
        Ok(ResolvedModel {
            spec: self.clone(),
            units,
            omega_scale: scale,
            system,
        })
    }
}
