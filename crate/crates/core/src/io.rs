//! JSON model files.
//!
//! ```json
//! {
//!   "energies": [0.0, 1.0],
//!   "baths": [
//!     {"label": "C", "beta": 1.0, "omega_c": 10.0, "couplings": [{"i": 1, "j": 2, "gamma": 0.01}]},
//!     {"label": "H", "beta": 0.5, "omega_c": 10.0, "couplings": [{"i": 1, "j": 2, "gamma": 0.01}]}
//!   ],
//!   "cold": "C"
//! }
//! ```
//!
//! Level indices are 1-based. `gap_eps` may override the degeneracy guard.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BathSpec, QarModel, SpectralDensity, SystemSpec, DEFAULT_GAP_EPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub energies: Vec<f64>,
    pub baths: Vec<BathEntry>,
    pub cold: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathEntry {
    pub label: String,
    pub beta: f64,
    pub omega_c: f64,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub i: usize,
    pub j: usize,
    pub gamma: f64,
}

impl ModelFile {
    pub fn into_model(self) -> Result<QarModel> {
        let n = self.energies.len();
        let system = SystemSpec::with_gap(self.energies, self.gap_eps.unwrap_or(DEFAULT_GAP_EPS))?;
        let mut baths = Vec::with_capacity(self.baths.len());
        for b in self.baths {
            let sd = SpectralDensity::ohmic(b.omega_c).map_err(|_| {
                Error::Validation(format!(
                    "bath {}: spectral cutoff must be positive, got {}",
                    b.label, b.omega_c
                ))
            })?;
            let mut bath = BathSpec::new(b.label.clone(), b.beta, sd);
            for c in b.couplings {
                if c.i == 0 || c.j == 0 || c.i > n || c.j > n || c.i == c.j {
                    return Err(Error::Validation(format!(
                        "bath {}: invalid level pair ({}, {}) for {n} levels (indices are 1-based)",
                        b.label, c.i, c.j
                    )));
                }
                let (i, j) = (c.i.min(c.j) - 1, c.i.max(c.j) - 1);
                if bath.coupling(i, j) != 0.0 {
                    return Err(Error::Validation(format!(
                        "bath {}: pair ({}, {}) listed twice",
                        b.label,
                        i + 1,
                        j + 1
                    )));
                }
                bath = bath.with_coupling(i, j, c.gamma);
            }
            baths.push(bath);
        }
        let cold = baths
            .iter()
            .position(|b| b.label == self.cold)
            .ok_or_else(|| Error::Validation(format!("cold bath '{}' is not defined", self.cold)))?;
        QarModel::new(system, baths, cold)
    }

    pub fn from_model(model: &QarModel) -> Self {
        ModelFile {
            energies: model.system().energies().to_vec(),
            baths: model
                .baths()
                .iter()
                .map(|b| BathEntry {
                    label: b.label.clone(),
                    beta: b.beta,
                    omega_c: b.spectral.cutoff(),
                    couplings: b
                        .active_pairs()
                        .map(|(i, j, gamma)| CouplingEntry {
                            i: i + 1,
                            j: j + 1,
                            gamma,
                        })
                        .collect(),
                })
                .collect(),
            cold: model.bath(model.cold_index()).label.clone(),
            gap_eps: None,
        }
    }
}

pub fn parse_model(text: &str) -> Result<QarModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::ModelFile(format!("invalid model JSON: {e}")))?;
    file.into_model()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<QarModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ModelFile(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text)
}

pub fn model_to_json(model: &QarModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model file serializes")
}
