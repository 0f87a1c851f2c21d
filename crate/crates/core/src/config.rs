//! TOML model files.
//!
//! ```toml
//! [domain]
//! sides = [[0.0, 1.0]]
//!
//! [alpha]
//! value = 2.0
//!
//! [psi]
//! form = "atan_scaled"
//! a = 0.5
//!
//! [phi]
//! form = "sin_perturbed"
//! c0 = 1.0
//! amp = 0.1
//! freq = 1.0
//!
//! [galerkin]
//! n = 16
//! quad_points = 32   # optional
//! ```

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::reaction_diffusion::{ReactionDiffusionModel, ScalarFunctionFile, ScalarFunctionSpec};
use crate::spectral::RectDomain;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub domain: DomainSection,
    pub alpha: AlphaSection,
    pub psi: ScalarFunctionFile,
    pub phi: ScalarFunctionFile,
    pub galerkin: GalerkinSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub sides: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSection {
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinSection {
    pub n: usize,
    pub quad_points: Option<usize>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("model file: {}", e.message())))
    }

    pub fn into_model(self) -> Result<ReactionDiffusionModel> {
        ReactionDiffusionModel::new(
            RectDomain::new(self.domain.sides)?,
            self.alpha.value,
            ScalarFunctionSpec::from_file(self.psi)?,
            ScalarFunctionSpec::from_file(self.phi)?,
            self.galerkin.n,
            self.galerkin.quad_points,
        )
    }
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<ReactionDiffusionModel> {
    ModelFile::parse(text)?.into_model()
}

/// Named built-in models: `ou` (heat equation with additive noise, 8 modes)
/// and `rd` (the bounded-coefficient reaction–diffusion model, 16 modes).
pub fn preset(name: &str) -> Result<ReactionDiffusionModel> {
    match name {
        "ou" => Ok(ReactionDiffusionModel::ornstein_uhlenbeck(1.0, 8)),
        "rd" => Ok(ReactionDiffusionModel::reference()),
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (expected ou or rd)"
        ))),
    }
}
