//! Landscape spec files (YAML or JSON) and their reproducibility hash.

use std::path::Path;

use anyhow::{bail, Context};
use critgeom_core::landscape::LandscapeSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

/// Either grouped `rho`/`obs` blocks or full `rho_eigenvalues`/`obs_eigenvalues`
/// lists; `dim` is optional and checked when present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs: Option<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_eigenvalues: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_eigenvalues: Option<Vec<f64>>,
}

impl SpecFile {
    pub fn to_spec(&self) -> anyhow::Result<LandscapeSpec> {
        let spec = match (
            &self.rho,
            &self.obs,
            &self.rho_eigenvalues,
            &self.obs_eigenvalues,
        ) {
            (Some(r), Some(o), None, None) => LandscapeSpec::new(
                r.values.clone(),
                r.multiplicities.clone(),
                o.values.clone(),
                o.multiplicities.clone(),
            )?,
            (None, None, Some(r), Some(o)) => LandscapeSpec::from_eigenvalues(r, o)?,
            _ => {
                bail!("spec needs either rho and obs blocks or rho_eigenvalues and obs_eigenvalues")
            }
        };
        if let Some(d) = self.dim {
            if d != spec.dim() {
                bail!(
                    "invalid spec: dim is {d} but the multiplicities sum to {}",
                    spec.dim()
                );
            }
        }
        Ok(spec)
    }
}

pub fn parse_spec(text: &str) -> anyhow::Result<LandscapeSpec> {
    // JSON documents are valid YAML
    let file: SpecFile = serde_yaml::from_str(text).context("malformed spec")?;
    file.to_spec()
}

pub fn read_spec(path: &Path) -> anyhow::Result<LandscapeSpec> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_spec(&text).with_context(|| format!("in {}", path.display()))
}

/// First 16 hex digits of SHA-256 over the grouped spec, with values taken
/// bit for bit.
pub fn spec_hash(spec: &LandscapeSpec) -> String {
    let mut h = Sha256::new();
    for (vals, mults) in [
        (spec.rho_values(), spec.rho_mults()),
        (spec.obs_values(), spec.obs_mults()),
    ] {
        h.update((vals.len() as u64).to_le_bytes());
        for (v, m) in vals.iter().zip(mults) {
            h.update(v.to_bits().to_le_bytes());
            h.update((*m as u64).to_le_bytes());
        }
    }
    hex::encode(&h.finalize()[..8])
}
