use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::generators::GeneratorSpec;
use crate::spectral::{ExtrapolationFit, TheoryModel};
use crate::torus::TorusBox;
use crate::transports::{CellPlacement, Displacement, HyperuniformererVariant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxConfig {
    pub dim: usize,
    pub side: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    #[default]
    Stable,
    Voronoi,
}

/// One step of the transport chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransportStep {
    Hyperuniformerer {
        resolution: usize,
        #[serde(default)]
        variant: HyperuniformererVariant,
        /// Independent resamples drawn per input sample over one allocation.
        #[serde(default = "one")]
        resamples: usize,
    },
    WeightedCells {
        resolution: usize,
        #[serde(default)]
        partition: Partition,
        #[serde(default)]
        placement: CellPlacement,
    },
    Displace {
        law: Displacement,
    },
    RandomOrganization {
        radius: f64,
        kick: f64,
        #[serde(default = "one")]
        steps: usize,
    },
    Lloyd {
        resolution: usize,
        #[serde(default = "one")]
        steps: usize,
    },
    NnTransport {
        k: usize,
    },
    NnVolume {
        k: usize,
        resolution: usize,
    },
    /// Terminal step producing pixel images instead of point samples.
    Dispersion {
        alpha: f64,
        resolution: usize,
    },
}

fn one() -> usize {
    1
}

impl TransportStep {
    pub fn validate(&self, torus: &TorusBox) -> Result<()> {
        let positive = |name: &'static str, v: usize| {
            if v == 0 {
                Err(invalid(name, "must be positive"))
            } else {
                Ok(())
            }
        };
        match self {
            Self::Hyperuniformerer {
                resolution,
                variant,
                resamples,
            } => {
                positive("resolution", *resolution)?;
                positive("resamples", *resamples)?;
                variant.validate()
            }
            Self::WeightedCells { resolution, .. } => positive("resolution", *resolution),
            Self::Displace { law } => match law {
                Displacement::Iid { kernel } => kernel.validate(),
                Displacement::Field { model } => model.validate(),
            },
            Self::RandomOrganization { radius, kick, steps } => {
                if !(*radius > 0.0) || !(*kick >= 0.0) {
                    return Err(invalid("random_organization", "need radius > 0 and kick >= 0"));
                }
                positive("steps", *steps)
            }
            Self::Lloyd { resolution, steps } => {
                positive("resolution", *resolution)?;
                positive("steps", *steps)
            }
            Self::NnTransport { k } => positive("k", *k),
            Self::NnVolume { k, resolution } => {
                positive("k", *k)?;
                positive("resolution", *resolution)
            }
            Self::Dispersion { alpha, resolution } => {
                if torus.dim() != 2 {
                    return Err(Error::Unsupported("dispersion needs d = 2".into()));
                }
                if !(0.0..=1.0).contains(alpha) {
                    return Err(invalid("alpha", "must lie in [0, 1]"));
                }
                positive("resolution", *resolution)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub max_index: usize,
    /// Upper wavenumber of the extrapolation window; defaults to five shells.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_k_max: Option<f64>,
    #[serde(default)]
    pub fit: ExtrapolationFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceConfig {
    pub radii: Vec<f64>,
    pub n_windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct AnalysisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<VarianceConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theory_overlays: Vec<TheoryModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub n_samples: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Write every sample as CSV; aggregated outputs are always written.
    #[serde(default = "yes")]
    pub write_samples: bool,
    #[serde(rename = "box")]
    pub torus: BoxConfig,
    pub generator: GeneratorSpec,
    pub replication: Replication,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transports: Vec<TransportStep>,
}

fn yes() -> bool {
    true
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::TomlDe(err) => Error::Format {
                path: Some(path.to_path_buf()),
                reason: err.to_string(),
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn torus(&self) -> Result<TorusBox> {
        TorusBox::new(self.torus.dim, self.torus.side)
    }

    pub fn validate(&self) -> Result<()> {
        let torus = self.torus()?;
        self.generator.validate(&torus)?;
        if self.replication.n_samples == 0 {
            return Err(invalid("n_samples", "must be positive"));
        }
        for (i, step) in self.transports.iter().enumerate() {
            step.validate(&torus)?;
            if matches!(step, TransportStep::Dispersion { .. }) && i + 1 != self.transports.len() {
                return Err(invalid("transports", "dispersion must be the last step"));
            }
        }
        if let Some(sp) = &self.analysis.spectrum {
            if sp.max_index == 0 {
                return Err(invalid("max_index", "must be at least 1"));
            }
        }
        if let Some(v) = &self.analysis.variance {
            if v.n_windows < 2 || v.radii.is_empty() {
                return Err(invalid("variance", "need radii and at least two windows"));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form, ignoring `output_dir`.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let canonical = c.to_toml_string()?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }
}
