//! Experiment configuration: one TOML file with `[model]`, `[ansatz]`,
//! `[sampler]`, `[optimizer]`, `[output]` and `[measure]` sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ansatz::AnsatzShape;
use crate::error::{Error, Result};
use crate::hamiltonian::BoseHubbard;
use crate::lattice::{Lattice, LatticeKind};
use crate::optimizer::SrConfig;
use crate::sampler::SamplerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Optimize,
    Measure,
    Ed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_lattice")]
    pub lattice: LatticeKind,
    /// Linear size `L`.
    pub size: usize,
    /// Particle number; derived from `filling` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_particles: Option<u32>,
    /// Mean density `n̄`, 1 when neither it nor `n_particles` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filling: Option<f64>,
    #[serde(default = "one")]
    pub hopping: f64,
    pub interaction: f64,
}

fn default_lattice() -> LatticeKind {
    LatticeKind::Square
}

fn one() -> f64 {
    1.0
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeKind::Square,
            size: 8,
            n_particles: None,
            filling: Some(1.0),
            hopping: 1.0,
            interaction: 16.8,
        }
    }
}

impl ModelConfig {
    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.lattice, self.size)
    }

    pub fn n_sites(&self) -> usize {
        match self.lattice {
            LatticeKind::Square => self.size * self.size,
            LatticeKind::Chain | LatticeKind::OpenChain => self.size,
        }
    }

    pub fn particles(&self) -> Result<u32> {
        let sites = self.n_sites();
        let from_filling = |f: f64| -> Result<u32> {
            let n = f * sites as f64;
            if !(f > 0.0) || (n - n.round()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "filling {f} on {sites} sites does not give an integer particle number"
                )));
            }
            Ok(n.round() as u32)
        };
        match (self.n_particles, self.filling) {
            (Some(n), None) => Ok(n),
            (None, Some(f)) => from_filling(f),
            (None, None) => from_filling(1.0),
            (Some(n), Some(f)) => {
                if from_filling(f)? != n {
                    return Err(Error::Config(format!(
                        "n_particles = {n} disagrees with filling {f} on {sites} sites"
                    )));
                }
                Ok(n)
            }
        }
    }

    pub fn hamiltonian(&self) -> Result<BoseHubbard> {
        BoseHubbard::new(self.lattice()?, self.hopping, self.interaction)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Steps between checkpoints; the last step is always saved.
    pub checkpoint_interval: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("run"),
            checkpoint_interval: 100,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    /// Rényi-2 entropy of the half system from two replicas.
    #[serde(default)]
    pub renyi: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub model: ModelConfig,
    #[serde(default = "default_shape")]
    pub ansatz: AnsatzShape,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub optimizer: SrConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
}

fn default_shape() -> AnsatzShape {
    AnsatzShape::backflow(2, 12, 1)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: None,
            model: ModelConfig::default(),
            ansatz: default_shape(),
            sampler: SamplerConfig::default(),
            optimizer: SrConfig::default(),
            output: OutputConfig::default(),
            measure: MeasureConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Every cross-module constraint, checked before any output is written.
    pub fn validate(&self) -> Result<()> {
        let lattice = self.model.lattice().map_err(|e| Error::Config(e.to_string()))?;
        let n = self.model.particles()?;
        if n == 0 {
            return Err(Error::Config("at least one particle is required".into()));
        }
        BoseHubbard::new(lattice, self.model.hopping, self.model.interaction)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.ansatz.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.sampler.validate()?;
        self.optimizer.validate()?;
        if self.output.checkpoint_interval == 0 {
            return Err(Error::Config("checkpoint_interval must be positive".into()));
        }
        Ok(())
    }

    pub fn check_mode(&self, mode: Mode) -> Result<()> {
        match self.mode {
            Some(m) if m != mode => Err(Error::Config(format!(
                "configuration is for mode {m:?}, not {mode:?}"
            ))),
            _ => Ok(()),
        }
    }
}

/// A parsed configuration with the exact text it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub text: String,
    pub sha256: String,
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config = ExperimentConfig::from_toml(&text)?;
    Ok(LoadedConfig {
        sha256: sha256_hex(text.as_bytes()),
        config,
        text,
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Annotated default configuration.
pub fn defaults_toml() -> String {
    let cfg = ExperimentConfig::default();
    format!(
        "# Defaults: 8x8 at unit filling, U/J = 16.8, depth-2 backflow with 12 channels\n\
         # and 3x3 filters, 8192 samples, learning rate 1e-3, diagonal shift 5e-4 for\n\
         # the Jastrow stage and 1e-3 once the backflow trains.\n{}",
        cfg.to_toml()
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let text = defaults_toml();
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.model.particles().unwrap(), 64);
    }

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::from_toml(
            "[model]\nlattice = \"chain\"\nsize = 4\ninteraction = 4.0\n",
        )
        .unwrap();
        assert_eq!(cfg.model.particles().unwrap(), 4);
        assert_eq!(cfg.model.hopping, 1.0);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "[model]\nsize = 4\ninteraction = 4.0\nfilling = 0.3\n",
            "[model]\nsize = 4\ninteraction = 4.0\n[ansatz]\ndepth = 3\nchannels = 4\nkernel_radius = 1\n",
            "[model]\nsize = 1\ninteraction = 4.0\n",
            "[model]\nsize = 4\ninteraction = -1.0\n",
            "[model]\nsize = 4\ninteraction = 4.0\nbogus = 1\n",
            "[model]\nsize = 4\ninteraction = 4.0\nn_particles = 5\nfilling = 1.0\n",
            "[model]\nsize = 4\n",
            "not toml at all [",
        ] {
            assert!(
                matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn mode_mismatch() {
        let cfg = ExperimentConfig::from_toml("mode = \"ed\"\n[model]\nsize = 2\ninteraction = 1.0\n").unwrap();
        assert!(cfg.check_mode(Mode::Ed).is_ok());
        assert!(cfg.check_mode(Mode::Optimize).is_err());
    }
}
