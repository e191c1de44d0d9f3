//! Run configuration. Every field has a default, and the resolved copy that
//! is written next to outputs has all of them filled in.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::SweepGrid;
use crate::kerr::{RcHyperParams, DEFAULT_SUBSTEPS};
use crate::qsim::{Model, QuantumSystemSpec, Timing};
use crate::seed::SeedTag;
use crate::trainer::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub m_per_class: usize,
    pub tag: SeedTag,
    pub conditional: bool,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            m_per_class: 100,
            tag: SeedTag::TrainData,
            conditional: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub hp: RcHyperParams,
    /// Index into the `Network` seed domain.
    pub index: u64,
    /// Overrides every `Λ_j`; `Some(0.0)` gives the linear network.
    pub uniform_lambda: Option<f64>,
    pub substeps: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hp: RcHyperParams::five_node(),
            index: 0,
            uniform_lambda: None,
            substeps: DEFAULT_SUBSTEPS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Boxcar,
    Matched,
    MatchedAnalytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSource {
    Dataset,
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    /// Bins for the boxcar and analytic kernels; the empirical kernel always
    /// uses its own training set.
    pub bins: BinSource,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            kind: BaselineKind::Matched,
            bins: BinSource::Dataset,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub grid: SweepGrid,
    pub n_seeds: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            grid: SweepGrid::MuLambda {
                k_nodes: 5,
                gamma: 0.25,
                alpha: 1.9,
                mus: vec![1.0, 2.5, 5.0, 10.0],
                lambda_bars: vec![1e-3, 1e-2, 5e-2, 2e-1],
            },
            n_seeds: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportConfig {
    pub t_final: f64,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self { t_final: 6.7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub master_seed: u64,
    pub system: QuantumSystemSpec,
    pub timing: Timing,
    pub dataset: DatasetConfig,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub baseline: BaselineConfig,
    pub sweep: SweepConfig,
    pub export: ExportConfig,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            system: QuantumSystemSpec::two_qubit_readout(Model::Dispersive),
            timing: Timing {
                dt_int: 1e-3,
                dt_record: 1e-2,
                tau_m: 10.0,
            },
            dataset: DatasetConfig::default(),
            network: NetworkConfig::default(),
            train: TrainConfig::default(),
            baseline: BaselineConfig::default(),
            sweep: SweepConfig::default(),
            export: ExportConfig::default(),
            output_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.timing.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.network.hp.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.train.validate()?;
        if self.dataset.m_per_class == 0 {
            return Err(Error::Config("dataset.m_per_class must be >= 1".into()));
        }
        if self.network.substeps == 0 {
            return Err(Error::Config("network.substeps must be >= 1".into()));
        }
        if self.sweep.n_seeds == 0 {
            return Err(Error::Config("sweep.n_seeds must be >= 1".into()));
        }
        Ok(())
    }

    /// Resolved document with every default present.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact resolved document.
    pub fn hash(&self) -> String {
        let compact = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&compact).iter().map(|b| format!("{b:02x}")).collect()
    }
}
