//! Run configuration: one TOML document covering data, encoder, loss,
//! optimizer and evaluation settings. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, InteractionDataset};
use crate::encoder::GraphEncoder;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_CUTOFF;
use crate::homo::SparsificationConfig;
use crate::losses::LossConfig;
use crate::mgdn::{DiffusionConfig, Preset};
use crate::synthetic::{generate, CorpusSpec};
use crate::train::{Mode, TrainConfig};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    /// Whitespace-separated `user item` lines. Relative paths resolve
    /// against the config file's directory.
    pub train_path: Option<PathBuf>,
    pub test_path: Option<PathBuf>,
    /// Built-in generated corpus, `"desk"` or `"tiny"`, used when no paths
    /// are given.
    pub synthetic: Option<String>,
    pub synthetic_seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionSection {
    /// `appnp`, `lightgcn` or `custom`.
    pub preset: String,
    pub alpha: f64,
    /// Only read by the `custom` preset.
    pub beta: f64,
    pub k_layers: usize,
}

impl Default for DiffusionSection {
    fn default() -> Self {
        Self {
            preset: "appnp".into(),
            alpha: 0.1,
            beta: 0.9,
            k_layers: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomoSection {
    /// Must be true exactly when `train.mode = "homo"`.
    pub enabled: bool,
    pub s_percent: f64,
    /// Diffusion depth on the item-item graph.
    pub k_layers: usize,
    /// Per-row cap on the item-item product fan-out; absent means no cap.
    pub max_row_fanout: Option<usize>,
    pub histogram_bins: usize,
}

impl Default for HomoSection {
    fn default() -> Self {
        Self {
            enabled: false,
            s_percent: 97.0,
            k_layers: 2,
            max_row_fanout: None,
            histogram_bins: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub cutoff: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { cutoff: DEFAULT_CUTOFF }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    pub diffusion: DiffusionSection,
    pub homo: HomoSection,
    pub loss: LossConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
    /// Directory used to resolve relative dataset paths; not serialized.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.loss.validate()?;
        self.diffusion_config()?;
        if self.homo.enabled {
            self.homo_diffusion_config()?;
        }
        SparsificationConfig::new(self.homo.s_percent)?;
        if self.eval.cutoff == 0 {
            return Err(Error::Config("eval.cutoff must be positive".into()));
        }
        if self.homo.histogram_bins == 0 {
            return Err(Error::Config("homo.histogram_bins must be positive".into()));
        }
        if self.homo.enabled != (self.train.mode == Mode::Homo) {
            return Err(Error::Config(format!(
                "homo.enabled = {} conflicts with train.mode = {:?}",
                self.homo.enabled,
                self.train.mode.as_str()
            )));
        }
        let d = &self.dataset;
        match (&d.train_path, &d.test_path, &d.synthetic) {
            (Some(_), Some(_), None) => {}
            (None, None, Some(name)) if name == "desk" || name == "tiny" => {}
            (None, None, Some(name)) => {
                return Err(Error::Config(format!(
                    "dataset.synthetic must be \"desk\" or \"tiny\", got {name:?}"
                )))
            }
            _ => {
                return Err(Error::Config(
                    "set either dataset.train_path and dataset.test_path, or dataset.synthetic".into(),
                ))
            }
        }
        Ok(())
    }

    pub fn diffusion_config(&self) -> Result<DiffusionConfig> {
        self.preset(self.diffusion.k_layers)?.config()
    }

    /// Same preset as the hetero encoder at the homo depth.
    pub fn homo_diffusion_config(&self) -> Result<DiffusionConfig> {
        self.preset(self.homo.k_layers)?.config()
    }

    fn preset(&self, k_layers: usize) -> Result<Preset> {
        let d = &self.diffusion;
        Preset::from_name(&d.preset, d.alpha, d.beta, k_layers)
    }

    pub fn sparsification(&self) -> Result<SparsificationConfig> {
        SparsificationConfig::new(self.homo.s_percent)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn load_dataset(&self) -> Result<InteractionDataset> {
        let d = &self.dataset;
        match (&d.train_path, &d.test_path, d.synthetic.as_deref()) {
            (Some(train), Some(test), _) => load_dataset(self.resolve(train), self.resolve(test)),
            (_, _, Some(name)) => {
                let mut spec = if name == "tiny" { CorpusSpec::tiny(2022) } else { CorpusSpec::default() };
                if let Some(seed) = d.synthetic_seed {
                    spec.seed = seed;
                }
                generate(&spec)
            }
            _ => Err(Error::Config("no dataset configured".into())),
        }
    }

    pub fn encoder(&self, ds: &InteractionDataset) -> Result<GraphEncoder> {
        match self.train.mode {
            Mode::Mf => Ok(GraphEncoder::Identity),
            Mode::Hetero => GraphEncoder::hetero(ds, self.diffusion_config()?),
            Mode::Homo => GraphEncoder::homo(
                ds,
                self.sparsification()?,
                self.homo.max_row_fanout,
                self.homo_diffusion_config()?,
            ),
        }
    }
}

/// The default configuration as TOML, with a synthetic dataset filled in so
/// the output is directly runnable.
pub fn default_config_toml() -> String {
    let mut cfg = RunConfig::default();
    cfg.dataset.synthetic = Some("desk".into());
    cfg.to_toml_string()
}
