//! Run configuration: one TOML file, every key optional, unknown keys
//! rejected. Command-line flags are applied on top.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{KernelKind, SearchGrid, TrainConfig};
use crate::outlier_gate::CalibrationGrid;
use crate::pipeline::TrainSettings;
use crate::preprocess::EpochGrid;
use crate::signal_io::Montage;
use crate::synth::SynthSpec;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    /// Training corpus, or recordings to run detection on.
    pub data_dir: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    /// Newly annotated neonates for `retrain`.
    pub new_data_dir: Option<PathBuf>,
    /// Detector masks for `evaluate` and `burden`.
    pub pred_dir: Option<PathBuf>,
    /// Reference annotations for `evaluate` and `burden`.
    pub truth_dir: Option<PathBuf>,
    /// Earlier `report.json` for the generalization test.
    pub baseline: Option<PathBuf>,
}

/// `[train]` table. The seed is the top-level one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub n_folds: usize,
    pub kernel: KernelKind,
    pub balance_ratio: f64,
    pub max_train_rows: usize,
    pub reference_size: usize,
    pub svm_tol: f64,
    pub max_iter: usize,
    pub search: SearchGrid,
    pub calibration: CalibrationGrid,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            n_folds: 10,
            kernel: t.kernel,
            balance_ratio: t.balance_ratio,
            max_train_rows: t.max_train_rows,
            reference_size: t.reference_size,
            svm_tol: t.svm_tol,
            max_iter: t.max_iter,
            search: SearchGrid::default(),
            calibration: CalibrationGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Bipolar derivations, `anode-cathode`.
    pub montage: Vec<String>,
    /// Epoch hop in seconds; epochs are always 16 s.
    pub hop: f64,
    /// Fixes the minimum event duration instead of calibrating it.
    pub min_dur: Option<usize>,
    /// Raters whose consensus is the reference annotation.
    pub raters: Vec<String>,
    /// Rater name of detector masks, i.e. files `<id>.<pred_rater>.csv`.
    pub pred_rater: String,
    pub bootstrap_iters: usize,
    pub paths: Paths,
    pub train: TrainSection,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: TrainConfig::default().seed,
            montage: Montage::monitoring().labels(),
            hop: EpochGrid::default().hop,
            min_dur: None,
            raters: vec!["e1".into(), "e2".into()],
            pred_rater: "mask".into(),
            bootstrap_iters: crate::evaluation::bootstrap::DEFAULT_ITERS,
            paths: Paths::default(),
            train: TrainSection::default(),
            synth: SynthSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e| Error::Config(format!("config: {e}")))?;
        if value.get("synth").and_then(|s| s.get("seed")).is_some() {
            return Err(Error::Config("config: [synth] takes no seed; set the top-level 'seed'".into()));
        }
        let cfg: RunConfig = value.try_into().map_err(|e| Error::Config(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.montage()?;
        self.grid()?;
        if self.bootstrap_iters == 0 {
            return Err(Error::Config("bootstrap_iters must be positive".into()));
        }
        if self.raters.is_empty() {
            return Err(Error::Config("raters must name at least one annotation set".into()));
        }
        if self.raters.iter().any(|r| r.is_empty() || r.contains(['/', '\\', '.'])) || self.pred_rater.is_empty() {
            return Err(Error::Config("rater names must be nonempty and free of '.' and path separators".into()));
        }
        self.train_settings().validate()?;
        self.synth_spec().validate()
    }

    pub fn montage(&self) -> Result<Montage> {
        if self.montage.is_empty() {
            return Err(Error::Config("montage is empty".into()));
        }
        Montage::parse(&self.montage)
    }

    pub fn grid(&self) -> Result<EpochGrid> {
        EpochGrid::new(self.hop)
    }

    pub fn train_settings(&self) -> TrainSettings {
        let t = &self.train;
        let mut calibration = t.calibration.clone();
        if let Some(m) = self.min_dur {
            calibration.min_dur = vec![m];
        }
        TrainSettings {
            n_folds: t.n_folds,
            train: TrainConfig {
                seed: self.seed,
                kernel: t.kernel,
                balance_ratio: t.balance_ratio,
                max_train_rows: t.max_train_rows,
                reference_size: t.reference_size,
                svm_tol: t.svm_tol,
                max_iter: t.max_iter,
            },
            search: t.search.clone(),
            calibration,
            bootstrap_iters: self.bootstrap_iters,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        self.train_settings().train
    }

    pub fn synth_spec(&self) -> SynthSpec {
        SynthSpec {
            seed: self.seed,
            ..self.synth.clone()
        }
    }

    /// The configuration as recorded in manifests: without paths, so that
    /// reruns into another directory hash identically.
    pub fn manifest_view(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("paths");
            if let Some(synth) = o.get_mut("synth").and_then(|v| v.as_object_mut()) {
                synth.remove("seed");
            }
        }
        v
    }

    /// A config file equivalent to `self`.
    pub fn to_toml(&self) -> String {
        let mut t = toml::Table::try_from(self).expect("config serializes");
        if let Some(synth) = t.get_mut("synth").and_then(|v| v.as_table_mut()) {
            synth.remove("seed");
        }
        toml::to_string(&t).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        c.seed = 7;
        c.min_dur = Some(30);
        c.paths.data_dir = Some("corpus".into());
        c.train.search.c = vec![1.0, 10.0];
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::from_toml("[train]\nfolds = 3\n").unwrap_err();
        assert!(e.is_validation());
        assert!(e.to_string().contains("folds"), "{e}");
    }

    #[test]
    fn synth_seed_rejected() {
        assert!(RunConfig::from_toml("[synth]\nseed = 3\n").is_err());
    }

    #[test]
    fn min_dur_fixes_calibration() {
        let c = RunConfig::from_toml("seed = 9\nmin_dur = 30\n").unwrap();
        let s = c.train_settings();
        assert_eq!(s.calibration.min_dur, vec![30]);
        assert_eq!(s.train.seed, 9);
        assert_eq!(c.synth_spec().seed, 9);
    }

    #[test]
    fn bad_montage_rejected() {
        let c = RunConfig::from_toml("montage = [\"F3P3\"]\n").unwrap();
        assert!(c.validate().is_err());
    }
}
