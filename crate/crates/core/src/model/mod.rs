//! The seizure detector: normalization, SVM, outlier gate and
//! post-processing parameters, plus training-set construction.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Features, NormStats, FEATURE_VERSION, N_FEATURES};
use crate::outlier_gate::{gate_rows, GateChoice, OutlierParams};
use crate::postprocess::PostprocParams;
use crate::preprocess::EpochGrid;
use crate::signal_io::AnnotationMask;

pub mod cv;
pub mod svm;

pub use cv::{cross_validate, CvContext, CvResult, CvSubject, FoldOutput, FoldPlan};
pub use svm::{Kernel, Svm, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Rbf,
    Linear,
}

/// Training knobs that are not searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub seed: u64,
    pub kernel: KernelKind,
    /// Non-seizure to seizure epochs kept for the SVM.
    pub balance_ratio: f64,
    /// Stratified cap on SVM training rows.
    pub max_train_rows: usize,
    /// Cap on the outlier reference set.
    pub reference_size: usize,
    pub svm_tol: f64,
    pub max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 20_220_101,
            kernel: KernelKind::Rbf,
            balance_ratio: 3.0,
            max_train_rows: 2000,
            reference_size: 5000,
            svm_tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.balance_ratio > 0.0) {
            return Err(Error::Config("balance_ratio must be positive".into()));
        }
        if self.max_train_rows < 2 || self.max_train_rows > svm::MAX_DENSE_ROWS {
            return Err(Error::Config(format!(
                "max_train_rows must lie in 2..={}",
                svm::MAX_DENSE_ROWS
            )));
        }
        if self.reference_size < 2 {
            return Err(Error::Config("reference_size must be at least 2".into()));
        }
        if !(self.svm_tol > 0.0) {
            return Err(Error::Config("svm_tol must be positive".into()));
        }
        Ok(())
    }

    fn svm_params(&self, h: &Hyper) -> SvmParams {
        SvmParams {
            c: h.c,
            kernel: match self.kernel {
                KernelKind::Rbf => Kernel::Rbf { gamma: h.gamma },
                KernelKind::Linear => Kernel::Linear,
            },
            tol: self.svm_tol,
            max_iter: self.max_iter,
        }
    }
}

/// SVM box constraint and RBF width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub c: f64,
    pub gamma: f64,
}

/// Candidate SVM hyperparameters. `gamma_scale` is multiplied by 1/22.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchGrid {
    pub c: Vec<f64>,
    pub gamma_scale: Vec<f64>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            c: vec![0.1, 1.0, 10.0, 100.0],
            gamma_scale: vec![0.01, 0.1, 1.0],
        }
    }
}

impl SearchGrid {
    pub fn candidates(&self) -> Result<Vec<Hyper>> {
        if self.c.is_empty() || self.gamma_scale.is_empty() {
            return Err(Error::Config("hyperparameter grid is empty".into()));
        }
        if self.c.iter().chain(&self.gamma_scale).any(|v| !(*v > 0.0)) {
            return Err(Error::Config("hyperparameter grid values must be positive".into()));
        }
        let mut out = Vec::new();
        for &c in &self.c {
            for &g in &self.gamma_scale {
                out.push(Hyper {
                    c,
                    gamma: g / N_FEATURES as f64,
                });
            }
        }
        Ok(out)
    }
}

/// One neonate ready for training or evaluation.
#[derive(Debug, Clone)]
pub struct Subject {
    pub id: String,
    /// Raw (unnormalized) features.
    pub features: FeatureMatrix,
    /// Bad-electrode flag per feature row.
    pub bad: Vec<bool>,
    /// Reference annotation used for labels and calibration.
    pub truth: AnnotationMask,
    /// Recording length in whole seconds.
    pub duration: usize,
}

impl Subject {
    /// Per-row labels, following the channel-major row order.
    pub fn row_labels(&self, grid: &EpochGrid) -> Vec<bool> {
        let ep = epoch_labels(&self.truth.mask, grid, self.features.n_epochs);
        (0..self.features.n_channels()).flat_map(|_| ep.iter().copied()).collect()
    }
}

/// An epoch is seizure when at least half of its seconds are.
pub fn epoch_labels(mask: &[bool], grid: &EpochGrid, n_epochs: usize) -> Vec<bool> {
    (0..n_epochs)
        .map(|i| {
            let (s, e) = grid.epoch_span(i);
            let n = mask[s.min(mask.len())..e.min(mask.len())].iter().filter(|&&v| v).count();
            2 * n >= e - s
        })
        .collect()
}

/// Labelled feature rows with their neonate of origin.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub rows: Vec<Features>,
    pub max_amp: Vec<f64>,
    pub labels: Vec<bool>,
    pub origin: Vec<String>,
}

impl TrainingSet {
    /// Every row not flagged as bad electrode.
    pub fn from_subjects<'a>(subjects: impl IntoIterator<Item = &'a Subject>, grid: &EpochGrid) -> Self {
        let mut ts = TrainingSet::default();
        for s in subjects {
            let labels = s.row_labels(grid);
            for r in 0..s.features.n_rows() {
                if !s.bad[r] {
                    ts.push(s.features.rows[r], s.features.max_amp[r], labels[r], &s.id);
                }
            }
        }
        ts
    }

    fn push(&mut self, row: Features, amp: f64, label: bool, origin: &str) {
        self.rows.push(row);
        self.max_amp.push(amp);
        self.labels.push(label);
        self.origin.push(origin.to_string());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        let mut ts = TrainingSet::default();
        for &i in idx {
            ts.push(self.rows[i], self.max_amp[i], self.labels[i], &self.origin[i]);
        }
        ts
    }

    pub fn subjects(&self) -> BTreeSet<String> {
        self.origin.iter().cloned().collect()
    }

    /// Keeps all seizure rows and a seeded sample of non-seizure rows at
    /// most `ratio` times as many. Row order is preserved.
    pub fn balanced(&self, ratio: f64, seed: u64) -> Self {
        self.select(&balanced_indices(&self.labels, ratio, usize::MAX, seed))
    }

    /// Every second row of `base` followed by every second row of `new`.
    pub fn interleave_halves(base: &TrainingSet, new: &TrainingSet) -> Self {
        let mut ts = base.select(&(0..base.len()).step_by(2).collect::<Vec<_>>());
        let half = new.select(&(0..new.len()).step_by(2).collect::<Vec<_>>());
        ts.rows.extend(half.rows);
        ts.max_amp.extend(half.max_amp);
        ts.labels.extend(half.labels);
        ts.origin.extend(half.origin);
        ts
    }
}

fn sorted_sample(pool: &[usize], amount: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if amount >= pool.len() {
        return pool.to_vec();
    }
    let mut v: Vec<usize> = sample(rng, pool.len(), amount).into_iter().map(|i| pool[i]).collect();
    v.sort_unstable();
    v
}

/// Indices for SVM training: non-seizure rows subsampled to `ratio` times
/// the seizure rows, then both classes scaled down together to `cap`.
pub fn balanced_indices(labels: &[bool], ratio: f64, cap: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let mut n_neg = neg.len().min((ratio * pos.len() as f64).ceil() as usize);
    let mut n_pos = pos.len();
    if n_pos + n_neg > cap {
        let frac = n_pos as f64 / (n_pos + n_neg) as f64;
        n_pos = ((cap as f64 * frac).round() as usize).clamp(1.min(pos.len()), cap);
        n_neg = cap - n_pos;
    }
    let mut idx = sorted_sample(&pos, n_pos, &mut rng);
    idx.extend(sorted_sample(&neg, n_neg, &mut rng));
    idx.sort_unstable();
    idx
}

/// Seeded subsample of `0..n` of at most `cap` indices, in order.
pub fn subsample(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sorted_sample(&(0..n).collect::<Vec<_>>(), cap, &mut rng)
}

/// A trained detector and everything needed to run it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdaModel {
    pub feature_version: String,
    pub seed: u64,
    pub grid: EpochGrid,
    pub hyper: Hyper,
    pub svm: Svm,
    /// Training decision values of the support vectors.
    pub support_margins: Vec<f64>,
    pub norm_stats: NormStats,
    pub outlier: OutlierParams,
    pub postproc: PostprocParams,
    /// Neonates whose epochs were used in training.
    pub training_ids: Vec<String>,
    pub training_rows: usize,
}

pub(crate) struct FitParts {
    pub norm: NormStats,
    pub svm: Svm,
    pub support_margins: Vec<f64>,
}

/// Normalization and SVM on a training set.
pub(crate) fn fit_svm(ts: &TrainingSet, hyper: &Hyper, cfg: &TrainConfig) -> Result<FitParts> {
    let n_pos = ts.n_positive();
    if n_pos == 0 || n_pos == ts.len() {
        return Err(Error::SingleClass(format!(
            "training set has {n_pos} seizure epochs out of {}",
            ts.len()
        )));
    }
    let norm = NormStats::fit(&ts.rows)?;
    let idx = balanced_indices(&ts.labels, cfg.balance_ratio, cfg.max_train_rows, cfg.seed);
    let z: Vec<Features> = idx.iter().map(|&i| norm.apply(&ts.rows[i])).collect();
    let labels: Vec<bool> = idx.iter().map(|&i| ts.labels[i]).collect();
    let refs: Vec<&[f64]> = z.iter().map(|r| r.as_slice()).collect();
    let (svm, report) = Svm::train(&refs, &labels, &cfg.svm_params(hyper))?;
    let support_margins = report.support_index.iter().map(|&i| report.margins[i]).collect();
    Ok(FitParts {
        norm,
        svm,
        support_margins,
    })
}

/// Normalized, seeded subsample of the training rows for the outlier gate.
pub(crate) fn reference_rows(ts: &TrainingSet, norm: &NormStats, cfg: &TrainConfig) -> Vec<Features> {
    subsample(ts.len(), cfg.reference_size, cfg.seed.wrapping_add(1))
        .into_iter()
        .map(|i| norm.apply(&ts.rows[i]))
        .collect()
}

/// Trains a detector with fixed hyperparameters and gate/post-processing
/// choices.
pub fn fit(
    ts: &TrainingSet,
    hyper: Hyper,
    gate: GateChoice,
    postproc: PostprocParams,
    cfg: &TrainConfig,
    grid: &EpochGrid,
) -> Result<SdaModel> {
    cfg.validate()?;
    postproc.validate()?;
    let parts = fit_svm(ts, &hyper, cfg)?;
    let reference = reference_rows(ts, &parts.norm, cfg);
    let outlier = OutlierParams::fit(reference, gate.k, gate.quantile, gate.amp_max)?;
    Ok(SdaModel {
        feature_version: FEATURE_VERSION.to_string(),
        seed: cfg.seed,
        grid: *grid,
        hyper,
        svm: parts.svm,
        support_margins: parts.support_margins,
        norm_stats: parts.norm,
        outlier,
        postproc,
        training_ids: ts.subjects().into_iter().collect(),
        training_rows: ts.len(),
    })
}

impl SdaModel {
    pub fn check_version(&self, fm: &FeatureMatrix) -> Result<()> {
        if fm.version != self.feature_version {
            return Err(Error::VersionMismatch {
                model: self.feature_version.clone(),
                data: fm.version.clone(),
            });
        }
        Ok(())
    }

    pub fn normalized_rows(&self, fm: &FeatureMatrix) -> Result<Vec<Features>> {
        self.check_version(fm)?;
        Ok(fm.rows.iter().map(|r| self.norm_stats.apply(r)).collect())
    }

    /// Raw SVM margin for every feature row, in row order.
    pub fn decision_statistic(&self, fm: &FeatureMatrix) -> Result<Vec<f64>> {
        let z = self.normalized_rows(fm)?;
        Ok(z.par_iter().map(|r| self.svm.decision(r)).collect())
    }

    /// Outlier-gate decision for every feature row.
    pub fn outliers(&self, fm: &FeatureMatrix) -> Result<Vec<bool>> {
        let z = self.normalized_rows(fm)?;
        gate_rows(&z, &fm.max_amp, &self.outlier)
    }

    pub fn gate_choice(&self) -> GateChoice {
        GateChoice {
            k: self.outlier.k,
            quantile: self.outlier.quantile,
            amp_max: self.outlier.amp_max,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Format(format!("model serialization: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: SdaModel =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: not a model file: {e}", path.display())))?;
        m.norm_stats.check()?;
        m.outlier.validate()?;
        m.grid.validate()?;
        Ok(m)
    }
}

/// Epochs for augmenting a training set from newly annotated neonates:
/// seizure epochs from the reference annotation and non-seizure epochs
/// from the second half of each recording only, `target` rows in total.
pub fn sample_new_set(subjects: &[&Subject], grid: &EpochGrid, target: usize, seed: u64) -> Result<TrainingSet> {
    let mut all = TrainingSet::default();
    let mut pos = Vec::new();
    let mut late_neg = Vec::new();
    for s in subjects {
        let labels = s.row_labels(grid);
        let half = s.duration as f64 / 2.0;
        for r in 0..s.features.n_rows() {
            if s.bad[r] {
                continue;
            }
            let (start, _) = grid.epoch_span(r % s.features.n_epochs);
            let i = all.len();
            if labels[r] {
                pos.push(i);
            } else if start as f64 >= half {
                late_neg.push(i);
            } else {
                continue;
            }
            all.push(s.features.rows[r], s.features.max_amp[r], labels[r], &s.id);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_pos = pos.len().min(target);
    let mut idx = sorted_sample(&pos, n_pos, &mut rng);
    idx.extend(sorted_sample(&late_neg, target - n_pos, &mut rng));
    idx.sort_unstable();
    let ts = all.select(&idx);
    if ts.is_empty() {
        return Err(Error::InvalidInput("no epochs available for the new training set".into()));
    }
    Ok(ts)
}

/// Retrains on half of the base set and half of the new set, reusing the
/// base model's hyperparameters and gate/post-processing choices.
pub fn retrain_augmented(base: &TrainingSet, new: &TrainingSet, base_model: &SdaModel, cfg: &TrainConfig) -> Result<SdaModel> {
    if new.is_empty() {
        return Err(Error::InvalidInput("new training set is empty".into()));
    }
    let combined = TrainingSet::interleave_halves(base, new);
    let cfg = TrainConfig {
        seed: base_model.seed,
        ..cfg.clone()
    };
    fit(
        &combined,
        base_model.hyper,
        base_model.gate_choice(),
        base_model.postproc,
        &cfg,
        &base_model.grid,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(n: usize, pos_every: usize) -> TrainingSet {
        let mut t = TrainingSet::default();
        for i in 0..n {
            let mut r = [0.0; N_FEATURES];
            r[0] = i as f64;
            t.push(r, 10.0, i % pos_every == 0, if i < n / 2 { "a" } else { "b" });
        }
        t
    }

    #[test]
    fn epoch_label_rule() {
        let g = EpochGrid::default();
        let mut m = vec![false; 40];
        m[8..16].iter_mut().for_each(|v| *v = true);
        // epoch 0 covers 0..16 with 8 seizure seconds: exactly half
        assert_eq!(epoch_labels(&m, &g, 7)[0], true);
        m[8] = false;
        assert_eq!(epoch_labels(&m, &g, 7)[0], false);
    }

    #[test]
    fn balancing_keeps_ratio_and_order() {
        let t = ts(400, 10);
        let b = t.balanced(3.0, 1);
        assert_eq!(b.n_positive(), 40);
        assert_eq!(b.len(), 160);
        assert!(b.rows.windows(2).all(|w| w[0][0] < w[1][0]));
        assert_eq!(b, t.balanced(3.0, 1));
        let capped = balanced_indices(&t.labels, 3.0, 80, 1);
        assert_eq!(capped.len(), 80);
        assert_eq!(capped.iter().filter(|&&i| t.labels[i]).count(), 20);
    }

    #[test]
    fn interleave_takes_every_second_row() {
        let a = ts(10, 3);
        let b = ts(10, 2);
        let c = TrainingSet::interleave_halves(&a, &b);
        assert_eq!(c.len(), 10);
        assert_eq!(c.rows[0][0], 0.0);
        assert_eq!(c.rows[1][0], 2.0);
        assert_eq!(c.rows[5][0], 0.0);
        assert_eq!(&c.labels[5..], &[true, true, true, true, true]);
        let same = TrainingSet::interleave_halves(&a, &a);
        assert_eq!(same.len(), a.len());
    }

    #[test]
    fn search_grid_candidates() {
        let h = SearchGrid::default().candidates().unwrap();
        assert_eq!(h.len(), 12);
        assert!((h[2].gamma - 1.0 / 22.0).abs() < 1e-15);
        assert!(SearchGrid { c: vec![], gamma_scale: vec![1.0] }.candidates().is_err());
    }
}
