//! End-to-end orchestration: recordings in, features, training with
//! cross-validated calibration, detection and evaluation out.

use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{evaluate, MetricsReport, NeonateEval};
use crate::features::{extract_matrix, FeatureMatrix};
use crate::model::{
    fit, retrain_augmented, sample_new_set, CvContext, CvResult, FoldPlan, Hyper, SdaModel, SearchGrid, Subject,
    TrainConfig, TrainingSet,
};
use crate::outlier_gate::{calibrate, Calibration, CalibrationGrid};
use crate::postprocess::{binarize_trace, continuous_trace, epoch_bad, DETECTOR_RATER};
use crate::preprocess::{preprocess, EpochGrid};
use crate::signal_io::{
    apply_montage, consensus, load_annotations, load_bad_electrodes, read_edf, AnnotationMask, Montage, Recording,
};

/// A recording reduced to what the detector consumes.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub id: String,
    pub features: FeatureMatrix,
    /// Bad-electrode flag per feature row.
    pub bad: Vec<bool>,
    /// Whole seconds.
    pub duration: usize,
}

/// Montage, filtering, resampling, epoching and features.
pub fn prepare(rec: &Recording, montage: &Montage, grid: &EpochGrid) -> Result<Prepared> {
    grid.validate()?;
    let bipolar = apply_montage(rec, montage)?;
    let pre = preprocess(&bipolar)?;
    let features = extract_matrix(&pre, grid)?;
    if features.n_epochs == 0 {
        return Err(Error::InvalidInput(format!(
            "recording '{}' is shorter than one {} s epoch",
            rec.id, grid.epoch_len
        )));
    }
    let bad = epoch_bad(pre.bad.as_ref(), features.n_channels(), features.n_epochs, grid);
    Ok(Prepared {
        id: rec.id.clone(),
        features,
        bad,
        duration: rec.duration_seconds(),
    })
}

impl Prepared {
    pub fn into_subject(self, truth: AnnotationMask) -> Result<Subject> {
        if truth.duration() != self.duration {
            return Err(Error::LengthMismatch {
                what: "annotation seconds vs recording seconds",
                left: truth.duration(),
                right: self.duration,
            });
        }
        Ok(Subject {
            id: self.id,
            features: self.features,
            bad: self.bad,
            truth,
            duration: self.duration,
        })
    }
}

/// `<id>.edf` files in a directory, sorted by id.
pub fn list_recordings(dir: impl AsRef<Path>) -> Result<Vec<(String, PathBuf)>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("edf")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path));
            }
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::InvalidInput(format!("no .edf recordings in {}", dir.display())));
    }
    Ok(out)
}

/// Reads a recording and its optional `<id>.bad.csv` sidecar.
pub fn load_recording(path: &Path) -> Result<Recording> {
    let mut rec = read_edf(path)?;
    let bad = path.with_extension("bad.csv");
    if bad.exists() {
        rec.bad = Some(load_bad_electrodes(&bad, &rec)?);
    }
    Ok(rec)
}

/// Loads every recording in `dir` with the consensus of
/// `<id>.<rater>.csv` over `raters` as its reference annotation.
pub fn load_corpus(dir: impl AsRef<Path>, raters: &[String], montage: &Montage, grid: &EpochGrid) -> Result<Vec<Subject>> {
    if raters.is_empty() {
        return Err(Error::Config("at least one rater is needed for reference annotations".into()));
    }
    let dir = dir.as_ref();
    list_recordings(dir)?
        .par_iter()
        .map(|(id, path)| {
            let rec = load_recording(path)?;
            let secs = rec.duration_seconds();
            let masks = raters
                .iter()
                .map(|r| load_annotations(dir.join(format!("{id}.{r}.csv")), secs).map(|m| AnnotationMask { rater: r.clone(), ..m }))
                .collect::<Result<Vec<_>>>()?;
            let truth = if masks.len() == 1 { masks[0].clone() } else { consensus(&masks)? };
            debug!("{id}: {} s, {} s seizure", secs, truth.true_seconds());
            prepare(&rec, montage, grid)?.into_subject(truth)
        })
        .collect()
}

/// Settings for [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSettings {
    pub n_folds: usize,
    pub train: TrainConfig,
    pub search: SearchGrid,
    pub calibration: CalibrationGrid,
    pub bootstrap_iters: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            n_folds: 10,
            train: TrainConfig::default(),
            search: SearchGrid::default(),
            calibration: CalibrationGrid::default(),
            bootstrap_iters: crate::evaluation::bootstrap::DEFAULT_ITERS,
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_folds < 2 {
            return Err(Error::Config("n_folds must be at least 2".into()));
        }
        if self.bootstrap_iters == 0 {
            return Err(Error::Config("bootstrap_iters must be positive".into()));
        }
        self.train.validate()?;
        self.search.candidates()?;
        self.calibration.validate()
    }
}

/// One hyperparameter candidate and its best calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub hyper: Hyper,
    pub calibration: Calibration,
}

pub struct TrainOutcome {
    pub model: SdaModel,
    pub plan: FoldPlan,
    pub search: Vec<SearchPoint>,
    pub calibration: Calibration,
    /// Cross-validated run under the chosen hyperparameters.
    pub cv: CvResult,
    /// Cross-validated performance of the calibrated pipeline.
    pub report: MetricsReport,
}

/// Hyperparameter search and calibration by cross-validation, then a final
/// fit on every neonate.
pub fn train(subjects: &[Subject], grid: &EpochGrid, s: &TrainSettings) -> Result<TrainOutcome> {
    s.validate()?;
    let with_seizures = subjects.iter().filter(|x| x.truth.true_seconds() > 0).count();
    if with_seizures == 0 {
        return Err(Error::SingleClass("no neonate has annotated seizures".into()));
    }
    if with_seizures < 2 || subjects.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "training needs at least 2 neonates with seizures, found {with_seizures} of {}",
            subjects.len()
        )));
    }
    let ids: Vec<String> = subjects.iter().map(|x| x.id.clone()).collect();
    let plan = FoldPlan::new(&ids, s.n_folds.min(ids.len()), s.train.seed)?;
    let ctx = CvContext::build(subjects, &plan, &s.train, grid, s.calibration.k_max())?;

    let mut best: Option<(SearchPoint, CvResult)> = None;
    let mut search = Vec::new();
    for hyper in s.search.candidates()? {
        let cv = ctx.run(subjects, hyper, &s.train)?;
        let calibration = calibrate(&cv, &s.calibration)?;
        info!(
            "C={} gamma={:.5}: cv kappa {:.4}",
            hyper.c, hyper.gamma, calibration.kappa
        );
        let p = SearchPoint { hyper, calibration };
        search.push(p);
        if best.as_ref().map_or(true, |b| calibration.kappa > b.0.calibration.kappa) {
            best = Some((p, cv));
        }
    }
    let (chosen, cv) = best.ok_or_else(|| Error::Config("empty hyperparameter grid".into()))?;
    let report = evaluate(&cv_evals(&cv, &chosen.calibration)?, s.bootstrap_iters, s.train.seed)?;

    let all = TrainingSet::from_subjects(subjects, grid);
    let model = fit(
        &all,
        chosen.hyper,
        chosen.calibration.gate,
        chosen.calibration.postproc,
        &s.train,
        grid,
    )?;
    Ok(TrainOutcome {
        model,
        plan,
        search,
        calibration: chosen.calibration,
        cv,
        report,
    })
}

/// Cross-validated traces and masks under one calibration.
pub fn cv_evals(cv: &CvResult, cal: &Calibration) -> Result<Vec<NeonateEval>> {
    cv.subjects
        .iter()
        .map(|s| {
            let d_max = cv.folds[s.fold].within_ref[cal.gate.k - 1].as_slice();
            let d_max = crate::outlier_gate::threshold_from(d_max, cal.gate.quantile);
            let excluded: Vec<bool> = (0..s.stats.len())
                .map(|r| s.bad[r] || s.max_amp[r] > cal.gate.amp_max || s.knn[r * cv.k_max + cal.gate.k - 1] > d_max)
                .collect();
            let trace = continuous_trace(&s.stats, &excluded, s.n_channels, cal.postproc.ma_len, &cv.grid, s.duration)?;
            let pred = binarize_trace(&trace, &cal.postproc);
            Ok(NeonateEval {
                id: s.id.clone(),
                trace,
                pred,
                truth: s.truth.clone(),
            })
        })
        .collect()
}

/// Detector output for one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub id: String,
    /// SVM margin per feature row.
    pub stats: Vec<f64>,
    pub outliers: Vec<bool>,
    /// Per-second statistic after exclusion, smoothing and channel maximum.
    pub trace: Vec<f64>,
    pub mask: AnnotationMask,
}

pub fn detect(model: &SdaModel, p: &Prepared) -> Result<Detection> {
    model.check_version(&p.features)?;
    let stats = model.decision_statistic(&p.features)?;
    let outliers = model.outliers(&p.features)?;
    let excluded: Vec<bool> = outliers.iter().zip(&p.bad).map(|(o, b)| *o || *b).collect();
    let trace = continuous_trace(
        &stats,
        &excluded,
        p.features.n_channels(),
        model.postproc.ma_len,
        &model.grid,
        p.duration,
    )?;
    let mask = AnnotationMask::new(DETECTOR_RATER, binarize_trace(&trace, &model.postproc));
    Ok(Detection {
        id: p.id.clone(),
        stats,
        outliers,
        trace,
        mask,
    })
}

/// Detection on a recording, using the model's own epoch grid.
pub fn detect_recording(model: &SdaModel, rec: &Recording, montage: &Montage) -> Result<Detection> {
    detect(model, &prepare(rec, montage, &model.grid)?)
}

/// Detector output paired with each subject's reference annotation.
pub fn detect_subjects(model: &SdaModel, subjects: &[Subject]) -> Result<Vec<NeonateEval>> {
    subjects
        .par_iter()
        .map(|s| {
            let p = Prepared {
                id: s.id.clone(),
                features: s.features.clone(),
                bad: s.bad.clone(),
                duration: s.duration,
            };
            let d = detect(model, &p)?;
            Ok(NeonateEval {
                id: s.id.clone(),
                trace: d.trace,
                pred: d.mask.mask,
                truth: s.truth.mask.clone(),
            })
        })
        .collect()
}

/// Retraining with newly annotated neonates: half of the (class-balanced)
/// base training set plus an equally sized set drawn from the new
/// neonates, with the base model's hyperparameters and calibration.
pub fn retrain(base: &[Subject], new: &[Subject], base_model: &SdaModel, cfg: &TrainConfig) -> Result<SdaModel> {
    let grid = base_model.grid;
    let base_set = TrainingSet::from_subjects(base, &grid).balanced(cfg.balance_ratio, base_model.seed);
    let new_refs: Vec<&Subject> = new.iter().collect();
    let new_set = sample_new_set(&new_refs, &grid, base_set.len(), base_model.seed.wrapping_add(2))?;
    info!(
        "retraining on {} base rows and {} new rows ({} seizure)",
        base_set.len(),
        new_set.len(),
        new_set.n_positive()
    );
    retrain_augmented(&base_set, &new_set, base_model, cfg)
}

/// Cross-validation of the retraining procedure: every fold model is
/// retrained with `new` and scored on its own held-out neonates, which
/// are reported in `subjects` order.
pub fn cross_validate_retrained(
    subjects: &[Subject],
    cv: &CvResult,
    cal: &Calibration,
    new: &[Subject],
    cfg: &TrainConfig,
) -> Result<Vec<NeonateEval>> {
    let per_fold: Vec<Vec<NeonateEval>> = cv
        .folds
        .par_iter()
        .map(|f| {
            let base: Vec<Subject> = subjects.iter().filter(|s| !f.test_ids.contains(&s.id)).cloned().collect();
            let test: Vec<Subject> = subjects.iter().filter(|s| f.test_ids.contains(&s.id)).cloned().collect();
            let model = retrain(&base, new, &cv.fold_model(f.fold, cal.gate, cal.postproc)?, cfg)?;
            detect_subjects(&model, &test)
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<NeonateEval> = per_fold.into_iter().flatten().collect();
    let order: std::collections::HashMap<&str, usize> =
        subjects.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    all.sort_by_key(|e| order[e.id.as_str()]);
    Ok(all)
}
