//! Neonate-wise k-fold cross-validation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_svm, reference_rows, Hyper, SdaModel, Subject, Svm, TrainConfig, TrainingSet};
use crate::error::{Error, Result};
use crate::features::{Features, NormStats, FEATURE_VERSION};
use crate::outlier_gate::{knn_smallest, threshold_from, within_reference, GateChoice, OutlierParams};
use crate::postprocess::PostprocParams;
use crate::preprocess::EpochGrid;

/// Assignment of neonates to folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    /// Sorts the ids, shuffles them with `seed` and deals them round-robin,
    /// so the plan does not depend on input order.
    pub fn new(ids: &[String], n_folds: usize, seed: u64) -> Result<Self> {
        let mut sorted: Vec<String> = ids.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != ids.len() {
            return Err(Error::InvalidInput("duplicate neonate ids".into()));
        }
        if n_folds < 2 || n_folds > sorted.len() {
            return Err(Error::Config(format!(
                "{n_folds} folds cannot be formed from {} neonates",
                sorted.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sorted.shuffle(&mut rng);
        let assignments = sorted.into_iter().enumerate().map(|(i, id)| (id, i % n_folds)).collect();
        Ok(FoldPlan { n_folds, assignments })
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignments.get(id).copied()
    }

    pub fn members(&self, fold: usize) -> Vec<String> {
        self.assignments.iter().filter(|(_, &f)| f == fold).map(|(id, _)| id.clone()).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        (0..self.n_folds).map(|f| self.members(f).len()).collect()
    }
}

/// Cross-validated outputs for one held-out neonate.
#[derive(Debug, Clone)]
pub struct CvSubject {
    pub id: String,
    pub fold: usize,
    pub n_channels: usize,
    pub n_epochs: usize,
    pub duration: usize,
    /// Decision statistics in row order.
    pub stats: Vec<f64>,
    /// Ascending neighbour distances, `k_max` per row.
    pub knn: Vec<f64>,
    pub max_amp: Vec<f64>,
    pub bad: Vec<bool>,
    /// Reference annotation, one value per second.
    pub truth: Vec<bool>,
}

/// What was trained for one fold, kept for audit and model export.
#[derive(Debug, Clone)]
pub struct FoldOutput {
    pub fold: usize,
    pub test_ids: Vec<String>,
    /// Neonates whose rows actually entered the training set.
    pub training_origins: BTreeSet<String>,
    pub training_rows: usize,
    pub norm: NormStats,
    pub svm: Svm,
    pub support_margins: Vec<f64>,
    pub reference: Arc<Vec<Features>>,
    /// Sorted within-reference k-th neighbour distances, per k.
    pub within_ref: Arc<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub hyper: Hyper,
    pub k_max: usize,
    pub grid: EpochGrid,
    pub seed: u64,
    pub folds: Vec<FoldOutput>,
    pub subjects: Vec<CvSubject>,
}

impl CvResult {
    /// Fails if any held-out neonate contributed rows to its own fold's
    /// training set.
    pub fn audit(&self) -> Result<()> {
        for s in &self.subjects {
            let f = &self.folds[s.fold];
            if f.training_origins.contains(&s.id) || !f.test_ids.contains(&s.id) {
                return Err(Error::InvalidInput(format!(
                    "leakage: neonate '{}' is in the training set of its own fold {}",
                    s.id, s.fold
                )));
            }
        }
        Ok(())
    }

    /// The detector trained in `fold`, with the given gate and
    /// post-processing choices.
    pub fn fold_model(&self, fold: usize, gate: GateChoice, postproc: PostprocParams) -> Result<SdaModel> {
        let f = &self.folds[fold];
        if gate.k > self.k_max {
            return Err(Error::Config(format!("k = {} exceeds stored k_max {}", gate.k, self.k_max)));
        }
        let outlier = OutlierParams {
            k: gate.k,
            d_max: threshold_from(&f.within_ref[gate.k - 1], gate.quantile),
            amp_max: gate.amp_max,
            quantile: gate.quantile,
            reference_set: f.reference.as_ref().clone(),
        };
        outlier.validate()?;
        Ok(SdaModel {
            feature_version: FEATURE_VERSION.to_string(),
            seed: self.seed,
            grid: self.grid,
            hyper: self.hyper,
            svm: f.svm.clone(),
            support_margins: f.support_margins.clone(),
            norm_stats: f.norm.clone(),
            outlier,
            postproc,
            training_ids: f.training_origins.iter().cloned().collect(),
            training_rows: f.training_rows,
        })
    }
}

struct FoldContext {
    fold: usize,
    test: Vec<usize>,
    train: TrainingSet,
    norm: NormStats,
    reference: Arc<Vec<Features>>,
    within_ref: Arc<Vec<Vec<f64>>>,
    /// Neighbour distances of each test neonate's rows.
    test_knn: Vec<Vec<f64>>,
}

/// The hyperparameter-independent part of cross-validation: fold training
/// sets, normalization and neighbour distances.
pub struct CvContext {
    pub plan: FoldPlan,
    pub k_max: usize,
    pub grid: EpochGrid,
    folds: Vec<FoldContext>,
}

impl CvContext {
    pub fn build(subjects: &[Subject], plan: &FoldPlan, cfg: &TrainConfig, grid: &EpochGrid, k_max: usize) -> Result<Self> {
        cfg.validate()?;
        for s in subjects {
            if plan.fold_of(&s.id).is_none() {
                return Err(Error::InvalidInput(format!("neonate '{}' is not in the fold plan", s.id)));
            }
        }
        let folds = (0..plan.n_folds)
            .into_par_iter()
            .map(|fold| {
                let test: Vec<usize> = (0..subjects.len())
                    .filter(|&i| plan.fold_of(&subjects[i].id) == Some(fold))
                    .collect();
                if test.is_empty() {
                    return Err(Error::Config(format!("fold {fold} has no neonates")));
                }
                let train = TrainingSet::from_subjects(
                    subjects.iter().filter(|s| plan.fold_of(&s.id) != Some(fold)),
                    grid,
                );
                if train.n_positive() == 0 {
                    return Err(Error::SingleClass(format!(
                        "fold {fold}: training neonates contain no seizure epochs"
                    )));
                }
                let norm = NormStats::fit(&train.rows)?;
                let reference = reference_rows(&train, &norm, cfg);
                if reference.len() <= k_max {
                    return Err(Error::InvalidInput(format!(
                        "fold {fold}: {} reference vectors cannot support k = {k_max}",
                        reference.len()
                    )));
                }
                let within_ref = within_reference(&reference, k_max);
                let test_knn = test
                    .iter()
                    .map(|&i| {
                        let fm = &subjects[i].features;
                        let d: Vec<Vec<f64>> = fm
                            .rows
                            .par_iter()
                            .map(|r| knn_smallest(&norm.apply(r), &reference, k_max, None))
                            .collect();
                        d.concat()
                    })
                    .collect();
                Ok(FoldContext {
                    fold,
                    test,
                    train,
                    norm,
                    reference: Arc::new(reference),
                    within_ref: Arc::new(within_ref),
                    test_knn,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CvContext {
            plan: plan.clone(),
            k_max,
            grid: *grid,
            folds,
        })
    }

    /// Trains one SVM per fold and scores the held-out neonates.
    pub fn run(&self, subjects: &[Subject], hyper: Hyper, cfg: &TrainConfig) -> Result<CvResult> {
        let per_fold: Vec<(FoldOutput, Vec<CvSubject>)> = self
            .folds
            .par_iter()
            .map(|fc| {
                let parts = fit_svm(&fc.train, &hyper, cfg)?;
                debug_assert_eq!(parts.norm, fc.norm);
                let outs = fc
                    .test
                    .iter()
                    .zip(&fc.test_knn)
                    .map(|(&i, knn)| {
                        let s = &subjects[i];
                        let stats = s
                            .features
                            .rows
                            .par_iter()
                            .map(|r| parts.svm.decision(&fc.norm.apply(r)))
                            .collect();
                        CvSubject {
                            id: s.id.clone(),
                            fold: fc.fold,
                            n_channels: s.features.n_channels(),
                            n_epochs: s.features.n_epochs,
                            duration: s.duration,
                            stats,
                            knn: knn.clone(),
                            max_amp: s.features.max_amp.clone(),
                            bad: s.bad.clone(),
                            truth: s.truth.mask.clone(),
                        }
                    })
                    .collect();
                let fo = FoldOutput {
                    fold: fc.fold,
                    test_ids: fc.test.iter().map(|&i| subjects[i].id.clone()).collect(),
                    training_origins: fc.train.subjects(),
                    training_rows: fc.train.len(),
                    norm: fc.norm.clone(),
                    svm: parts.svm,
                    support_margins: parts.support_margins,
                    reference: fc.reference.clone(),
                    within_ref: fc.within_ref.clone(),
                };
                Ok((fo, outs))
            })
            .collect::<Result<_>>()?;
        let mut folds = Vec::new();
        let mut subs = Vec::new();
        for (f, s) in per_fold {
            folds.push(f);
            subs.extend(s);
        }
        // report neonates in input order
        let order: BTreeMap<&str, usize> = subjects.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        subs.sort_by_key(|s| order[s.id.as_str()]);
        let res = CvResult {
            hyper,
            k_max: self.k_max,
            grid: self.grid,
            seed: cfg.seed,
            folds,
            subjects: subs,
        };
        res.audit()?;
        Ok(res)
    }
}

/// Cross-validated decision statistics and neighbour distances for every
/// neonate under one hyperparameter setting.
pub fn cross_validate(
    subjects: &[Subject],
    plan: &FoldPlan,
    hyper: Hyper,
    cfg: &TrainConfig,
    grid: &EpochGrid,
    k_max: usize,
) -> Result<CvResult> {
    CvContext::build(subjects, plan, cfg, grid, k_max)?.run(subjects, hyper, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i:02}")).collect()
    }

    #[test]
    fn leave_one_out_when_folds_equal_neonates() {
        let p = FoldPlan::new(&ids(10), 10, 3).unwrap();
        assert_eq!(p.sizes(), vec![1; 10]);
    }

    #[test]
    fn plan_rejects_bad_shapes() {
        assert!(FoldPlan::new(&ids(3), 4, 1).is_err());
        assert!(FoldPlan::new(&ids(3), 1, 1).is_err());
        let mut dup = ids(3);
        dup.push("n00".into());
        assert!(FoldPlan::new(&dup, 2, 1).is_err());
    }

    proptest! {
        #[test]
        fn plan_is_order_free_and_balanced(n in 2usize..60, k in 2usize..12, seed in 0u64..1000, rot in 0usize..60) {
            prop_assume!(k <= n);
            let a = ids(n);
            let mut b = a.clone();
            b.rotate_left(rot % n);
            b.reverse();
            let pa = FoldPlan::new(&a, k, seed).unwrap();
            prop_assert_eq!(&pa, &FoldPlan::new(&b, k, seed).unwrap());
            let sizes = pa.sizes();
            prop_assert!(sizes.iter().all(|&s| s > 0));
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        }
    }
}
