//! Out-of-distribution gate: k-nearest-neighbour distance in normalized
//! feature space plus a raw amplitude ceiling. Outlying epochs are forced
//! to "no seizure".

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{confusion_slices, percentile, ConfusionCounts};
use crate::features::{FeatureVector, Features};
use crate::model::cv::CvResult;
use crate::postprocess::{binarize_trace, continuous_trace, PostprocParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierParams {
    pub k: usize,
    /// Distance ceiling in normalized-feature units.
    pub d_max: f64,
    /// Amplitude ceiling in uV.
    pub amp_max: f64,
    /// Quantile of within-reference distances that produced `d_max`.
    pub quantile: f64,
    /// Normalized training vectors.
    pub reference_set: Vec<Features>,
}

impl OutlierParams {
    /// Sets `d_max` to the `quantile` of leave-one-out k-th neighbour
    /// distances inside the reference set.
    pub fn fit(reference_set: Vec<Features>, k: usize, quantile: f64, amp_max: f64) -> Result<Self> {
        if reference_set.len() <= k {
            return Err(Error::InvalidInput(format!(
                "reference set of {} vectors is too small for k = {k}",
                reference_set.len()
            )));
        }
        let table = within_reference(&reference_set, k);
        let d_max = threshold_from(&table[k - 1], quantile);
        let p = OutlierParams {
            k,
            d_max,
            amp_max,
            quantile,
            reference_set,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("outlier k must be >= 1".into()));
        }
        if !(self.d_max > 0.0) || !(self.amp_max > 0.0) {
            return Err(Error::Config(format!(
                "outlier thresholds must be positive (d_max {}, amp_max {})",
                self.d_max, self.amp_max
            )));
        }
        if self.reference_set.len() < self.k {
            return Err(Error::Config(format!(
                "reference set has {} vectors, fewer than k = {}",
                self.reference_set.len(),
                self.k
            )));
        }
        Ok(())
    }
}

/// `d_max` from sorted within-reference distances; kept strictly positive.
pub fn threshold_from(sorted: &[f64], quantile: f64) -> f64 {
    percentile(sorted, quantile).max(1e-12)
}

/// Ascending distances to the `k` nearest reference vectors, optionally
/// skipping one reference index (leave-one-out).
pub fn knn_smallest<R: AsRef<[f64]>>(x: &[f64], reference: &[R], k: usize, skip: Option<usize>) -> Vec<f64> {
    let mut best: Vec<f64> = Vec::with_capacity(k + 1);
    for (i, r) in reference.iter().enumerate() {
        if Some(i) == skip {
            continue;
        }
        let worst = if best.len() == k { best[k - 1] } else { f64::INFINITY };
        let mut d = 0.0;
        for (a, b) in x.iter().zip(r.as_ref()) {
            d += (a - b) * (a - b);
            if d >= worst {
                break;
            }
        }
        if d < worst {
            let pos = best.partition_point(|&v| v <= d);
            best.insert(pos, d);
            best.truncate(k);
        }
    }
    best.iter().map(|d| d.sqrt()).collect()
}

/// Euclidean distance to the k-th nearest reference vector.
pub fn knn_distance<R: AsRef<[f64]>>(x: &[f64], reference: &[R], k: usize) -> Result<f64> {
    if k == 0 || k > reference.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} must lie in 1..={} (reference size)",
            reference.len()
        )));
    }
    Ok(knn_smallest(x, reference, k, None)[k - 1])
}

/// For each `k` in `1..=k_max`, the sorted leave-one-out k-th neighbour
/// distances of every reference vector.
pub fn within_reference(reference: &[Features], k_max: usize) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = (0..reference.len())
        .into_par_iter()
        .map(|i| knn_smallest(&reference[i], reference, k_max, Some(i)))
        .collect();
    (0..k_max)
        .map(|k| {
            let mut v: Vec<f64> = rows.iter().filter_map(|r| r.get(k).copied()).collect();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect()
}

/// Strict comparisons: a value exactly at a threshold is not an outlier.
pub fn is_outlier(fv: &FeatureVector, p: &OutlierParams) -> Result<bool> {
    if fv.max_amp > p.amp_max {
        return Ok(true);
    }
    Ok(knn_distance(&fv.values, &p.reference_set, p.k)? > p.d_max)
}

/// Gate decisions for normalized rows and their raw amplitudes.
pub fn gate_rows(rows: &[Features], max_amp: &[f64], p: &OutlierParams) -> Result<Vec<bool>> {
    p.validate()?;
    Ok(rows
        .par_iter()
        .zip(max_amp.par_iter())
        .map(|(r, &a)| a > p.amp_max || knn_smallest(r, &p.reference_set, p.k, None)[p.k - 1] > p.d_max)
        .collect())
}

/// Search space for the joint gate and post-processing calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationGrid {
    pub k: Vec<usize>,
    pub quantile: Vec<f64>,
    pub amp_max: Vec<f64>,
    pub ma_len: Vec<usize>,
    pub threshold: Vec<f64>,
    pub collar: Vec<usize>,
    pub min_dur: Vec<usize>,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        CalibrationGrid {
            k: vec![3, 5, 9],
            quantile: vec![0.99, 0.995, 0.999],
            amp_max: vec![250.0, 400.0, 600.0, 1000.0],
            ma_len: vec![1, 3, 5],
            threshold: (0..11).map(|i| -1.0 + 0.25 * i as f64).collect(),
            collar: vec![0, 8, 16],
            min_dur: vec![10, 30],
        }
    }
}

impl CalibrationGrid {
    pub fn validate(&self) -> Result<()> {
        let lens = [
            ("k", self.k.len()),
            ("quantile", self.quantile.len()),
            ("amp_max", self.amp_max.len()),
            ("ma_len", self.ma_len.len()),
            ("threshold", self.threshold.len()),
            ("collar", self.collar.len()),
            ("min_dur", self.min_dur.len()),
        ];
        if let Some((name, _)) = lens.iter().find(|l| l.1 == 0) {
            return Err(Error::Config(format!("calibration grid '{name}' is empty")));
        }
        if self.k.contains(&0) {
            return Err(Error::Config("calibration k values must be >= 1".into()));
        }
        if self.quantile.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(Error::Config("quantiles must lie in [0, 1]".into()));
        }
        if self.amp_max.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Config("amp_max values must be positive".into()));
        }
        for &m in &self.ma_len {
            for &d in &self.min_dur {
                PostprocParams {
                    ma_len: m,
                    threshold: 0.0,
                    collar: 0,
                    min_dur: d,
                }
                .validate()?;
            }
        }
        Ok(())
    }

    pub fn k_max(&self) -> usize {
        self.k.iter().copied().max().unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateChoice {
    pub k: usize,
    pub quantile: f64,
    pub amp_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub gate: GateChoice,
    pub postproc: PostprocParams,
    /// Concatenated kappa against the reference annotation.
    pub kappa: f64,
}

/// Grid search of gate and post-processing parameters maximizing
/// concatenated kappa of the full pipeline over cross-validated outputs.
/// Ties keep the earliest candidate in grid order.
pub fn calibrate(cv: &CvResult, grid: &CalibrationGrid) -> Result<Calibration> {
    grid.validate()?;
    if grid.k_max() > cv.k_max {
        return Err(Error::Config(format!(
            "calibration k up to {} but neighbour distances were kept only up to {}",
            grid.k_max(),
            cv.k_max
        )));
    }
    let mut gates = Vec::new();
    for &k in &grid.k {
        for &q in &grid.quantile {
            for &a in &grid.amp_max {
                gates.push(GateChoice {
                    k,
                    quantile: q,
                    amp_max: a,
                });
            }
        }
    }
    let results: Vec<Result<(f64, PostprocParams)>> = gates
        .par_iter()
        .map(|g| {
            let d_max: Vec<f64> = cv.folds.iter().map(|f| threshold_from(&f.within_ref[g.k - 1], g.quantile)).collect();
            let excluded: Vec<Vec<bool>> = cv
                .subjects
                .iter()
                .map(|s| {
                    (0..s.stats.len())
                        .map(|r| s.bad[r] || s.max_amp[r] > g.amp_max || s.knn[r * cv.k_max + g.k - 1] > d_max[s.fold])
                        .collect()
                })
                .collect();
            let mut best = (f64::NEG_INFINITY, PostprocParams::default());
            for &ma in &grid.ma_len {
                let traces: Vec<Vec<f64>> = cv
                    .subjects
                    .iter()
                    .zip(&excluded)
                    .map(|(s, ex)| continuous_trace(&s.stats, ex, s.n_channels, ma, &cv.grid, s.duration))
                    .collect::<Result<_>>()?;
                for &threshold in &grid.threshold {
                    for &collar in &grid.collar {
                        for &min_dur in &grid.min_dur {
                            let p = PostprocParams {
                                ma_len: ma,
                                threshold,
                                collar,
                                min_dur,
                            };
                            let mut total = ConfusionCounts::default();
                            for (s, t) in cv.subjects.iter().zip(&traces) {
                                total.add(&confusion_slices(&binarize_trace(t, &p), &s.truth)?);
                            }
                            let kappa = total.kappa().unwrap_or(f64::NEG_INFINITY);
                            if kappa > best.0 {
                                best = (kappa, p);
                            }
                        }
                    }
                }
            }
            Ok(best)
        })
        .collect();
    let mut out: Option<Calibration> = None;
    for (g, r) in gates.iter().zip(results) {
        let (kappa, postproc) = r?;
        if out.map_or(true, |o| kappa > o.kappa) {
            out = Some(Calibration {
                gate: *g,
                postproc,
                kappa,
            });
        }
    }
    out.ok_or_else(|| Error::Config("empty calibration grid".into()))
}
