//! Agreement measures between detector output and human annotation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_io::{AnnotationMask, Event};

pub mod bootstrap;
pub mod rank;
pub mod report;

pub use bootstrap::{bootstrap_ci, noninferiority_delta_kappa, BootstrapCi, NonInferiority, Pairing, Verdict};
pub use rank::{mann_whitney_u, wilcoxon_signed_rank};
pub use report::{evaluate, render_table, MetricsReport, NeonateEval, NeonateMetrics, Scope};

/// Per-second agreement counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&mut self, o: &ConfusionCounts) {
        self.tp += o.tp;
        self.tn += o.tn;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }

    /// `TP / (TP + FN)`, undefined without positives.
    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `TN / (TN + FP)`, undefined without negatives.
    pub fn specificity(&self) -> Option<f64> {
        ratio(self.tn, self.tn + self.fp)
    }

    pub fn kappa(&self) -> Option<f64> {
        kappa_from_counts(self.tp as f64, self.tn as f64, self.fp as f64, self.fn_ as f64)
    }

    /// Counts as floats scaled by `w`, for weighted resampling.
    pub fn weighted(&self, w: f64) -> [f64; 4] {
        [self.tp as f64 * w, self.tn as f64 * w, self.fp as f64 * w, self.fn_ as f64 * w]
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Cohen's kappa from (possibly weighted) counts.
///
/// When chance agreement is 1 both raters used a single, identical class and
/// the result is 1. Returns `None` for an empty table.
pub fn kappa_from_counts(tp: f64, tn: f64, fp: f64, fn_: f64) -> Option<f64> {
    let n = tp + tn + fp + fn_;
    if !(n > 0.0) {
        return None;
    }
    let po = (tp + tn) / n;
    let pe = ((tp + fp) * (tp + fn_) + (tn + fn_) * (tn + fp)) / (n * n);
    if 1.0 - pe <= 1e-12 {
        return Some(if po >= 1.0 - 1e-12 { 1.0 } else { 0.0 });
    }
    Some((po - pe) / (1.0 - pe))
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            what: "annotation lengths",
            left: a,
            right: b,
        });
    }
    Ok(())
}

pub fn confusion_slices(pred: &[bool], truth: &[bool]) -> Result<ConfusionCounts> {
    check_len(pred.len(), truth.len())?;
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Second-by-second comparison of a prediction with a reference.
pub fn confusion(pred: &AnnotationMask, truth: &AnnotationMask) -> Result<ConfusionCounts> {
    confusion_slices(&pred.mask, &truth.mask)
}

/// Cohen's kappa between two raters.
pub fn cohen_kappa(a: &AnnotationMask, b: &AnnotationMask) -> Result<f64> {
    if a.duration() == 0 {
        return Err(Error::InvalidInput("kappa of empty annotations".into()));
    }
    Ok(confusion(a, b)?.kappa().expect("nonempty"))
}

/// Area under the ROC curve; tied scores count one half.
pub fn auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    check_len(scores.len(), truth.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (mut neg_below, mut acc, mut n_pos) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        let (mut gp, mut gn) = (0.0, 0.0);
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if truth[idx[j]] {
                gp += 1.0;
            } else {
                gn += 1.0;
            }
            j += 1;
        }
        acc += gp * neg_below + 0.5 * gp * gn;
        neg_below += gn;
        n_pos += gp;
        i = j;
    }
    if n_pos == 0.0 || neg_below == 0.0 {
        return Err(Error::Undefined("AUC needs both seizure and non-seizure seconds".into()));
    }
    Ok(acc / (n_pos * neg_below))
}

/// Event-level agreement for one recording.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EventCounts {
    pub truth_events: usize,
    pub detected: usize,
    pub pred_events: usize,
    pub false_detections: usize,
    pub hours: f64,
}

impl EventCounts {
    /// Fraction of reference events hit by a detection.
    pub fn sdr(&self) -> Option<f64> {
        (self.truth_events > 0).then(|| self.detected as f64 / self.truth_events as f64)
    }

    pub fn fd_per_h(&self) -> f64 {
        self.false_detections as f64 / self.hours
    }

    pub fn add(&mut self, o: &EventCounts) {
        self.truth_events += o.truth_events;
        self.detected += o.detected;
        self.pred_events += o.pred_events;
        self.false_detections += o.false_detections;
        self.hours += o.hours;
    }
}

/// Seizure detection rate and false detections per hour. Events match when
/// they share at least one second.
pub fn event_metrics(pred: &[Event], truth: &[Event], duration_h: f64) -> Result<EventCounts> {
    if !(duration_h > 0.0) {
        return Err(Error::InvalidInput("event metrics need a positive duration".into()));
    }
    let hit = |e: &Event, others: &[Event]| others.iter().any(|o| e.overlap(o) >= 1);
    Ok(EventCounts {
        truth_events: truth.len(),
        detected: truth.iter().filter(|t| hit(t, pred)).count(),
        pred_events: pred.len(),
        false_detections: pred.iter().filter(|p| !hit(p, truth)).count(),
        hours: duration_h,
    })
}

/// Linear-interpolation percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub n: usize,
}

/// Median and interquartile range, `None` for no data.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Summary {
        median: percentile(&v, 0.5),
        q1: percentile(&v, 0.25),
        q3: percentile(&v, 0.75),
        n: v.len(),
    })
}
