//! From per-(channel, epoch) decision statistics to a 1 Hz seizure mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::EpochGrid;
use crate::signal_io::{AnnotationMask, Event};

/// Rater label given to automated masks.
pub const DETECTOR_RATER: &str = "sda";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostprocParams {
    /// Moving-average length in epochs (odd).
    pub ma_len: usize,
    pub threshold: f64,
    /// Seconds added to both ends of every detection.
    pub collar: usize,
    /// Shortest detection kept, in seconds.
    pub min_dur: usize,
}

impl Default for PostprocParams {
    fn default() -> Self {
        PostprocParams {
            ma_len: 3,
            threshold: 0.0,
            collar: 16,
            min_dur: 10,
        }
    }
}

impl PostprocParams {
    pub fn validate(&self) -> Result<()> {
        if self.ma_len == 0 || self.ma_len % 2 == 0 {
            return Err(Error::Config(format!("ma_len must be odd and >= 1, got {}", self.ma_len)));
        }
        if self.min_dur == 0 {
            return Err(Error::Config("min_dur must be positive".into()));
        }
        if !self.threshold.is_finite() {
            return Err(Error::Config("threshold must be finite".into()));
        }
        Ok(())
    }
}

/// Maximal runs of true values as half-open intervals.
pub fn extract_events(mask: &[bool]) -> Vec<Event> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &v) in mask.iter().enumerate() {
        match (v, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(Event::new(s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Event::new(s, mask.len()));
    }
    out
}

/// Extends every run by `collar` elements on both sides.
pub fn dilate(mask: &[bool], collar: usize) -> Vec<bool> {
    let n = mask.len();
    let mut out = vec![false; n];
    for e in extract_events(mask) {
        let lo = e.onset.saturating_sub(collar);
        let hi = (e.offset + collar).min(n);
        out[lo..hi].iter_mut().for_each(|v| *v = true);
    }
    out
}

/// Clears runs shorter than `min_len`.
pub fn drop_short(mask: &mut [bool], min_len: usize) {
    for e in extract_events(mask) {
        if e.duration() < min_len {
            mask[e.onset..e.offset].iter_mut().for_each(|v| *v = false);
        }
    }
}

/// Collapses a per-channel, per-second bad-electrode mask onto epochs, in
/// row order `channel * n_epochs + epoch`. An epoch is bad if any of its
/// seconds is.
pub fn epoch_bad(bad: Option<&Vec<Vec<bool>>>, n_channels: usize, n_epochs: usize, grid: &EpochGrid) -> Vec<bool> {
    let mut out = vec![false; n_channels * n_epochs];
    if let Some(bad) = bad {
        for (ch, secs) in bad.iter().enumerate().take(n_channels) {
            for ep in 0..n_epochs {
                let (s, e) = grid.epoch_span(ep);
                out[ch * n_epochs + ep] = secs[s.min(secs.len())..e.min(secs.len())].iter().any(|&b| b);
            }
        }
    }
    out
}

/// Steps (1)-(3): exclusion, per-channel centred moving average and the
/// maximum across channels. Returns one value per epoch.
pub fn epoch_statistic(stats: &[f64], excluded: &[bool], n_channels: usize, ma_len: usize) -> Result<Vec<f64>> {
    if stats.len() != excluded.len() {
        return Err(Error::LengthMismatch {
            what: "statistics vs exclusion flags",
            left: stats.len(),
            right: excluded.len(),
        });
    }
    if n_channels == 0 || stats.len() % n_channels != 0 {
        return Err(Error::InvalidInput(format!(
            "{} statistics do not split into {n_channels} channels",
            stats.len()
        )));
    }
    let n_epochs = stats.len() / n_channels;
    let half = ma_len / 2;
    let mut out = vec![f64::NEG_INFINITY; n_epochs];
    let mut masked = vec![0.0; n_epochs];
    for ch in 0..n_channels {
        let row = &stats[ch * n_epochs..(ch + 1) * n_epochs];
        let ex = &excluded[ch * n_epochs..(ch + 1) * n_epochs];
        for i in 0..n_epochs {
            masked[i] = if ex[i] { f64::NEG_INFINITY } else { row[i] };
        }
        for i in 0..n_epochs {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n_epochs);
            let w = &masked[lo..hi];
            let v = w.iter().sum::<f64>() / w.len() as f64;
            if v > out[i] {
                out[i] = v;
            }
        }
    }
    Ok(out)
}

/// Zero-order hold of epoch values onto seconds, taking the maximum where
/// epochs overlap. Seconds covered by no epoch get -inf.
pub fn hold_to_seconds(epoch_values: &[f64], grid: &EpochGrid, duration: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; duration];
    for (i, &v) in epoch_values.iter().enumerate() {
        let (s, e) = grid.epoch_span(i);
        for x in out[s.min(duration)..e.min(duration)].iter_mut() {
            if v > *x {
                *x = v;
            }
        }
    }
    out
}

/// Per-second detection statistic before thresholding. Thresholding this
/// trace is equivalent to thresholding epochs and OR-ing their spans.
pub fn continuous_trace(
    stats: &[f64],
    excluded: &[bool],
    n_channels: usize,
    ma_len: usize,
    grid: &EpochGrid,
    duration: usize,
) -> Result<Vec<f64>> {
    let ep = epoch_statistic(stats, excluded, n_channels, ma_len)?;
    Ok(hold_to_seconds(&ep, grid, duration))
}

/// Threshold, collar and duration filter applied to a per-second trace.
pub fn binarize_trace(trace: &[f64], p: &PostprocParams) -> Vec<bool> {
    let raw: Vec<bool> = trace.iter().map(|&v| v > p.threshold).collect();
    let mut mask = dilate(&raw, p.collar);
    drop_short(&mut mask, p.min_dur);
    mask
}

/// The full chain from statistics to a detector mask.
///
/// `stats`, `outliers` and `bad` are in row order
/// `channel * n_epochs + epoch`.
pub fn postprocess(
    stats: &[f64],
    outliers: &[bool],
    bad: &[bool],
    n_channels: usize,
    p: &PostprocParams,
    grid: &EpochGrid,
    duration: usize,
) -> Result<AnnotationMask> {
    p.validate()?;
    if outliers.len() != stats.len() || bad.len() != stats.len() {
        return Err(Error::LengthMismatch {
            what: "statistics vs outlier/bad flags",
            left: stats.len(),
            right: outliers.len().min(bad.len()),
        });
    }
    if stats.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("decision statistics must be finite".into()));
    }
    let excluded: Vec<bool> = outliers.iter().zip(bad).map(|(a, b)| *a || *b).collect();
    let trace = continuous_trace(stats, &excluded, n_channels, p.ma_len, grid, duration)?;
    Ok(AnnotationMask::new(DETECTOR_RATER, binarize_trace(&trace, p)))
}
