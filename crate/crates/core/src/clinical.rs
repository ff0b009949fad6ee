//! Seizure burden, periods of clinical interest and burden classes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::bootstrap::bootstrap_ci;
use crate::evaluation::{BootstrapCi, ConfusionCounts};
use crate::postprocess::extract_events;
use crate::signal_io::AnnotationMask;

pub const HOUR_S: usize = 3600;
pub const POI_WINDOW_S: usize = 7200;
/// An event counts toward the POI event rule with this many in-window seconds.
pub const POI_EVENT_S: usize = 30;
pub const POI_EVENTS: usize = 2;
pub const POI_ACCUMULATED_S: usize = 180;
pub const HIGH_TOTAL_MIN: f64 = 45.0;
pub const HIGH_HOURLY_MIN: f64 = 13.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurdenSeries {
    /// Seizure seconds per hour from recording start; a trailing partial
    /// hour is its own bin.
    pub hourly: Vec<u32>,
    pub total_min: f64,
    pub max_hourly_min: f64,
}

pub fn burden(mask: &AnnotationMask) -> BurdenSeries {
    let hourly: Vec<u32> = mask
        .mask
        .chunks(HOUR_S)
        .map(|c| c.iter().filter(|&&v| v).count() as u32)
        .collect();
    let total: u32 = hourly.iter().sum();
    BurdenSeries {
        total_min: total as f64 / 60.0,
        max_hourly_min: hourly.iter().copied().max().unwrap_or(0) as f64 / 60.0,
        hourly,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoiWindow {
    pub index: usize,
    pub start_s: usize,
    pub seizure_seconds: usize,
    /// Events with at least 30 s inside the window.
    pub long_events: usize,
    pub is_poi: bool,
}

/// Tiles the recording with 2 h windows from its start. A window is a
/// period of interest when it holds two events of at least 30 s or 3 min
/// of accumulated seizure.
pub fn detect_poi(mask: &AnnotationMask) -> Vec<PoiWindow> {
    let events = extract_events(&mask.mask);
    (0..mask.duration().div_ceil(POI_WINDOW_S))
        .map(|w| {
            let start = w * POI_WINDOW_S;
            let end = (start + POI_WINDOW_S).min(mask.duration());
            let inside = |e: &crate::signal_io::Event| e.offset.min(end).saturating_sub(e.onset.max(start));
            let seizure_seconds: usize = events.iter().map(inside).sum();
            let long_events = events.iter().filter(|e| inside(e) >= POI_EVENT_S).count();
            PoiWindow {
                index: w,
                start_s: start,
                seizure_seconds,
                long_events,
                is_poi: long_events >= POI_EVENTS || seizure_seconds >= POI_ACCUMULATED_S,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BurdenClass {
    pub total_high: bool,
    pub hourly_high: bool,
}

pub fn classify_burden(b: &BurdenSeries) -> BurdenClass {
    BurdenClass {
        total_high: b.total_min > HIGH_TOTAL_MIN,
        hourly_high: b.max_hourly_min > HIGH_HOURLY_MIN,
    }
}

/// Pearson correlation; undefined when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "correlation series",
            left: x.len(),
            right: y.len(),
        });
    }
    let w = vec![1.0; x.len()];
    Moments::of(x, y, &w).r().ok_or_else(|| Error::Undefined("correlation of a constant series".into()))
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl Moments {
    fn of(x: &[f64], y: &[f64], w: &[f64]) -> Self {
        let mut m = Moments::default();
        for ((a, b), w) in x.iter().zip(y).zip(w) {
            m.n += w;
            m.sx += w * a;
            m.sy += w * b;
            m.sxx += w * a * a;
            m.syy += w * b * b;
            m.sxy += w * a * b;
        }
        m
    }

    fn add_scaled(&mut self, o: &Moments, w: f64) {
        self.n += w * o.n;
        self.sx += w * o.sx;
        self.sy += w * o.sy;
        self.sxx += w * o.sxx;
        self.syy += w * o.syy;
        self.sxy += w * o.sxy;
    }

    fn r(&self) -> Option<f64> {
        if self.n == 0.0 {
            return None;
        }
        let vx = self.sxx - self.sx * self.sx / self.n;
        let vy = self.syy - self.sy * self.sy / self.n;
        let cxy = self.sxy - self.sx * self.sy / self.n;
        let scale = self.sxx.abs().max(self.syy.abs()).max(1.0);
        if vx <= 1e-12 * scale || vy <= 1e-12 * scale {
            return None;
        }
        Some((cxy / (vx * vy).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Pearson r over concatenated hourly burdens, with a neonate-level
/// bootstrap interval.
pub fn burden_correlation(a: &[BurdenSeries], b: &[BurdenSeries], iters: usize, seed: u64) -> Result<BootstrapCi> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "neonates in burden sets",
            left: a.len(),
            right: b.len(),
        });
    }
    let mut per = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b) {
        if x.hourly.len() != y.hourly.len() {
            return Err(Error::LengthMismatch {
                what: "hour bins",
                left: x.hourly.len(),
                right: y.hourly.len(),
            });
        }
        let xs: Vec<f64> = x.hourly.iter().map(|&v| v as f64).collect();
        let ys: Vec<f64> = y.hourly.iter().map(|&v| v as f64).collect();
        per.push(Moments::of(&xs, &ys, &vec![1.0; xs.len()]));
    }
    let stat = |w: &[u32]| {
        let mut m = Moments::default();
        for (p, &wi) in per.iter().zip(w) {
            m.add_scaled(p, wi as f64);
        }
        m.r()
    };
    if stat(&vec![1; per.len()]).is_none() {
        return Err(Error::Undefined("hourly burden does not vary in one of the series".into()));
    }
    bootstrap_ci(per.len(), iters, seed, stat)
}

/// A two-by-two table with the rates clinicians read off it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub counts: ConfusionCounts,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
}

impl Agreement {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let n = counts.total();
        Agreement {
            counts,
            sensitivity: counts.sensitivity(),
            specificity: counts.specificity(),
            accuracy: (n > 0).then(|| (counts.tp + counts.tn) as f64 / n as f64),
        }
    }

    fn tally(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (p, t) in pairs {
            match (p, t) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Agreement::from_counts(c)
    }
}

/// Window-level agreement of detector POIs with reference POIs.
pub fn poi_agreement(pred: &[PoiWindow], truth: &[PoiWindow]) -> Result<Agreement> {
    if pred.len() != truth.len() || pred.iter().zip(truth).any(|(p, t)| p.start_s != t.start_s) {
        return Err(Error::LengthMismatch {
            what: "POI window grids",
            left: pred.len(),
            right: truth.len(),
        });
    }
    Ok(Agreement::tally(pred.iter().zip(truth).map(|(p, t)| (p.is_poi, t.is_poi))))
}

/// Neonate-level agreement of the high/low burden classes, total then
/// maximum hourly.
pub fn class_agreement(pred: &[BurdenClass], truth: &[BurdenClass]) -> Result<(Agreement, Agreement)> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "neonates in burden classes",
            left: pred.len(),
            right: truth.len(),
        });
    }
    let z = || pred.iter().zip(truth);
    Ok((
        Agreement::tally(z().map(|(p, t)| (p.total_high, t.total_high))),
        Agreement::tally(z().map(|(p, t)| (p.hourly_high, t.hourly_high))),
    ))
}

pub fn burden_csv(b: &BurdenSeries) -> String {
    let mut s = String::from("hour,seconds\n");
    for (h, v) in b.hourly.iter().enumerate() {
        let _ = writeln!(s, "{h},{v}");
    }
    s
}

pub fn poi_csv(w: &[PoiWindow]) -> String {
    let mut s = String::from("window,start_s,is_poi\n");
    for p in w {
        let _ = writeln!(s, "{},{},{}", p.index, p.start_s, p.is_poi as u8);
    }
    s
}

/// Hourly burden in minutes per hour against elapsed hours, for charting.
pub fn plot_csv(series: &[(&str, &BurdenSeries)]) -> String {
    let mut s = String::from("rater,time_h,burden_min_per_h\n");
    for (name, b) in series {
        for (h, v) in b.hourly.iter().enumerate() {
            let _ = writeln!(s, "{name},{h},{:.4}", *v as f64 / 60.0);
        }
    }
    s
}

/// Two-by-two table in the layout of the clinical agreement tables: rows
/// are the human reference (H), columns the detector (S).
pub fn render_agreement(title: &str, pos: &str, neg: &str, a: &Agreement) -> String {
    let c = a.counts;
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    let rows = [format!("{pos} (H)"), format!("{neg} (H)")];
    let cols = [format!("{pos} (S)"), format!("{neg} (S)")];
    let lw = rows.iter().map(String::len).max().unwrap_or(0);
    let cw = cols.iter().map(String::len).max().unwrap_or(0).max(6);
    let mut s = format!("{title}\n{:<lw$} {:>cw$} {:>cw$}\n", "", cols[0], cols[1]);
    let _ = writeln!(s, "{:<lw$} {:>cw$} {:>cw$}", rows[0], c.tp, c.fn_);
    let _ = writeln!(s, "{:<lw$} {:>cw$} {:>cw$}", rows[1], c.fp, c.tn);
    let _ = writeln!(
        s,
        "sensitivity {}  specificity {}  accuracy {}",
        f(a.sensitivity),
        f(a.specificity),
        f(a.accuracy)
    );
    s
}
