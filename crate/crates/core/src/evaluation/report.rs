//! Per-neonate and concatenated performance summaries.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_many, weighted_kappa};
use super::{auc, confusion_slices, event_metrics, summarize, ConfusionCounts, EventCounts, Summary};
use crate::error::{Error, Result};
use crate::postprocess::extract_events;

/// One neonate's detector output against its reference annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct NeonateEval {
    pub id: String,
    /// Per-second detection statistic (may contain -inf).
    pub trace: Vec<f64>,
    pub pred: Vec<bool>,
    pub truth: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeonateMetrics {
    pub id: String,
    pub auc: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub kappa: Option<f64>,
    pub sdr: Option<f64>,
    pub fd_per_h: f64,
    pub counts: ConfusionCounts,
    pub events: EventCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    PerNeonate,
    Concatenated,
}

/// A value with an optional 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metric {
    pub value: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Metric {
    fn render(&self) -> String {
        match (self.value, self.lo, self.hi) {
            (Some(v), Some(l), Some(h)) => format!("{v:.3} ({l:.3}-{h:.3})"),
            (Some(v), _, _) => format!("{v:.3}"),
            _ => "-".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Neonates evaluated.
    pub n_total: usize,
    /// Neonates with at least one reference seizure second.
    pub n_seizure: usize,
    /// Median (IQR) across neonates where each measure is defined.
    pub auc: Option<Summary>,
    pub sensitivity: Option<Summary>,
    pub specificity: Option<Summary>,
    pub kappa: Option<Summary>,
    /// Measures on the concatenation of all neonates, bootstrap 95% CI.
    pub c_auc: Metric,
    pub c_sensitivity: Metric,
    pub c_specificity: Metric,
    pub c_kappa: Metric,
    pub c_sdr: Metric,
    pub c_fd_per_h: Metric,
    pub counts: ConfusionCounts,
    pub events: EventCounts,
    pub bootstrap_iters: usize,
    pub bootstrap_redraws: usize,
    pub neonates: Vec<NeonateMetrics>,
}

/// Pairwise ranking counts between neonates, so concatenated AUC under any
/// neonate multiplicity is a quadratic form.
struct AucIndex {
    n: usize,
    /// `pairs[i * n + j]`: correctly ordered (pos of i, neg of j) pairs,
    /// ties counted half.
    pairs: Vec<f64>,
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl AucIndex {
    fn new(neonates: &[NeonateEval]) -> Self {
        let n = neonates.len();
        let mut items: Vec<(f64, u32, bool)> = Vec::new();
        for (k, ne) in neonates.iter().enumerate() {
            items.extend(ne.trace.iter().zip(&ne.truth).map(|(&s, &t)| (s, k as u32, t)));
        }
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pairs = vec![0.0; n * n];
        let mut neg_below = vec![0.0; n];
        let (mut gp, mut gn) = (vec![0.0; n], vec![0.0; n]);
        let mut i = 0;
        while i < items.len() {
            let mut j = i;
            let mut touched = Vec::new();
            while j < items.len() && items[j].0 == items[i].0 {
                let k = items[j].1 as usize;
                if gp[k] == 0.0 && gn[k] == 0.0 {
                    touched.push(k);
                }
                if items[j].2 {
                    gp[k] += 1.0;
                } else {
                    gn[k] += 1.0;
                }
                j += 1;
            }
            for &a in &touched {
                if gp[a] > 0.0 {
                    for b in 0..n {
                        pairs[a * n + b] += gp[a] * neg_below[b];
                    }
                    for &b in &touched {
                        pairs[a * n + b] += 0.5 * gp[a] * gn[b];
                    }
                }
            }
            for &a in &touched {
                neg_below[a] += gn[a];
                gp[a] = 0.0;
                gn[a] = 0.0;
            }
            i = j;
        }
        let pos = neonates.iter().map(|ne| ne.truth.iter().filter(|&&t| t).count() as f64).collect();
        let neg = neonates.iter().map(|ne| ne.truth.iter().filter(|&&t| !t).count() as f64).collect();
        AucIndex { n, pairs, pos, neg }
    }

    fn weighted(&self, w: &[u32]) -> Option<f64> {
        let w: Vec<f64> = w.iter().map(|&x| x as f64).collect();
        let p: f64 = w.iter().zip(&self.pos).map(|(a, b)| a * b).sum();
        let q: f64 = w.iter().zip(&self.neg).map(|(a, b)| a * b).sum();
        if p == 0.0 || q == 0.0 {
            return None;
        }
        let mut acc = 0.0;
        for a in 0..self.n {
            if w[a] == 0.0 || self.pos[a] == 0.0 {
                continue;
            }
            let row = &self.pairs[a * self.n..(a + 1) * self.n];
            acc += w[a] * row.iter().zip(&w).map(|(x, y)| x * y).sum::<f64>();
        }
        Some(acc / (p * q))
    }
}

fn neonate_metrics(ne: &NeonateEval) -> Result<NeonateMetrics> {
    let counts = confusion_slices(&ne.pred, &ne.truth)?;
    if ne.trace.len() != ne.truth.len() {
        return Err(Error::LengthMismatch {
            what: "trace vs reference",
            left: ne.trace.len(),
            right: ne.truth.len(),
        });
    }
    let hours = ne.truth.len() as f64 / 3600.0;
    let events = event_metrics(&extract_events(&ne.pred), &extract_events(&ne.truth), hours)?;
    Ok(NeonateMetrics {
        id: ne.id.clone(),
        auc: auc(&ne.trace, &ne.truth).ok(),
        sensitivity: counts.sensitivity(),
        specificity: counts.specificity(),
        kappa: counts.kappa(),
        sdr: events.sdr(),
        fd_per_h: events.fd_per_h(),
        counts,
        events,
    })
}

/// Evaluates a corpus, per neonate and on the concatenation.
pub fn evaluate(neonates: &[NeonateEval], iters: usize, seed: u64) -> Result<MetricsReport> {
    if neonates.is_empty() {
        return Err(Error::InvalidInput("no neonates to evaluate".into()));
    }
    let per: Vec<NeonateMetrics> = neonates.iter().map(neonate_metrics).collect::<Result<_>>()?;
    let collect = |f: &dyn Fn(&NeonateMetrics) -> Option<f64>| summarize(&per.iter().filter_map(f).collect::<Vec<_>>());

    let counts: Vec<ConfusionCounts> = per.iter().map(|m| m.counts).collect();
    let evs: Vec<EventCounts> = per.iter().map(|m| m.events).collect();
    let index = AucIndex::new(neonates);

    let sum_counts = |w: &[u32]| {
        let mut s = [0.0; 4];
        for (c, &wi) in counts.iter().zip(w) {
            for (a, b) in s.iter_mut().zip(c.weighted(wi as f64)) {
                *a += b;
            }
        }
        s
    };
    let sum_events = |w: &[u32]| {
        let (mut t, mut d, mut fd, mut h) = (0.0, 0.0, 0.0, 0.0);
        for (e, &wi) in evs.iter().zip(w) {
            let wi = wi as f64;
            t += wi * e.truth_events as f64;
            d += wi * e.detected as f64;
            fd += wi * e.false_detections as f64;
            h += wi * e.hours;
        }
        (t, d, fd, h)
    };
    type Stat<'a> = Box<dyn Fn(&[u32]) -> Option<f64> + Sync + 'a>;
    let stats: Vec<Stat> = vec![
        Box::new(|w| index.weighted(w)),
        Box::new(|w| {
            let s = sum_counts(w);
            (s[0] + s[3] > 0.0).then(|| s[0] / (s[0] + s[3]))
        }),
        Box::new(|w| {
            let s = sum_counts(w);
            (s[1] + s[2] > 0.0).then(|| s[1] / (s[1] + s[2]))
        }),
        Box::new(|w| weighted_kappa(&counts, w)),
        Box::new(|w| {
            let (t, d, _, _) = sum_events(w);
            (t > 0.0).then(|| d / t)
        }),
        Box::new(|w| {
            let (_, _, fd, h) = sum_events(w);
            (h > 0.0).then(|| fd / h)
        }),
    ];
    let ones = vec![1u32; neonates.len()];
    let defined: Vec<usize> = (0..stats.len()).filter(|&k| stats[k](&ones).is_some()).collect();
    let mut metrics = vec![Metric::default(); stats.len()];
    let mut redraws = 0;
    if !defined.is_empty() {
        let cis = bootstrap_many(neonates.len(), iters, seed, |w| {
            defined.iter().map(|&k| stats[k](w)).collect::<Option<Vec<f64>>>()
        })?;
        for (&k, ci) in defined.iter().zip(cis) {
            redraws = ci.redraws;
            metrics[k] = Metric {
                value: Some(ci.point),
                lo: Some(ci.lo),
                hi: Some(ci.hi),
            };
        }
    }

    let mut total = ConfusionCounts::default();
    let mut ev = EventCounts::default();
    for m in &per {
        total.add(&m.counts);
        ev.add(&m.events);
    }
    Ok(MetricsReport {
        n_total: neonates.len(),
        n_seizure: neonates.iter().filter(|n| n.truth.iter().any(|&t| t)).count(),
        auc: collect(&|m| m.auc),
        sensitivity: collect(&|m| m.sensitivity),
        specificity: collect(&|m| m.specificity),
        kappa: collect(&|m| m.kappa),
        c_auc: metrics[0],
        c_sensitivity: metrics[1],
        c_specificity: metrics[2],
        c_kappa: metrics[3],
        c_sdr: metrics[4],
        c_fd_per_h: metrics[5],
        counts: total,
        events: ev,
        bootstrap_iters: iters,
        bootstrap_redraws: redraws,
        neonates: per,
    })
}

fn render_summary(s: &Option<Summary>) -> String {
    match s {
        Some(s) => format!("{:.3} ({:.3}-{:.3})", s.median, s.q1, s.q3),
        None => "-".into(),
    }
}

/// Text table with one column per report: median (IQR) for per-neonate
/// measures, value (95% CI) for concatenated ones.
pub fn render_table(columns: &[(&str, &MetricsReport)]) -> String {
    let mut rows: Vec<(String, Vec<String>)> = vec![
        (String::new(), columns.iter().map(|c| c.0.to_string()).collect()),
        (
            String::new(),
            columns
                .iter()
                .map(|c| format!("n_t = {}, n_s = {}", c.1.n_total, c.1.n_seizure))
                .collect(),
        ),
    ];
    let per: [(&str, fn(&MetricsReport) -> String); 3] = [
        ("AUC", |r| render_summary(&r.auc)),
        ("Sens", |r| render_summary(&r.sensitivity)),
        ("Spec", |r| render_summary(&r.specificity)),
    ];
    let conc: [(&str, fn(&MetricsReport) -> String); 4] = [
        ("cAUC", |r| r.c_auc.render()),
        ("cSDR", |r| r.c_sdr.render()),
        ("cFD/h", |r| r.c_fd_per_h.render()),
        ("cKappa", |r| r.c_kappa.render()),
    ];
    for (name, f) in per.iter().chain(conc.iter()) {
        rows.push((name.to_string(), columns.iter().map(|c| f(c.1)).collect()));
    }
    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns.len())
        .map(|k| rows.iter().map(|r| r.1[k].len()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for (i, (name, cells)) in rows.iter().enumerate() {
        let _ = write!(s, "{name:<w0$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(s, " | {c:<w$}");
        }
        s.push('\n');
        if i == 1 || i == 4 {
            let _ = writeln!(s, "{}", "-".repeat(w0 + widths.iter().map(|w| w + 3).sum::<usize>()));
        }
    }
    s
}
