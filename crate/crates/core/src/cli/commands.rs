use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::manifest::Recorder;
use crate::clinical::{
    burden as burden_series, burden_correlation, burden_csv, class_agreement, classify_burden, detect_poi,
    plot_csv, poi_agreement, poi_csv, render_agreement, Agreement, BurdenClass,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate as evaluate_corpus, mann_whitney_u, noninferiority_delta_kappa, render_table, BootstrapCi,
    MetricsReport, NeonateEval, NonInferiority, Verdict,
};
use crate::model::SdaModel;
use crate::pipeline::{self, detect_recording, list_recordings, load_corpus, load_recording};
use crate::signal_io::annotations::{events_to_csv, mask_to_csv};
use crate::signal_io::{consensus, load_annotations, read_mask_csv, AnnotationMask, Event};
use crate::synth::{generate, write_corpus};

fn require<'a>(v: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    v.as_deref()
        .ok_or_else(|| Error::Config(format!("missing {what}")))
}

/// An input path that must already exist.
fn existing<'a>(v: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    let p = require(v, what)?;
    if !p.exists() {
        return Err(Error::Config(format!("{what}: '{}' does not exist", p.display())));
    }
    Ok(p)
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    require(&cfg.paths.out_dir, "output directory (--out or paths.out_dir)")
}

/// Per-second detection statistic; excluded seconds are `-inf`.
pub fn trace_csv(trace: &[f64]) -> String {
    let mut s = String::with_capacity(trace.len() * 12 + 20);
    s.push_str("second,statistic\n");
    for (i, v) in trace.iter().enumerate() {
        let _ = writeln!(s, "{i},{v}");
    }
    s
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() || (lineno == 0 && line.starts_with("second")) {
            continue;
        }
        let v = line
            .split_once(',')
            .and_then(|(_, v)| v.trim().parse::<f64>().ok())
            .filter(|v| !v.is_nan())
            .ok_or_else(|| Error::Format(format!("{}:{}: expected 'second,statistic'", path.display(), lineno + 1)))?;
        out.push(v);
    }
    Ok(out)
}

/// `# duration_s=N` in the comment lines of an event list.
fn declared_duration(text: &str) -> Option<usize> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .find_map(|l| l.trim().strip_prefix("duration_s=").and_then(|v| v.trim().parse().ok()))
}

/// Reads `<id>.<rater>.csv` as a per-second mask or as an event list. An
/// event list takes its length from `duration` or from a
/// `# duration_s=N` comment.
pub fn load_mask(path: &Path, rater: &str, duration: Option<usize>) -> Result<AnnotationMask> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m = if text.trim_start().starts_with("second") {
        read_mask_csv(path, rater)?
    } else {
        let declared = declared_duration(&text);
        if let (Some(d), Some(h)) = (duration, declared) {
            if d != h {
                return Err(Error::LengthMismatch {
                    what: "declared annotation seconds vs recording seconds",
                    left: h,
                    right: d,
                });
            }
        }
        let d = duration.or(declared).ok_or_else(|| {
            Error::InvalidInput(format!("{}: event list without a known recording length", path.display()))
        })?;
        AnnotationMask {
            rater: rater.into(),
            ..load_annotations(path, d)?
        }
    };
    if let Some(d) = duration {
        if m.duration() != d {
            return Err(Error::LengthMismatch {
                what: "annotation seconds vs recording seconds",
                left: m.duration(),
                right: d,
            });
        }
    }
    Ok(m)
}

/// Ids with a `<id>.<rater>.csv` file in `dir`, sorted.
fn ids_with(dir: &Path, rater: &str) -> Result<BTreeMap<String, PathBuf>> {
    let suffix = format!(".{rater}.csv");
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if let Some(id) = path.file_name().and_then(|n| n.to_str()).and_then(|n| n.strip_suffix(&suffix)) {
            if !id.is_empty() {
                out.insert(id.to_string(), path);
            }
        }
    }
    Ok(out)
}

fn check_ids<'a>(pred: impl Iterator<Item = &'a String> + Clone, truth: impl Iterator<Item = &'a String> + Clone) -> Result<()> {
    let only_pred: Vec<&String> = pred.clone().filter(|p| !truth.clone().any(|t| t == *p)).collect();
    let only_truth: Vec<&String> = truth.filter(|t| !pred.clone().any(|p| p == *t)).collect();
    if only_pred.is_empty() && only_truth.is_empty() {
        return Ok(());
    }
    Err(Error::InvalidInput(format!(
        "neonate ids differ: only in predictions {only_pred:?}, only in reference {only_truth:?}"
    )))
}

/// Detector masks (and traces, when present) with the reference masks of
/// every rater, aligned by neonate id.
struct Paired {
    ids: Vec<String>,
    pred: Vec<AnnotationMask>,
    traces: Vec<Option<Vec<f64>>>,
    raters: Vec<Vec<AnnotationMask>>,
}

fn load_paired(cfg: &RunConfig, rec: &mut Recorder, raters: &[String], need_truth: bool) -> Result<Paired> {
    let pred_dir = existing(&cfg.paths.pred_dir, "prediction directory (--pred or paths.pred_dir)")?;
    let pred_files = ids_with(pred_dir, &cfg.pred_rater)?;
    if pred_files.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no '*.{}.csv' masks in {}",
            cfg.pred_rater,
            pred_dir.display()
        )));
    }
    let truth_dir = if need_truth {
        Some(existing(&cfg.paths.truth_dir, "reference directory (--truth or paths.truth_dir)")?)
    } else {
        cfg.paths.truth_dir.as_deref()
    };
    let mut rater_files = Vec::new();
    if let Some(dir) = truth_dir {
        for r in raters {
            let files = ids_with(dir, r)?;
            check_ids(pred_files.keys(), files.keys()).map_err(|e| match e {
                Error::InvalidInput(m) => Error::InvalidInput(format!("rater '{r}': {m}")),
                e => e,
            })?;
            rater_files.push(files);
        }
    }
    let mut out = Paired {
        ids: Vec::new(),
        pred: Vec::new(),
        traces: Vec::new(),
        raters: vec![Vec::new(); rater_files.len()],
    };
    for (id, path) in &pred_files {
        rec.input("pred", path, Some(pred_dir))?;
        let edf = truth_dir.map(|d| d.join(format!("{id}.edf"))).filter(|p| p.exists());
        let duration = match &edf {
            Some(p) => Some(crate::signal_io::read_edf(p)?.duration_seconds()),
            None => None,
        };
        let pred = load_mask(path, &cfg.pred_rater, duration)?;
        let trace_path = pred_dir.join(format!("{id}.trace.csv"));
        let trace = if trace_path.exists() {
            rec.input("pred", &trace_path, Some(pred_dir))?;
            let t = read_trace_csv(&trace_path)?;
            if t.len() != pred.duration() {
                return Err(Error::LengthMismatch {
                    what: "trace seconds vs mask seconds",
                    left: t.len(),
                    right: pred.duration(),
                });
            }
            Some(t)
        } else {
            None
        };
        for (k, files) in rater_files.iter().enumerate() {
            let p = &files[id];
            rec.input("truth", p, truth_dir)?;
            out.raters[k].push(load_mask(p, &raters[k], Some(pred.duration()))?);
        }
        out.ids.push(id.clone());
        out.pred.push(pred);
        out.traces.push(trace);
    }
    Ok(out)
}

fn reference_of(masks: &[&AnnotationMask]) -> Result<AnnotationMask> {
    if masks.len() == 1 {
        Ok(masks[0].clone())
    } else {
        consensus(&masks.iter().map(|m| (*m).clone()).collect::<Vec<_>>())
    }
}

fn record_corpus_inputs(rec: &mut Recorder, role: &str, dir: &Path, raters: &[String]) -> Result<()> {
    for (id, path) in list_recordings(dir)? {
        rec.input(role, &path, Some(dir))?;
        for r in raters.iter().map(String::as_str).chain(["bad"]) {
            let p = dir.join(format!("{id}.{r}.csv"));
            if p.exists() {
                rec.input(role, &p, Some(dir))?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct FoldSummary {
    fold: usize,
    test_ids: Vec<String>,
    training_ids: Vec<String>,
    training_rows: usize,
    support_vectors: usize,
    bias: f64,
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let data = existing(&cfg.paths.data_dir, "training corpus (--data or paths.data_dir)")?;
    let out = out_dir(cfg)?;
    let grid = cfg.grid()?;
    let mut rec = Recorder::new("train", out, cfg.seed, cfg.manifest_view())?;
    record_corpus_inputs(&mut rec, "data", data, &cfg.raters)?;
    let subjects = load_corpus(data, &cfg.raters, &cfg.montage()?, &grid)?;
    info!("loaded {} neonates", subjects.len());
    let outcome = pipeline::train(&subjects, &grid, &cfg.train_settings())?;

    let model_path = cfg.paths.model.clone().unwrap_or_else(|| out.join("model.json"));
    rec.write_at("model", &model_path, outcome.model.to_json()?)?;
    rec.write_json("cv_report.json", &outcome.report)?;
    let mut text = render_table(&[("CV", &outcome.report)]);
    text.push_str("\nsearch (C, gamma, k, quantile, amp_max, ma_len, threshold, collar, min_dur, kappa)\n");
    for p in &outcome.search {
        let c = &p.calibration;
        let _ = writeln!(
            text,
            "{} {:.6} {} {} {} {} {} {} {} {:.4}",
            p.hyper.c,
            p.hyper.gamma,
            c.gate.k,
            c.gate.quantile,
            c.gate.amp_max,
            c.postproc.ma_len,
            c.postproc.threshold,
            c.postproc.collar,
            c.postproc.min_dur,
            c.kappa
        );
    }
    rec.write("cv_report.txt", &text)?;
    rec.write_json("search.json", &outcome.search)?;
    let folds: Vec<FoldSummary> = outcome
        .cv
        .folds
        .iter()
        .map(|f| FoldSummary {
            fold: f.fold,
            test_ids: f.test_ids.clone(),
            training_ids: f.training_origins.iter().cloned().collect(),
            training_rows: f.training_rows,
            support_vectors: f.svm.n_support(),
            bias: f.svm.bias,
        })
        .collect();
    rec.write_json("folds.json", &folds)?;
    rec.finish()?;
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct DetectionSummary {
    id: String,
    duration_s: usize,
    seizure_seconds: usize,
    events: usize,
    outlier_rows: usize,
    rows: usize,
}

pub fn detect(cfg: &RunConfig, recordings: &[PathBuf]) -> Result<()> {
    let model_path = existing(&cfg.paths.model, "model file (--model or paths.model)")?;
    let out = out_dir(cfg)?;
    let mut rec = Recorder::new("detect", out, cfg.seed, cfg.manifest_view())?;
    rec.input("model", model_path, None)?;
    let model = SdaModel::load(model_path)?;
    let montage = cfg.montage()?;
    let files: Vec<PathBuf> = if recordings.is_empty() {
        let dir = existing(&cfg.paths.data_dir, "recordings (positional EDF files or --data)")?;
        list_recordings(dir)?.into_iter().map(|(_, p)| p).collect()
    } else {
        recordings.to_vec()
    };
    for f in &files {
        rec.input("recording", f, None)?;
    }
    let detections = files
        .par_iter()
        .map(|f| detect_recording(&model, &load_recording(f)?, &montage))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = Vec::new();
    for d in &detections {
        let m = AnnotationMask {
            rater: cfg.pred_rater.clone(),
            ..d.mask.clone()
        };
        let events = m.events();
        rec.write(&format!("{}.{}.csv", d.id, cfg.pred_rater), mask_to_csv(&m))?;
        rec.write(&format!("{}.events.csv", d.id), events_to_csv(&events))?;
        rec.write(&format!("{}.trace.csv", d.id), trace_csv(&d.trace))?;
        summary.push(DetectionSummary {
            id: d.id.clone(),
            duration_s: m.duration(),
            seizure_seconds: m.true_seconds(),
            events: events.len(),
            outlier_rows: d.outliers.iter().filter(|&&o| o).count(),
            rows: d.stats.len(),
        });
    }
    rec.write_json("detections.json", &summary)?;
    rec.finish()?;
    for s in &summary {
        println!("{}: {} events, {} s", s.id, s.events, s.seizure_seconds);
    }
    Ok(())
}

/// Mann-Whitney comparison of per-neonate AUCs against an earlier cohort.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generalization {
    pub n_current: usize,
    pub n_baseline: usize,
    pub median_auc_current: Option<f64>,
    pub median_auc_baseline: Option<f64>,
    pub p_value: f64,
    /// No significant AUC difference at the 5% level.
    pub generalizes: bool,
}

pub fn generalization(current: &MetricsReport, baseline: &MetricsReport) -> Result<Generalization> {
    let a: Vec<f64> = current.neonates.iter().filter_map(|m| m.auc).collect();
    let b: Vec<f64> = baseline.neonates.iter().filter_map(|m| m.auc).collect();
    let p = mann_whitney_u(&a, &b)?;
    Ok(Generalization {
        n_current: a.len(),
        n_baseline: b.len(),
        median_auc_current: current.auc.map(|s| s.median),
        median_auc_baseline: baseline.auc.map(|s| s.median),
        p_value: p,
        generalizes: p >= 0.05,
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::NonInferior => "non-inferior",
        Verdict::Superior => "superior",
        Verdict::Inferior => "inferior",
    }
}

fn ci_text(c: &BootstrapCi) -> String {
    format!("{:.3} ({:.3} to {:.3})", c.point, c.lo, c.hi)
}

pub fn render_noninferiority(n: &NonInferiority) -> String {
    let mut s = format!(
        "{:<10} {:>8} {:>8} {:>28} {:>13}\n",
        "reference", "k(SDA)", "k(E,E)", "delta kappa (95% CI)", "verdict"
    );
    for p in &n.pairings {
        let _ = writeln!(
            s,
            "{:<10} {:>8.3} {:>8.3} {:>28} {:>13}",
            p.reference,
            p.kappa_detector,
            p.kappa_experts,
            ci_text(&p.delta),
            verdict_name(p.verdict)
        );
    }
    let _ = writeln!(s, "overall: {} ({} neonates)", verdict_name(n.verdict), n.n_neonates);
    s
}

pub fn evaluate(cfg: &RunConfig) -> Result<()> {
    let out = out_dir(cfg)?;
    let mut rec = Recorder::new("evaluate", out, cfg.seed, cfg.manifest_view())?;
    let paired = load_paired(cfg, &mut rec, &cfg.raters, true)?;
    let mut evals = Vec::new();
    for i in 0..paired.ids.len() {
        let masks: Vec<&AnnotationMask> = paired.raters.iter().map(|r| &r[i]).collect();
        let truth = reference_of(&masks)?;
        let pred = &paired.pred[i];
        let trace = paired.traces[i]
            .clone()
            .unwrap_or_else(|| pred.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect());
        evals.push(NeonateEval {
            id: paired.ids[i].clone(),
            trace,
            pred: pred.mask.clone(),
            truth: truth.mask,
        });
    }
    let report = evaluate_corpus(&evals, cfg.bootstrap_iters, cfg.seed)?;
    rec.write_json("report.json", &report)?;
    let mut text = render_table(&[("SDA", &report)]);
    if paired.raters.len() >= 2 {
        let ni = noninferiority_delta_kappa(
            &paired.pred,
            &paired.raters[0],
            &paired.raters[1],
            cfg.bootstrap_iters,
            cfg.seed,
        )?;
        rec.write_json("noninferiority.json", &ni)?;
        let t = render_noninferiority(&ni);
        rec.write("noninferiority.txt", &t)?;
        text.push('\n');
        text.push_str(&t);
    }
    if let Some(b) = &cfg.paths.baseline {
        rec.input("baseline", b, None)?;
        let s = fs::read_to_string(b).map_err(|e| Error::io(b, e))?;
        let base: MetricsReport =
            serde_json::from_str(&s).map_err(|e| Error::Format(format!("{}: not a report: {e}", b.display())))?;
        let g = generalization(&report, &base)?;
        rec.write_json("generalization.json", &g)?;
        let _ = writeln!(
            text,
            "\nAUC vs baseline: Mann-Whitney p = {:.4} ({})",
            g.p_value,
            if g.generalizes { "no significant difference" } else { "significant difference" }
        );
    }
    rec.write("report.txt", &text)?;
    rec.finish()?;
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct BurdenRow {
    id: String,
    total_min: f64,
    max_hourly_min: f64,
    class: BurdenClass,
    poi_windows: usize,
}

#[derive(Serialize)]
struct BurdenSummary {
    neonates: Vec<BurdenRow>,
    poi_agreement: Option<Agreement>,
    total_burden_agreement: Option<Agreement>,
    hourly_burden_agreement: Option<Agreement>,
    hourly_correlation: Option<BootstrapCi>,
    /// Why the correlation is missing, when it is.
    correlation_note: Option<String>,
}

pub fn burden(cfg: &RunConfig) -> Result<()> {
    let out = out_dir(cfg)?;
    let mut rec = Recorder::new("burden", out, cfg.seed, cfg.manifest_view())?;
    let paired = load_paired(cfg, &mut rec, &cfg.raters, false)?;
    let series: Vec<_> = paired.pred.iter().map(burden_series).collect();
    let windows: Vec<_> = paired.pred.iter().map(detect_poi).collect();
    let classes: Vec<BurdenClass> = series.iter().map(classify_burden).collect();
    let reference: Option<Vec<AnnotationMask>> = if paired.raters.is_empty() {
        None
    } else {
        Some(
            (0..paired.ids.len())
                .map(|i| reference_of(&paired.raters.iter().map(|r| &r[i]).collect::<Vec<_>>()))
                .collect::<Result<_>>()?,
        )
    };
    let ref_series: Option<Vec<_>> = reference.as_ref().map(|r| r.iter().map(burden_series).collect());

    let mut classes_csv = String::from("id,total_min,max_hourly_min,total_high,hourly_high\n");
    let mut rows = Vec::new();
    for (i, id) in paired.ids.iter().enumerate() {
        rec.write(&format!("{id}.burden.csv"), burden_csv(&series[i]))?;
        rec.write(&format!("{id}.poi.csv"), poi_csv(&windows[i]))?;
        let mut plot = vec![(cfg.pred_rater.as_str(), &series[i])];
        if let Some(rs) = &ref_series {
            plot.push(("reference", &rs[i]));
        }
        rec.write(&format!("{id}.plot.csv"), plot_csv(&plot))?;
        let _ = writeln!(
            classes_csv,
            "{id},{:.4},{:.4},{},{}",
            series[i].total_min,
            series[i].max_hourly_min,
            u8::from(classes[i].total_high),
            u8::from(classes[i].hourly_high)
        );
        rows.push(BurdenRow {
            id: id.clone(),
            total_min: series[i].total_min,
            max_hourly_min: series[i].max_hourly_min,
            class: classes[i],
            poi_windows: windows[i].iter().filter(|w| w.is_poi).count(),
        });
    }
    rec.write("classes.csv", &classes_csv)?;

    let mut summary = BurdenSummary {
        neonates: rows,
        poi_agreement: None,
        total_burden_agreement: None,
        hourly_burden_agreement: None,
        hourly_correlation: None,
        correlation_note: None,
    };
    let mut text = String::new();
    if let (Some(reference), Some(rs)) = (&reference, &ref_series) {
        let mut poi = crate::evaluation::ConfusionCounts::default();
        for (w, r) in windows.iter().zip(reference) {
            poi.add(&poi_agreement(w, &detect_poi(r))?.counts);
        }
        let poi = Agreement::from_counts(poi);
        let ref_classes: Vec<BurdenClass> = rs.iter().map(classify_burden).collect();
        let (total, hourly) = class_agreement(&classes, &ref_classes)?;
        text.push_str(&render_agreement("Periods of interest", "POI", "non-POI", &poi));
        text.push('\n');
        text.push_str(&render_agreement("Total burden", "high", "low", &total));
        text.push('\n');
        text.push_str(&render_agreement("Maximum hourly burden", "high", "low", &hourly));
        rec.write("agreement.txt", &text)?;
        match burden_correlation(&series, rs, cfg.bootstrap_iters, cfg.seed) {
            Ok(ci) => {
                let _ = writeln!(text, "\nhourly burden r = {}", ci_text(&ci));
                summary.hourly_correlation = Some(ci);
            }
            Err(Error::Undefined(m)) => {
                let _ = writeln!(text, "\nhourly burden r undefined: {m}");
                summary.correlation_note = Some(m);
            }
            Err(e) => return Err(e),
        }
        summary.poi_agreement = Some(poi);
        summary.total_burden_agreement = Some(total);
        summary.hourly_burden_agreement = Some(hourly);
    }
    rec.write_json("summary.json", &summary)?;
    rec.finish()?;
    for r in &summary.neonates {
        println!(
            "{}: {:.1} min total, {:.1} min/h max, {} POI windows",
            r.id, r.total_min, r.max_hourly_min, r.poi_windows
        );
    }
    print!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct SynthRecord<'a> {
    id: &'a str,
    seizures: &'a [crate::synth::SynthSeizure],
    artifacts: &'a [Event],
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let out = out_dir(cfg)?;
    let spec = cfg.synth_spec();
    let mut rec = Recorder::new("synth", out, cfg.seed, cfg.manifest_view())?;
    let corpus = generate(&spec)?;
    for p in write_corpus(out, &corpus)? {
        rec.existing(&p)?;
    }
    let records: Vec<SynthRecord> = corpus
        .iter()
        .map(|n| SynthRecord {
            id: &n.recording.id,
            seizures: &n.seizures,
            artifacts: &n.artifacts,
        })
        .collect();
    rec.write_json("synth.json", &records)?;
    rec.finish()?;
    println!("wrote {} neonates to {}", corpus.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct RetrainSummary {
    base_model_ids: Vec<String>,
    new_ids: Vec<String>,
    training_rows: usize,
    support_vectors: usize,
}

pub fn retrain(cfg: &RunConfig) -> Result<()> {
    let model_path = existing(&cfg.paths.model, "base model (--model or paths.model)")?;
    let data = existing(&cfg.paths.data_dir, "base corpus (--data or paths.data_dir)")?;
    let new = existing(&cfg.paths.new_data_dir, "new corpus (--new or paths.new_data_dir)")?;
    let out = out_dir(cfg)?;
    let mut rec = Recorder::new("retrain", out, cfg.seed, cfg.manifest_view())?;
    rec.input("model", model_path, None)?;
    record_corpus_inputs(&mut rec, "data", data, &cfg.raters)?;
    record_corpus_inputs(&mut rec, "new", new, &cfg.raters)?;
    let base_model = SdaModel::load(model_path)?;
    let montage = cfg.montage()?;
    let base = load_corpus(data, &cfg.raters, &montage, &base_model.grid)?;
    let added = load_corpus(new, &cfg.raters, &montage, &base_model.grid)?;
    let model = pipeline::retrain(&base, &added, &base_model, &cfg.train_config())?;
    rec.write("model.json", model.to_json()?)?;
    let summary = RetrainSummary {
        base_model_ids: base_model.training_ids.clone(),
        new_ids: added.iter().map(|s| s.id.clone()).collect(),
        training_rows: model.training_rows,
        support_vectors: model.svm.n_support(),
    };
    rec.write_json("retrain.json", &summary)?;
    rec.finish()?;
    println!(
        "retrained on {} rows, {} support vectors",
        summary.training_rows, summary.support_vectors
    );
    Ok(())
}
