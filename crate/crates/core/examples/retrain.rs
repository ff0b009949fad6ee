//! Adapt a detector to a new seizure morphology with a few new neonates.

use neoseiz::evaluation::evaluate;
use neoseiz::model::{SearchGrid, Subject};
use neoseiz::outlier_gate::CalibrationGrid;
use neoseiz::pipeline::{detect_subjects, prepare, retrain, train, TrainSettings};
use neoseiz::preprocess::EpochGrid;
use neoseiz::signal_io::{consensus, Montage};
use neoseiz::synth::{generate, SynthNeonate, SynthSpec};

fn subjects(spec: &SynthSpec, truth: fn(&SynthNeonate) -> neoseiz::signal_io::AnnotationMask) -> neoseiz::Result<Vec<Subject>> {
    generate(spec)?
        .into_iter()
        .map(|n| prepare(&n.recording, &Montage::monitoring(), &EpochGrid::default())?.into_subject(truth(&n)))
        .collect()
}

fn main() -> neoseiz::Result<()> {
    let base = SynthSpec { n_neonates: 6, duration_s: 1800.0, seizure_rate_per_h: 6.0, ..Default::default() };
    let shifted = |n, seed: u64| SynthSpec {
        n_neonates: n,
        chirp_hz: (6.0, 4.0),
        seizure_amp_uv: (40.0, 90.0),
        seed,
        id_prefix: format!("s{seed}_"),
        ..base.clone()
    };
    let expert = |n: &SynthNeonate| consensus(&n.experts).expect("two experts");
    let original = subjects(&base, expert)?;
    let new = subjects(&shifted(3, 2), expert)?;
    let held_out = subjects(&shifted(4, 3), |n| n.truth.clone())?;

    let settings = TrainSettings {
        n_folds: 3,
        search: SearchGrid { c: vec![10.0], gamma_scale: vec![0.1] },
        calibration: CalibrationGrid { k: vec![3], collar: vec![0], ..Default::default() },
        bootstrap_iters: 200,
        ..Default::default()
    };
    let out = train(&original, &EpochGrid::default(), &settings)?;
    let adapted = retrain(&original, &new, &out.model, &settings.train)?;

    for (name, model) in [("original", &out.model), ("retrained", &adapted)] {
        let r = evaluate(&detect_subjects(model, &held_out)?, 200, 1)?;
        println!("{name:<10} on shifted morphology: kappa {:.3}, AUC {:.3}", r.c_kappa.value.unwrap_or(f64::NAN), r.c_auc.value.unwrap_or(f64::NAN));
    }
    println!("training rows: {} -> {}", out.model.training_rows, adapted.training_rows);
    Ok(())
}
