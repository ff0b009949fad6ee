//! Train on synthetic neonates, then detect on unseen ones.
//!
//! Uses a reduced search so it finishes in well under a minute in release
//! mode; `TrainSettings::default()` runs the full grid.

use neoseiz::evaluation::{evaluate, report::render_table};
use neoseiz::model::{SearchGrid, Subject};
use neoseiz::outlier_gate::CalibrationGrid;
use neoseiz::pipeline::{detect_subjects, prepare, train, TrainSettings};
use neoseiz::preprocess::EpochGrid;
use neoseiz::signal_io::{consensus, Montage};
use neoseiz::synth::{generate, SynthSpec};

fn main() -> neoseiz::Result<()> {
    let spec = SynthSpec {
        n_neonates: 8,
        duration_s: 1800.0,
        seizure_rate_per_h: 6.0,
        artifact_rate_per_h: 2.0,
        ..Default::default()
    };
    let grid = EpochGrid::default();
    let montage = Montage::monitoring();
    let subjects = generate(&spec)?
        .into_iter()
        .map(|n| prepare(&n.recording, &montage, &grid)?.into_subject(consensus(&n.experts)?))
        .collect::<neoseiz::Result<Vec<Subject>>>()?;
    let (train_set, test_set) = subjects.split_at(5);

    let settings = TrainSettings {
        n_folds: 5,
        search: SearchGrid { c: vec![1.0, 10.0], gamma_scale: vec![0.1] },
        calibration: CalibrationGrid {
            k: vec![3],
            threshold: vec![-0.5, 0.0, 0.5, 1.0],
            collar: vec![0, 8],
            ..Default::default()
        },
        bootstrap_iters: 200,
        ..Default::default()
    };
    let out = train(train_set, &grid, &settings)?;
    println!("chosen {:?}\n       {:?}", out.model.hyper, out.model.postproc);

    let evals = detect_subjects(&out.model, test_set)?;
    let held_out = evaluate(&evals, 500, 1)?;
    print!("{}", render_table(&[("CV", &out.report), ("held-out", &held_out)]));
    Ok(())
}
