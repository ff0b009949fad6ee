//! The 22 epoch features for a seizure epoch and a background epoch.

use neoseiz::features::{FeatureExtractor, FEATURE_NAMES};
use neoseiz::preprocess::{epoch, preprocess, EpochGrid};
use neoseiz::signal_io::{apply_montage, Montage};
use neoseiz::synth::{generate_one, SynthSpec};

fn main() -> neoseiz::Result<()> {
    let spec = SynthSpec {
        duration_s: 1800.0,
        seizure_rate_per_h: 6.0,
        ..Default::default()
    };
    let n = generate_one(&spec, 1)?;
    let sz = n.seizures.first().expect("spec produces seizures");
    let pre = preprocess(&apply_montage(&n.recording, &Montage::monitoring())?)?;
    let grid = EpochGrid::default();
    let ep = epoch(&pre, &grid)?;

    // first epoch fully inside the seizure, and one well before it
    let inside = (0..ep.n_epochs)
        .find(|&i| grid.epoch_span(i).0 as f64 >= sz.onset_s)
        .expect("seizure starts inside the recording");
    let outside = (0..ep.n_epochs).find(|&i| (grid.epoch_span(i).1 as f64) < sz.onset_s - 60.0).unwrap_or(0);
    // a derivation touching the seizure focus
    let ch = pre.channels.iter().position(|c| c.label.contains(sz.focus.as_str())).unwrap_or(0);
    let fx = FeatureExtractor::for_grid(&grid);
    let a = fx.extract(ep.segment(ch, inside))?;
    let b = fx.extract(ep.segment(ch, outside))?;

    println!("{} epochs {inside} vs {outside}", pre.channels[ch].label);
    println!("{:<24} {:>12} {:>12}", "feature", "seizure", "background");
    for (k, name) in FEATURE_NAMES.iter().enumerate() {
        println!("{name:<24} {:>12.4} {:>12.4}", a.values[k], b.values[k]);
    }
    println!("{:<24} {:>12.1} {:>12.1}", "max |x| (uV)", a.max_amp, b.max_amp);
    Ok(())
}
