//! Bipolar montage, band-pass filtering, resampling and epoching.

use neoseiz::preprocess::{epoch, preprocess, EpochGrid, FEATURE_FS};
use neoseiz::signal_io::{apply_montage, Montage};
use neoseiz::synth::{generate_one, SynthSpec};

fn main() -> neoseiz::Result<()> {
    let spec = SynthSpec { duration_s: 600.0, ..Default::default() };
    let rec = generate_one(&spec, 0)?.recording;

    let montage = Montage::parse(&["F3-P3", "F4-P4", "P3-P4"])?;
    let bipolar = apply_montage(&rec, &montage)?;
    let pre = preprocess(&bipolar)?;
    println!("{} electrodes at {} Hz -> {} derivations at {} Hz", rec.channels.len(), rec.fs, pre.channels.len(), pre.fs);
    assert_eq!(pre.fs, FEATURE_FS);

    for hop in [4.0, 8.0, 16.0] {
        let grid = EpochGrid::new(hop)?;
        let ep = epoch(&pre, &grid)?;
        println!("hop {hop:>4} s: {} epochs of {} samples per channel", ep.n_epochs, grid.epoch_samples());
    }
    Ok(())
}
