//! From per-epoch SVM margins to a binary mask and event list.

use neoseiz::postprocess::{continuous_trace, extract_events, postprocess, PostprocParams};
use neoseiz::preprocess::EpochGrid;

fn main() -> neoseiz::Result<()> {
    let grid = EpochGrid::default();
    let (n_ch, n_ep) = (2, 90);
    // channel 0 has a seizure-like run, channel 1 a single spurious spike
    let mut stats = vec![-1.0; n_ch * n_ep];
    stats[30..50].iter_mut().for_each(|v| *v = 1.5);
    stats[n_ep + 70] = 3.0;
    let mut outliers = vec![false; stats.len()];
    outliers[n_ep + 70] = true;
    let bad = vec![false; stats.len()];
    let duration = grid.epoch_span(n_ep - 1).1;

    let p = PostprocParams { ma_len: 3, threshold: 0.0, collar: 8, min_dur: 10 };
    let trace = continuous_trace(&stats, &outliers, n_ch, p.ma_len, &grid, duration)?;
    let mask = postprocess(&stats, &outliers, &bad, n_ch, &p, &grid, duration)?;
    println!("{} s, {} s detected", duration, mask.true_seconds());
    for e in extract_events(&mask.mask) {
        println!("  event {:>4}-{:<4} s  peak trace {:.2}", e.onset, e.offset, trace[e.onset..e.offset].iter().cloned().fold(f64::MIN, f64::max));
    }

    let ungated = postprocess(&stats, &bad, &bad, n_ch, &p, &grid, duration)?;
    println!("without the gate: {} events", ungated.events().len());
    Ok(())
}
