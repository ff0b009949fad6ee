//! Fit the kNN/amplitude gate on a reference cloud and probe it.

use neoseiz::features::{Features, N_FEATURES};
use neoseiz::outlier_gate::{gate_rows, OutlierParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> neoseiz::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut point = |scale: f64| -> Features {
        let mut r = [0.0; N_FEATURES];
        r.iter_mut().for_each(|v| *v = rng.gen_range(-scale..scale));
        r
    };
    let reference: Vec<Features> = (0..500).map(|_| point(1.0)).collect();
    let gate = OutlierParams::fit(reference, 5, 0.99, 250.0)?;
    println!("k {} d_max {:.3} amp_max {} uV", gate.k, gate.d_max, gate.amp_max);

    for (name, scale, amp) in [("typical", 1.0, 60.0), ("drifted", 2.0, 60.0), ("far", 6.0, 60.0), ("loud", 1.0, 900.0)] {
        let rows: Vec<Features> = (0..200).map(|_| point(scale)).collect();
        let flagged = gate_rows(&rows, &vec![amp; rows.len()], &gate)?.iter().filter(|&&g| g).count();
        println!("{name:<8} {flagged:>3}/200 gated");
    }
    Ok(())
}
