//! Per-neonate and concatenated metrics with bootstrap intervals.
//!
//! The detector here is simulated: the truth mask blurred in time plus a
//! few false alarms, and a noisy statistic for the AUC.

use neoseiz::evaluation::{evaluate, report::render_table, NeonateEval};
use neoseiz::synth::{generate, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> neoseiz::Result<()> {
    let spec = SynthSpec { n_neonates: 8, duration_s: 3600.0, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let evals: Vec<NeonateEval> = generate(&spec)?
        .into_iter()
        .map(|n| {
            let truth = n.truth.mask;
            let trace: Vec<f64> = truth.iter().map(|&t| if t { 1.0 } else { -1.0 } + rng.gen_range(-1.2..1.2)).collect();
            let mut pred: Vec<bool> = trace.iter().map(|&v| v > 0.5).collect();
            // sparse spurious seconds
            for _ in 0..3 {
                let s = rng.gen_range(0..pred.len() - 30);
                pred[s..s + 30].iter_mut().for_each(|p| *p = true);
            }
            NeonateEval { id: n.recording.id, trace, pred, truth }
        })
        .collect();
    let report = evaluate(&evals, 1000, 1)?;
    print!("{}", render_table(&[("simulated", &report)]));
    for m in &report.neonates {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
        println!("{} AUC {:>5} kappa {:>5} FD/h {:.2}", m.id, f(m.auc), f(m.kappa), m.fd_per_h);
    }
    Ok(())
}
