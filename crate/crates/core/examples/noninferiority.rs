//! Delta-kappa non-inferiority of a detector against two experts.
//!
//! The synthetic experts disagree a little with each other. A detector
//! that copies one of them is non-inferior; a noisy one is not.

use neoseiz::evaluation::bootstrap::noninferiority_delta_kappa;
use neoseiz::signal_io::AnnotationMask;
use neoseiz::synth::{generate, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> neoseiz::Result<()> {
    let spec = SynthSpec { n_neonates: 10, duration_s: 1800.0, ..Default::default() };
    let corpus = generate(&spec)?;
    let e1: Vec<AnnotationMask> = corpus.iter().map(|n| n.experts[0].clone()).collect();
    let e2: Vec<AnnotationMask> = corpus.iter().map(|n| n.experts[1].clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noisy: Vec<AnnotationMask> = e1
        .iter()
        .map(|m| AnnotationMask::new("sda", m.mask.iter().map(|&b| b ^ rng.gen_bool(0.1)).collect()))
        .collect();

    for (name, sda) in [("copy of E1", &e1), ("E1 with 10% flips", &noisy)] {
        let ni = noninferiority_delta_kappa(sda, &e1, &e2, 1000, 7)?;
        println!("{name}: {:?}", ni.verdict);
        for p in &ni.pairings {
            println!(
                "  vs {}: kappa {:.3} (experts {:.3}), delta {:.3} [{:.3}, {:.3}]",
                p.reference, p.kappa_detector, p.kappa_experts, p.delta.point, p.delta.lo, p.delta.hi
            );
        }
    }
    Ok(())
}
