//! Generate a small annotated corpus and write it to a directory.
//!
//!     cargo run --example synth_corpus [out_dir]

use neoseiz::evaluation::cohen_kappa;
use neoseiz::synth::{generate, write_corpus, SynthSpec};

fn main() -> neoseiz::Result<()> {
    let dir = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("neoseiz_corpus"));
    let spec = SynthSpec {
        n_neonates: 4,
        duration_s: 1800.0,
        artifact_rate_per_h: 2.0,
        ..Default::default()
    };
    let corpus = generate(&spec)?;
    for n in &corpus {
        let k = cohen_kappa(&n.experts[0], &n.experts[1])?;
        println!(
            "{}: {} seizures ({} s), {} artifacts, expert kappa {k:.3}",
            n.recording.id,
            n.seizures.len(),
            n.truth.true_seconds(),
            n.artifacts.len()
        );
    }
    let files = write_corpus(&dir, &corpus)?;
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}
