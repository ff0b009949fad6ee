//! Write a synthetic recording to EDF and read it back.
//!
//!     cargo run --example edf_roundtrip [file.edf]
//!
//! With a path, the given file is read instead.

use neoseiz::signal_io::{read_edf, write_edf};
use neoseiz::synth::{generate_one, SynthSpec};

fn main() -> neoseiz::Result<()> {
    let rec = match std::env::args().nth(1) {
        Some(path) => read_edf(path)?,
        None => {
            let spec = SynthSpec { duration_s: 600.0, ..Default::default() };
            let original = generate_one(&spec, 0)?.recording;
            let path = std::env::temp_dir().join("neoseiz_roundtrip.edf");
            write_edf(&path, &original)?;
            let back = read_edf(&path)?;
            let worst = original
                .channels
                .iter()
                .zip(&back.channels)
                .flat_map(|(a, b)| a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            println!("round trip through {}: max error {worst:.4} uV", path.display());
            back
        }
    };
    println!("id {} fs {} Hz, {} s, start {}", rec.id, rec.fs, rec.duration_s(), rec.start_time);
    for ch in &rec.channels {
        let rms = (ch.samples.iter().map(|v| v * v).sum::<f64>() / ch.samples.len() as f64).sqrt();
        println!("  {:<6} {:>8} samples  rms {rms:7.2} uV", ch.label, ch.samples.len());
    }
    Ok(())
}
