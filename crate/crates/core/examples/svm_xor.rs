//! Train the SMO solver on the XOR layout and print the decision surface.

use neoseiz::model::{Svm, SvmParams};

fn main() -> neoseiz::Result<()> {
    let x = [[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
    let labels = [true, true, false, false];
    let rows: Vec<&[f64]> = x.iter().map(|r| r.as_slice()).collect();
    let (svm, report) = Svm::train(&rows, &labels, &SvmParams::rbf(100.0, 1.0))?;
    println!(
        "{} support vectors, bias {:.2e}, {} iterations, KKT gap {:.1e}",
        svm.n_support(),
        svm.bias,
        report.iterations,
        report.kkt_violation
    );
    println!("alpha {:?}", report.alpha);
    for j in (0..=4).rev() {
        let line: String = (0..=4)
            .map(|i| {
                let f = svm.decision(&[i as f64 / 4.0, j as f64 / 4.0]);
                if f > 0.0 { '+' } else { '-' }
            })
            .collect();
        println!("  {line}");
    }
    Ok(())
}
