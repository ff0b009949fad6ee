//! Paired and unpaired rank tests on per-neonate AUCs.

use neoseiz::evaluation::rank::{mann_whitney_u, wilcoxon_signed_rank};

fn main() -> neoseiz::Result<()> {
    let before = [0.91, 0.88, 0.95, 0.79, 0.97, 0.85, 0.90, 0.93];
    let after = [0.94, 0.90, 0.96, 0.86, 0.97, 0.89, 0.93, 0.92];
    println!("Wilcoxon signed-rank p = {:.4}", wilcoxon_signed_rank(&after, &before)?);

    let cohort_a = [0.96, 0.93, 0.97, 0.91, 0.99, 0.95];
    let cohort_b = [0.94, 0.97, 0.90, 0.96, 0.98, 0.92, 0.95];
    let p = mann_whitney_u(&cohort_a, &cohort_b)?;
    println!("Mann-Whitney p = {p:.4} ({})", if p >= 0.05 { "no significant difference" } else { "differs" });
    Ok(())
}
