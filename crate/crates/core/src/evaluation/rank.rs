//! Two-sided rank tests with the normal approximation.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Smallest number of nonzero paired differences accepted.
pub const MIN_SIGNED_RANK_N: usize = 5;

/// Midranks (1-based) and the tie term `sum(t^3 - t)`.
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

fn two_sided(excess: f64, var: f64) -> f64 {
    if !(var > 0.0) {
        return 1.0;
    }
    // continuity-corrected
    let z = ((excess.abs() - 0.5).max(0.0)) / var.sqrt();
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * (1.0 - n.cdf(z))).min(1.0)
}

/// Wilcoxon signed-rank test on paired samples. Zero differences are
/// dropped; if all are zero the p-value is 1.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "paired samples",
            left: x.len(),
            right: y.len(),
        });
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    if d.is_empty() {
        return Ok(1.0);
    }
    if d.len() < MIN_SIGNED_RANK_N {
        return Err(Error::Undefined(format!(
            "signed-rank test needs at least {MIN_SIGNED_RANK_N} nonzero differences, got {}",
            d.len()
        )));
    }
    let n = d.len() as f64;
    let (ranks, ties) = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let w_plus: f64 = ranks.iter().zip(&d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ties / 48.0;
    Ok(two_sided(w_plus - mean, var))
}

/// Mann-Whitney U test on two independent samples.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("Mann-Whitney test needs two nonempty samples".into()));
    }
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let all: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&all);
    let r1: f64 = ranks[..x.len()].iter().sum();
    let u = r1 - n1 * (n1 + 1.0) / 2.0;
    let n = n1 + n2;
    let var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    Ok(two_sided(u - n1 * n2 / 2.0, var))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Oracle: exact two-sided p by enumerating all sign patterns.
    fn exact_signed_rank(d: &[f64]) -> f64 {
        let (ranks, _) = midranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
        let n = d.len();
        let mean = ranks.iter().sum::<f64>() / 2.0;
        let obs: f64 = ranks.iter().zip(d).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
        let mut extreme = 0usize;
        for mask in 0u32..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            if (w - mean).abs() >= (obs - mean).abs() - 1e-9 {
                extreme += 1;
            }
        }
        extreme as f64 / (1u64 << n) as f64
    }

    /// Oracle: exact two-sided p by enumerating all group assignments.
    fn exact_mann_whitney(x: &[f64], y: &[f64]) -> f64 {
        let all: Vec<f64> = x.iter().chain(y).copied().collect();
        let (ranks, _) = midranks(&all);
        let (n, n1) = (all.len(), x.len());
        let mean = n1 as f64 * (n + 1) as f64 / 2.0;
        let obs: f64 = ranks[..n1].iter().sum();
        let (mut extreme, mut total) = (0usize, 0usize);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            total += 1;
            let r: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
            if (r - mean).abs() >= (obs - mean).abs() - 1e-9 {
                extreme += 1;
            }
        }
        extreme as f64 / total as f64
    }

    #[test]
    fn signed_rank_examples() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(wilcoxon_signed_rank(&x, &x).unwrap(), 1.0);
        let d = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let p = wilcoxon_signed_rank(&d, &[0.0; 6]).unwrap();
        assert!((exact_signed_rank(&d) - 0.03125).abs() < 1e-12);
        assert!((p - 0.03125).abs() < 0.02, "{p}");
        let d = [-1.0, 1.0, -2.0, 2.0, -3.0, 3.0];
        assert!(wilcoxon_signed_rank(&d, &[0.0; 6]).unwrap() > 0.9);
        assert!(matches!(wilcoxon_signed_rank(&[1.0, 2.0], &[0.0, 0.0]), Err(Error::Undefined(_))));
    }

    #[test]
    fn signed_rank_tracks_exact() {
        let sets: [&[f64]; 4] = [
            &[0.5, -1.2, 2.2, 3.1, 0.7, 1.9, -0.4],
            &[1.0, 1.0, 2.0, -2.0, 3.0, 4.0, 5.0, 5.0],
            &[-3.0, 1.5, 2.5, 4.5, 6.0],
            &[2.0, -1.0, 3.0, 4.0, -5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        ];
        for d in sets {
            let p = wilcoxon_signed_rank(d, &vec![0.0; d.len()]).unwrap();
            assert!((p - exact_signed_rank(d)).abs() < 0.05, "{d:?}: {p} vs {}", exact_signed_rank(d));
        }
    }

    #[test]
    fn mann_whitney_examples() {
        let x = [1.0, 2.0, 3.0];
        let y = [10.0, 11.0, 12.0];
        assert!((exact_mann_whitney(&x, &y) - 0.1).abs() < 1e-12);
        let p = mann_whitney_u(&x, &y).unwrap();
        assert!((p - 0.1).abs() < 0.05, "{p}");
        assert_eq!(p, mann_whitney_u(&y, &x).unwrap());
        assert!(mann_whitney_u(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap() > 0.95);
        assert!(mann_whitney_u(&[], &y).is_err());
        assert_eq!(mann_whitney_u(&[1.0, 1.0], &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn mann_whitney_tracks_exact() {
        for (n1, n2) in [(3, 4), (4, 4), (5, 5), (4, 6)] {
            let x: Vec<f64> = (0..n1).map(|i| (i * 7 % 5) as f64 + 0.3 * i as f64).collect();
            let y: Vec<f64> = (0..n2).map(|i| (i * 3 % 4) as f64 + 1.1).collect();
            let p = mann_whitney_u(&x, &y).unwrap();
            let e = exact_mann_whitney(&x, &y);
            assert!((p - e).abs() < 0.05, "{n1},{n2}: {p} vs {e}");
        }
    }
}
