//! Neonate-level bootstrap confidence intervals and the kappa
//! non-inferiority test.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{confusion, kappa_from_counts, percentile, ConfusionCounts};
use crate::error::{Error, Result};
use crate::signal_io::AnnotationMask;

pub const DEFAULT_ITERS: usize = 1000;
/// Undefined resamples tolerated per iteration before giving up.
pub const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub iters: usize,
    /// Resamples discarded because the statistic was undefined on them.
    pub redraws: usize,
}

impl BootstrapCi {
    pub fn spans_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }
}

/// Multiplicity of each unit in one resample with replacement.
fn draw(n: usize, rng: &mut ChaCha8Rng, out: &mut [u32]) {
    out.iter_mut().for_each(|w| *w = 0);
    for _ in 0..n {
        out[rng.gen_range(0..n)] += 1;
    }
}

/// Joint bootstrap of several statistics over the same resamples.
///
/// `statistic` receives per-unit multiplicities and returns `None` when it
/// is undefined for that resample, in which case the resample is redrawn.
/// Iteration `b` uses its own stream of the seeded generator, so results do
/// not depend on thread scheduling.
pub fn bootstrap_many<F>(n_units: usize, iters: usize, seed: u64, statistic: F) -> Result<Vec<BootstrapCi>>
where
    F: Fn(&[u32]) -> Option<Vec<f64>> + Sync,
{
    if n_units == 0 {
        return Err(Error::InvalidInput("bootstrap over zero neonates".into()));
    }
    if iters == 0 {
        return Err(Error::Config("bootstrap needs at least one iteration".into()));
    }
    let point = statistic(&vec![1; n_units])
        .ok_or_else(|| Error::Undefined("statistic undefined on the full corpus".into()))?;
    let draws: Vec<(Vec<f64>, usize)> = (0..iters)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut w = vec![0u32; n_units];
            for redraws in 0..=MAX_REDRAWS {
                draw(n_units, &mut rng, &mut w);
                if let Some(v) = statistic(&w) {
                    return Ok((v, redraws));
                }
            }
            Err(Error::Undefined(format!(
                "statistic undefined on {MAX_REDRAWS} consecutive resamples"
            )))
        })
        .collect::<Result<_>>()?;
    let redraws: usize = draws.iter().map(|d| d.1).sum();
    if redraws > 0 {
        debug!("bootstrap redrew {redraws} undefined resamples");
    }
    Ok((0..point.len())
        .map(|k| {
            let mut v: Vec<f64> = draws.iter().map(|d| d.0[k]).collect();
            v.sort_by(f64::total_cmp);
            BootstrapCi {
                point: point[k],
                lo: percentile(&v, 0.025),
                hi: percentile(&v, 0.975),
                iters,
                redraws,
            }
        })
        .collect())
}

/// Percentile 95% interval of a statistic over neonate resamples.
pub fn bootstrap_ci<F>(n_units: usize, iters: usize, seed: u64, statistic: F) -> Result<BootstrapCi>
where
    F: Fn(&[u32]) -> Option<f64> + Sync,
{
    Ok(bootstrap_many(n_units, iters, seed, |w| statistic(w).map(|v| vec![v]))?.remove(0))
}

/// Kappa of the multiplicity-weighted sum of per-neonate tables.
pub fn weighted_kappa(counts: &[ConfusionCounts], w: &[u32]) -> Option<f64> {
    let mut s = [0.0; 4];
    for (c, &wi) in counts.iter().zip(w) {
        if wi > 0 {
            for (a, b) in s.iter_mut().zip(c.weighted(wi as f64)) {
                *a += b;
            }
        }
    }
    kappa_from_counts(s[0], s[1], s[2], s[3])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The interval spans zero.
    NonInferior,
    /// The whole interval lies below zero: the detector agrees with the
    /// expert better than the other expert does.
    Superior,
    /// The whole interval lies above zero.
    Inferior,
}

impl Verdict {
    pub fn from_ci(ci: &BootstrapCi) -> Self {
        if ci.lo > 0.0 {
            Verdict::Inferior
        } else if ci.hi < 0.0 {
            Verdict::Superior
        } else {
            Verdict::NonInferior
        }
    }

    pub fn is_noninferior(&self) -> bool {
        *self != Verdict::Inferior
    }
}

/// `kappa(E1, E2) - kappa(detector, reference expert)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub reference: String,
    pub kappa_detector: f64,
    pub kappa_experts: f64,
    pub delta: BootstrapCi,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonInferiority {
    pub n_neonates: usize,
    pub pairings: Vec<Pairing>,
    /// Worst verdict over the pairings.
    pub verdict: Verdict,
}

fn pair_counts(a: &[AnnotationMask], b: &[AnnotationMask]) -> Result<Vec<ConfusionCounts>> {
    a.iter().zip(b).map(|(x, y)| confusion(x, y)).collect()
}

/// Bootstraps the kappa gap between the two experts and the detector
/// against each expert in turn, on concatenated neonates.
pub fn noninferiority_delta_kappa(
    sda: &[AnnotationMask],
    e1: &[AnnotationMask],
    e2: &[AnnotationMask],
    iters: usize,
    seed: u64,
) -> Result<NonInferiority> {
    let n = sda.len();
    if e1.len() != n || e2.len() != n {
        return Err(Error::InvalidInput(format!(
            "raters cover different neonates: detector {n}, E1 {}, E2 {}",
            e1.len(),
            e2.len()
        )));
    }
    let hh = pair_counts(e1, e2)?;
    let s1 = pair_counts(sda, e1)?;
    let s2 = pair_counts(sda, e2)?;
    let cis = bootstrap_many(n, iters, seed, |w| {
        let k = weighted_kappa(&hh, w)?;
        Some(vec![k - weighted_kappa(&s1, w)?, k - weighted_kappa(&s2, w)?])
    })?;
    let ones = vec![1; n];
    let k_hh = weighted_kappa(&hh, &ones).expect("nonempty");
    let pairings: Vec<Pairing> = [("E1", &s1), ("E2", &s2)]
        .into_iter()
        .zip(cis)
        .map(|((name, counts), ci)| Pairing {
            reference: name.to_string(),
            kappa_detector: weighted_kappa(counts, &ones).expect("nonempty"),
            kappa_experts: k_hh,
            delta: ci,
            verdict: Verdict::from_ci(&ci),
        })
        .collect();
    let verdict = if pairings.iter().any(|p| p.verdict == Verdict::Inferior) {
        Verdict::Inferior
    } else if pairings.iter().all(|p| p.verdict == Verdict::Superior) {
        Verdict::Superior
    } else {
        Verdict::NonInferior
    };
    Ok(NonInferiority {
        n_neonates: n,
        pairings,
        verdict,
    })
}
