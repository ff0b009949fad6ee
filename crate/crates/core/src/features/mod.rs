//! The 22-feature epoch summary plus the maximum-amplitude auxiliary value.
//!
//! Column order is fixed and tagged with [`FEATURE_VERSION`]; models refuse
//! feature matrices carrying a different tag.
//!
//! | #  | name | definition |
//! |----|------|------------|
//! | 1  | `rms` | `sqrt(mean(x^2))` |
//! | 2  | `peak_to_peak` | `max(x) - min(x)` |
//! | 3  | `line_length` | `sum |x[n+1] - x[n]|` |
//! | 4  | `zero_crossings` | sign changes, sign taken as `x >= 0` |
//! | 5  | `local_extrema` | `n` with `(x[n]-x[n-1])(x[n+1]-x[n]) < 0` |
//! | 6  | `skewness` | `m3 / m2^1.5` (central moments) |
//! | 7  | `kurtosis` | `m4 / m2^2` |
//! | 8  | `sneo_mean` | mean of the 120 ms smoothed `x[n]^2 - x[n-1]x[n+1]` |
//! | 9  | `sneo_var` | variance of the same sequence |
//! | 10 | `hjorth_activity` | `var(x)` |
//! | 11 | `hjorth_mobility` | `sqrt(var(dx) / var(x))` |
//! | 12 | `hjorth_complexity` | `mobility(dx) / mobility(x)` |
//! | 13 | `acf_first_zero_s` | lag (s) where the autocorrelation first reaches <= 0 |
//! | 14 | `acf_crossings_0_5s` | autocorrelation sign changes within 0.5 s of lag |
//! | 15 | `band_power` | Welch power in 0.5-16 Hz |
//! | 16 | `peak_frequency` | frequency of the in-band PSD maximum |
//! | 17 | `sef90` | 90% spectral edge frequency (in band) |
//! | 18 | `sef95` | 95% spectral edge frequency |
//! | 19 | `rel_delta` | power share of 0.5-4 Hz |
//! | 20 | `rel_theta` | power share of 4-8 Hz |
//! | 21 | `rel_alpha` | power share of 8-13 Hz |
//! | 22 | `spectral_entropy` | Shannon entropy of the in-band PSD, normalized to [0, 1] |
//!
//! Degenerate inputs (constant epochs, empty spectra) map to 0 instead of NaN.

pub mod spectral;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{epoch, EpochGrid};
use crate::signal_io::Recording;
pub use spectral::SpectralPlan;

pub const N_FEATURES: usize = 22;
pub const FEATURE_VERSION: &str = "neoseiz-fs22-v1";

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "rms",
    "peak_to_peak",
    "line_length",
    "zero_crossings",
    "local_extrema",
    "skewness",
    "kurtosis",
    "sneo_mean",
    "sneo_var",
    "hjorth_activity",
    "hjorth_mobility",
    "hjorth_complexity",
    "acf_first_zero_s",
    "acf_crossings_0_5s",
    "band_power",
    "peak_frequency",
    "sef90",
    "sef95",
    "rel_delta",
    "rel_theta",
    "rel_alpha",
    "spectral_entropy",
];

/// Column indices, for readability at call sites.
pub mod col {
    pub const RMS: usize = 0;
    pub const PEAK_TO_PEAK: usize = 1;
    pub const LINE_LENGTH: usize = 2;
    pub const ZERO_CROSSINGS: usize = 3;
    pub const LOCAL_EXTREMA: usize = 4;
    pub const SKEWNESS: usize = 5;
    pub const KURTOSIS: usize = 6;
    pub const SNEO_MEAN: usize = 7;
    pub const SNEO_VAR: usize = 8;
    pub const HJORTH_ACTIVITY: usize = 9;
    pub const HJORTH_MOBILITY: usize = 10;
    pub const HJORTH_COMPLEXITY: usize = 11;
    pub const ACF_FIRST_ZERO: usize = 12;
    pub const ACF_CROSSINGS: usize = 13;
    pub const BAND_POWER: usize = 14;
    pub const PEAK_FREQUENCY: usize = 15;
    pub const SEF90: usize = 16;
    pub const SEF95: usize = 17;
    pub const REL_DELTA: usize = 18;
    pub const REL_THETA: usize = 19;
    pub const REL_ALPHA: usize = 20;
    pub const SPECTRAL_ENTROPY: usize = 21;
}

/// Band edges for the relative powers; the last band closes the 16 Hz edge.
pub const BANDS: [(f64, f64); 4] = [(0.5, 4.0), (4.0, 8.0), (8.0, 13.0), (13.0, 16.0)];

/// SNEO smoothing window.
pub const SNEO_WINDOW_S: f64 = 0.120;

pub type Features = [f64; N_FEATURES];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Features,
    /// Largest absolute sample in the epoch (uV, never normalized).
    pub max_amp: f64,
}

/// Teager-Kaiser energy smoothed with a rectangular window, returned as
/// the smoothed sequence (valid part of the convolution).
pub fn sneo_sequence(x: &[f64], fs: f64) -> Result<Vec<f64>> {
    if x.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "SNEO needs at least 3 samples, got {}",
            x.len()
        )));
    }
    let psi: Vec<f64> = x.windows(3).map(|w| w[1] * w[1] - w[0] * w[2]).collect();
    let win = ((SNEO_WINDOW_S * fs).round() as usize).clamp(1, psi.len());
    let mut out = Vec::with_capacity(psi.len() - win + 1);
    let mut acc: f64 = psi[..win].iter().sum();
    out.push(acc / win as f64);
    for i in win..psi.len() {
        acc += psi[i] - psi[i - win];
        out.push(acc / win as f64);
    }
    Ok(out)
}

/// Mean smoothed nonlinear energy of an epoch.
pub fn sneo(x: &[f64], fs: f64) -> Result<f64> {
    let s = sneo_sequence(x, fs)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn ratio_sqrt(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Computes feature vectors for epochs of one fixed length.
pub struct FeatureExtractor {
    plan: SpectralPlan,
    epoch_samples: usize,
}

impl FeatureExtractor {
    pub fn new(fs: f64, epoch_samples: usize) -> Self {
        FeatureExtractor {
            plan: SpectralPlan::new(fs, epoch_samples),
            epoch_samples,
        }
    }

    pub fn for_grid(grid: &EpochGrid) -> Self {
        Self::new(grid.fs_feat, grid.epoch_samples())
    }

    pub fn extract(&self, x: &[f64]) -> Result<FeatureVector> {
        if x.len() != self.epoch_samples {
            return Err(Error::LengthMismatch {
                what: "epoch samples",
                left: self.epoch_samples,
                right: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { channel: 0, epoch: 0 });
        }
        let fs = self.plan.fs;
        let n = x.len() as f64;
        let mut f = [0.0; N_FEATURES];

        let mean_sq = x.iter().map(|v| v * v).sum::<f64>() / n;
        f[col::RMS] = mean_sq.sqrt();
        let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        f[col::PEAK_TO_PEAK] = hi - lo;
        f[col::LINE_LENGTH] = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        f[col::ZERO_CROSSINGS] = x.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count() as f64;
        f[col::LOCAL_EXTREMA] = x
            .windows(3)
            .filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0)
            .count() as f64;

        let m = mean(x);
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &v in x {
            let d = v - m;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        let degenerate = m2 <= f64::EPSILON * mean_sq;
        if !degenerate {
            f[col::SKEWNESS] = m3 / m2.powf(1.5);
            f[col::KURTOSIS] = m4 / (m2 * m2);
        }

        let s = sneo_sequence(x, fs)?;
        f[col::SNEO_MEAN] = mean(&s);
        f[col::SNEO_VAR] = variance(&s);

        let dx = diff(x);
        let ddx = diff(&dx);
        let (v0, v1, v2) = (m2, variance(&dx), variance(&ddx));
        f[col::HJORTH_ACTIVITY] = v0;
        if !degenerate {
            let mob = ratio_sqrt(v1, v0);
            f[col::HJORTH_MOBILITY] = mob;
            let mob_d = ratio_sqrt(v2, v1);
            f[col::HJORTH_COMPLEXITY] = if mob > 0.0 { mob_d / mob } else { 0.0 };
        }

        let half_s = (0.5 * fs).round() as usize;
        let r = if degenerate {
            Vec::new()
        } else {
            self.plan.autocorrelation(x, x.len() / 2)
        };
        if !r.is_empty() {
            let first_zero = r.iter().position(|&v| v <= 0.0).unwrap_or(r.len() - 1);
            f[col::ACF_FIRST_ZERO] = first_zero as f64 / fs;
            f[col::ACF_CROSSINGS] = r[..=half_s.min(r.len() - 1)]
                .windows(2)
                .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
                .count() as f64;
        }

        self.spectral_features(x, &mut f);

        Ok(FeatureVector {
            values: f,
            max_amp: x.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        })
    }

    fn spectral_features(&self, x: &[f64], f: &mut Features) {
        let psd = self.plan.welch(x);
        let df = self.plan.bin_width();
        let lo_bin = (BANDS[0].0 / df).ceil() as usize;
        let hi_bin = ((BANDS[3].1 / df).floor() as usize).min(psd.len() - 1);
        let band = &psd[lo_bin..=hi_bin];
        let total: f64 = band.iter().sum();
        if !(total > 0.0) {
            return;
        }
        let freq = |i: usize| (lo_bin + i) as f64 * df;
        f[col::BAND_POWER] = total * df;

        let mut peak = 0;
        for (i, &p) in band.iter().enumerate() {
            if p > band[peak] {
                peak = i;
            }
        }
        f[col::PEAK_FREQUENCY] = freq(peak);

        let edge = |frac: f64| {
            let target = frac * total;
            let mut acc = 0.0;
            for (i, &p) in band.iter().enumerate() {
                acc += p;
                if acc >= target {
                    return freq(i);
                }
            }
            freq(band.len() - 1)
        };
        f[col::SEF90] = edge(0.90);
        f[col::SEF95] = edge(0.95);

        let mut rel = [0.0; 4];
        for (i, &p) in band.iter().enumerate() {
            let fr = freq(i);
            let b = BANDS
                .iter()
                .position(|&(a, z)| fr >= a && fr < z)
                .unwrap_or(BANDS.len() - 1);
            rel[b] += p;
        }
        f[col::REL_DELTA] = rel[0] / total;
        f[col::REL_THETA] = rel[1] / total;
        f[col::REL_ALPHA] = rel[2] / total;

        let h: f64 = band
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| {
                let q = p / total;
                -q * q.ln()
            })
            .sum();
        f[col::SPECTRAL_ENTROPY] = if band.len() > 1 { h / (band.len() as f64).ln() } else { 0.0 };
    }

    /// Relative power of all four bands, including the 13-16 Hz remainder.
    pub fn relative_band_powers(&self, x: &[f64]) -> [f64; 4] {
        let mut f = [0.0; N_FEATURES];
        self.spectral_features(x, &mut f);
        let d = f[col::REL_DELTA];
        let t = f[col::REL_THETA];
        let a = f[col::REL_ALPHA];
        let beta = if f[col::BAND_POWER] > 0.0 { 1.0 - d - t - a } else { 0.0 };
        [d, t, a, beta]
    }
}

/// One-off feature extraction for a single epoch.
pub fn extract_features(seg: &[f64], fs_feat: f64) -> Result<FeatureVector> {
    FeatureExtractor::new(fs_feat, seg.len()).extract(seg)
}

/// Feature rows of one recording, ordered channel-major: row
/// `channel * n_epochs + epoch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub recording_id: String,
    pub version: String,
    pub channel_labels: Vec<String>,
    pub n_epochs: usize,
    pub rows: Vec<Features>,
    pub max_amp: Vec<f64>,
}

impl FeatureMatrix {
    pub fn n_channels(&self) -> usize {
        self.channel_labels.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_index(&self, channel: usize, epoch: usize) -> usize {
        channel * self.n_epochs + epoch
    }

    /// Builds a matrix from loose vectors (row order as given).
    pub fn from_vectors(
        recording_id: impl Into<String>,
        channel_labels: Vec<String>,
        n_epochs: usize,
        vectors: &[FeatureVector],
    ) -> Result<Self> {
        if vectors.len() != channel_labels.len() * n_epochs {
            return Err(Error::LengthMismatch {
                what: "feature rows vs channels x epochs",
                left: channel_labels.len() * n_epochs,
                right: vectors.len(),
            });
        }
        Ok(FeatureMatrix {
            recording_id: recording_id.into(),
            version: FEATURE_VERSION.to_string(),
            channel_labels,
            n_epochs,
            rows: vectors.iter().map(|v| v.values).collect(),
            max_amp: vectors.iter().map(|v| v.max_amp).collect(),
        })
    }

    pub fn vector(&self, row: usize) -> FeatureVector {
        FeatureVector {
            values: self.rows[row],
            max_amp: self.max_amp[row],
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# feature_version={} recording={}", self.version, self.recording_id);
        s.push_str("channel,epoch");
        for name in FEATURE_NAMES {
            s.push(',');
            s.push_str(name);
        }
        s.push_str(",max_amp\n");
        for (ch, label) in self.channel_labels.iter().enumerate() {
            for ep in 0..self.n_epochs {
                let r = self.row_index(ch, ep);
                let _ = write!(s, "{label},{ep}");
                for v in &self.rows[r] {
                    let _ = write!(s, ",{v}");
                }
                let _ = writeln!(s, ",{}", self.max_amp[r]);
            }
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::Format("feature cache: missing version line".into()))?;
        let mut version = None;
        let mut recording_id = String::new();
        for kv in meta.split_whitespace() {
            match kv.split_once('=') {
                Some(("feature_version", v)) => version = Some(v.to_string()),
                Some(("recording", v)) => recording_id = v.to_string(),
                _ => {}
            }
        }
        let version = version.ok_or_else(|| Error::Format("feature cache: no feature_version".into()))?;
        let header = lines.next().ok_or_else(|| Error::Format("feature cache: missing header".into()))?;
        let expected: Vec<&str> = ["channel", "epoch"]
            .into_iter()
            .chain(FEATURE_NAMES)
            .chain(["max_amp"])
            .collect();
        if header.split(',').collect::<Vec<_>>() != expected {
            return Err(Error::Format(format!("feature cache: unexpected column order '{header}'")));
        }
        let mut labels: Vec<String> = Vec::new();
        let mut rows = Vec::new();
        let mut max_amp = Vec::new();
        let mut per_channel = 0usize;
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != N_FEATURES + 3 {
                return Err(Error::Format(format!("feature cache line {}: wrong field count", i + 3)));
            }
            if labels.last().map(String::as_str) != Some(fields[0]) {
                labels.push(fields[0].to_string());
            }
            if labels.len() == 1 {
                per_channel += 1;
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("feature cache line {}: bad number '{s}'", i + 3)))
            };
            let mut r = [0.0; N_FEATURES];
            for (k, v) in r.iter_mut().enumerate() {
                *v = parse(fields[k + 2])?;
            }
            rows.push(r);
            max_amp.push(parse(fields[N_FEATURES + 2])?);
        }
        if rows.len() != labels.len() * per_channel {
            return Err(Error::Format("feature cache: ragged channel blocks".into()));
        }
        Ok(FeatureMatrix {
            recording_id,
            version,
            channel_labels: labels,
            n_epochs: per_channel,
            rows,
            max_amp,
        })
    }
}

/// Features for every (channel, epoch) of a preprocessed recording.
pub fn extract_matrix(rec: &Recording, grid: &EpochGrid) -> Result<FeatureMatrix> {
    let epochs = epoch(rec, grid)?;
    let extractor = FeatureExtractor::for_grid(grid);
    let vectors: Vec<FeatureVector> = (0..epochs.n_channels * epochs.n_epochs)
        .into_par_iter()
        .map(|i| {
            let (ch, ep) = (i / epochs.n_epochs, i % epochs.n_epochs);
            extractor.extract(epochs.segment(ch, ep)).map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite { channel: ch, epoch: ep },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    FeatureMatrix::from_vectors(
        rec.id.clone(),
        rec.channels.iter().map(|c| c.label.clone()).collect(),
        epochs.n_epochs,
        &vectors,
    )
}

/// Per-feature z-score parameters, estimated on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl NormStats {
    /// Mean and population standard deviation of each column.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a Features>) -> Result<Self> {
        let mut n = 0usize;
        let mut sum = [0.0; N_FEATURES];
        let rows: Vec<&Features> = rows.into_iter().collect();
        for r in &rows {
            n += 1;
            for k in 0..N_FEATURES {
                sum[k] += r[k];
            }
        }
        if n == 0 {
            return Err(Error::InvalidInput("no rows to fit normalization".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        let mut ss = [0.0; N_FEATURES];
        for r in &rows {
            for k in 0..N_FEATURES {
                let d = r[k] - mean[k];
                ss[k] += d * d;
            }
        }
        let sd: Vec<f64> = ss.iter().map(|s| (s / n as f64).sqrt()).collect();
        let stats = NormStats { mean, sd };
        stats.check()?;
        Ok(stats)
    }

    pub fn check(&self) -> Result<()> {
        if self.mean.len() != N_FEATURES || self.sd.len() != N_FEATURES {
            return Err(Error::InvalidInput("normalization stats must have 22 columns".into()));
        }
        for (k, &s) in self.sd.iter().enumerate() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::ZeroVariance(FEATURE_NAMES[k]));
            }
        }
        Ok(())
    }

    pub fn apply(&self, row: &Features) -> Features {
        let mut out = [0.0; N_FEATURES];
        for k in 0..N_FEATURES {
            out[k] = (row[k] - self.mean[k]) / self.sd[k];
        }
        out
    }

    pub fn invert(&self, z: &Features) -> Features {
        let mut out = [0.0; N_FEATURES];
        for k in 0..N_FEATURES {
            out[k] = z[k] * self.sd[k] + self.mean[k];
        }
        out
    }
}

/// Z-scores the 22 classifier columns; `max_amp` stays in raw uV.
pub fn normalize(fm: &FeatureMatrix, stats: &NormStats) -> Result<FeatureMatrix> {
    stats.check()?;
    Ok(FeatureMatrix {
        rows: fm.rows.iter().map(|r| stats.apply(r)).collect(),
        ..fm.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const FS: f64 = 64.0;
    const N: usize = 1024;

    fn tone(f: f64, amp: f64, phase: f64) -> Vec<f64> {
        (0..N).map(|i| amp * (2.0 * PI * f * i as f64 / FS + phase).sin()).collect()
    }

    fn pink(seed: u64) -> Vec<f64> {
        // Kellet's pink filter over uniform white noise
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = [0.0f64; 3];
        (0..N)
            .map(|_| {
                let w: f64 = rng.gen_range(-1.0..1.0);
                b[0] = 0.99765 * b[0] + w * 0.0990460;
                b[1] = 0.96300 * b[1] + w * 0.2965164;
                b[2] = 0.57000 * b[2] + w * 1.0526913;
                (b[0] + b[1] + b[2] + w * 0.1848) * 20.0
            })
            .collect()
    }

    #[test]
    fn sneo_constant_is_zero() {
        assert_eq!(sneo(&[3.0; 50], FS).unwrap(), 0.0);
        assert!(sneo(&[1.0, 2.0], FS).is_err());
    }

    #[test]
    fn sneo_of_sinusoid_is_analytic() {
        for (amp, f) in [(1.0, 1.0), (50.0, 3.0), (7.0, 10.0)] {
            let w = 2.0 * PI * f / FS;
            let x = tone(f, amp, 0.4);
            let expected = amp * amp * w.sin().powi(2);
            let got = sneo(&x, FS).unwrap();
            assert!((got - expected).abs() < 1e-9 * expected.max(1.0), "{got} vs {expected}");
            let s = sneo_sequence(&x, FS).unwrap();
            assert!(s.iter().all(|v| (v - expected).abs() < 1e-9 * expected.max(1.0)));
        }
    }

    #[test]
    fn sneo_white_noise_monte_carlo() {
        // E[psi] = sigma^2 for i.i.d. zero-mean noise
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sigma = 3.0;
        let dist = rand_distr::Normal::new(0.0, sigma).unwrap();
        let trials: Vec<f64> = (0..400)
            .map(|_| {
                let x: Vec<f64> = (0..N).map(|_| rng.sample(dist)).collect();
                sneo(&x, FS).unwrap()
            })
            .collect();
        let m = trials.iter().sum::<f64>() / trials.len() as f64;
        let sd = (trials.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (trials.len() - 1) as f64).sqrt();
        let se = sd / (trials.len() as f64).sqrt();
        assert!((m - sigma * sigma).abs() < 3.0 * se, "mean {m}, se {se}");
    }

    #[test]
    fn zero_signal_sentinels() {
        let fv = extract_features(&[0.0; N], FS).unwrap();
        assert!(fv.values.iter().all(|&v| v == 0.0), "{:?}", fv.values);
        assert_eq!(fv.max_amp, 0.0);
    }

    #[test]
    fn one_hertz_tone() {
        let fv = extract_features(&tone(1.0, 1.0, 0.1), FS).unwrap();
        assert_eq!(fv.values[col::ZERO_CROSSINGS], 32.0);
        assert!((fv.values[col::PEAK_FREQUENCY] - 1.0).abs() <= 0.25);
        assert!(fv.values[col::REL_DELTA] > 0.95);
        assert!((fv.max_amp - 1.0).abs() < 1e-3);
        // 2 extrema per cycle
        assert_eq!(fv.values[col::LOCAL_EXTREMA], 32.0);
        // first autocorrelation zero at a quarter period
        assert!((fv.values[col::ACF_FIRST_ZERO] - 0.25).abs() < 2.0 / FS);
    }

    #[test]
    fn non_finite_is_rejected() {
        let mut x = vec![0.0; N];
        x[10] = f64::NAN;
        assert!(matches!(extract_features(&x, FS), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn wrong_length_is_rejected() {
        let ex = FeatureExtractor::new(FS, N);
        assert!(ex.extract(&[0.0; 100]).is_err());
    }

    #[test]
    fn pink_noise_is_finite_and_deterministic() {
        let x = pink(5);
        let a = extract_features(&x, FS).unwrap();
        let b = extract_features(&x, FS).unwrap();
        assert!(a.values.iter().all(|v| v.is_finite()));
        for (p, q) in a.values.iter().zip(&b.values) {
            assert_eq!(p.to_bits(), q.to_bits());
        }
        assert_eq!(a.max_amp.to_bits(), b.max_amp.to_bits());
    }

    #[test]
    fn amplitude_scaling() {
        let x = pink(9);
        let c = 2.5;
        let y: Vec<f64> = x.iter().map(|v| v * c).collect();
        let a = extract_features(&x, FS).unwrap().values;
        let b = extract_features(&y, FS).unwrap().values;
        let close = |p: f64, q: f64| (p - q).abs() <= 1e-9 * p.abs().max(q.abs()).max(1.0);
        for k in [col::RMS, col::PEAK_TO_PEAK, col::LINE_LENGTH] {
            assert!(close(b[k], c * a[k]), "{}", FEATURE_NAMES[k]);
        }
        for k in [col::SNEO_MEAN, col::HJORTH_ACTIVITY, col::BAND_POWER] {
            assert!(close(b[k], c * c * a[k]), "{}", FEATURE_NAMES[k]);
        }
        assert!(close(b[col::SNEO_VAR], c.powi(4) * a[col::SNEO_VAR]));
        for k in [
            col::ZERO_CROSSINGS,
            col::LOCAL_EXTREMA,
            col::SKEWNESS,
            col::KURTOSIS,
            col::HJORTH_MOBILITY,
            col::HJORTH_COMPLEXITY,
            col::ACF_FIRST_ZERO,
            col::ACF_CROSSINGS,
            col::PEAK_FREQUENCY,
            col::SEF90,
            col::SEF95,
            col::REL_DELTA,
            col::REL_THETA,
            col::REL_ALPHA,
            col::SPECTRAL_ENTROPY,
        ] {
            assert!(close(b[k], a[k]), "{}: {} vs {}", FEATURE_NAMES[k], a[k], b[k]);
        }
    }

    #[test]
    fn time_reversal_invariance() {
        for seed in 0..5 {
            let x = pink(seed);
            let mut r = x.clone();
            r.reverse();
            let a = extract_features(&x, FS).unwrap();
            let b = extract_features(&r, FS).unwrap();
            for k in 0..N_FEATURES {
                let tol = 1e-9 * a.values[k].abs().max(1.0);
                assert!((a.values[k] - b.values[k]).abs() <= tol, "{}", FEATURE_NAMES[k]);
            }
            assert_eq!(a.max_amp, b.max_amp);
        }
    }

    #[test]
    fn relative_powers_sum_to_one() {
        let ex = FeatureExtractor::new(FS, N);
        for seed in 0..5 {
            let p = ex.relative_band_powers(&pink(seed));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(p.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        }
    }

    fn matrix(rows: Vec<Features>) -> FeatureMatrix {
        let n = rows.len();
        FeatureMatrix {
            recording_id: "r".into(),
            version: FEATURE_VERSION.into(),
            channel_labels: vec!["A".into()],
            n_epochs: n,
            max_amp: vec![5.0; n],
            rows,
        }
    }

    fn random_rows(seed: u64, n: usize) -> Vec<Features> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let mut r = [0.0; N_FEATURES];
                for (k, v) in r.iter_mut().enumerate() {
                    *v = rng.gen_range(-10.0..10.0) * (k + 1) as f64 + k as f64;
                }
                r
            })
            .collect()
    }

    #[test]
    fn normalized_training_data_is_standard() {
        let fm = matrix(random_rows(1, 200));
        let stats = NormStats::fit(&fm.rows).unwrap();
        let z = normalize(&fm, &stats).unwrap();
        for k in 0..N_FEATURES {
            let col: Vec<f64> = z.rows.iter().map(|r| r[k]).collect();
            assert!(mean(&col).abs() < 1e-9);
            assert!((variance(&col).sqrt() - 1.0).abs() < 1e-9);
        }
        assert_eq!(z.max_amp, fm.max_amp);
    }

    #[test]
    fn column_at_training_mean_maps_to_zero() {
        let rows = random_rows(2, 50);
        let stats = NormStats::fit(&rows).unwrap();
        let m: Features = std::array::from_fn(|k| stats.mean[k]);
        assert!(stats.apply(&m).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_sd_names_the_feature() {
        let mut rows = random_rows(3, 20);
        for r in rows.iter_mut() {
            r[col::KURTOSIS] = 3.0;
        }
        match NormStats::fit(&rows) {
            Err(Error::ZeroVariance(name)) => assert_eq!(name, "kurtosis"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn normalize_round_trip() {
        let stats = NormStats::fit(&random_rows(4, 100)).unwrap();
        let b = random_rows(5, 30);
        for r in &b {
            let back = stats.invert(&stats.apply(r));
            for k in 0..N_FEATURES {
                assert!((back[k] - r[k]).abs() <= 1e-12 * r[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn csv_cache_round_trip() {
        let mut fm = matrix(random_rows(6, 4));
        fm.channel_labels = vec!["F3-P3".into(), "F4-P4".into()];
        fm.n_epochs = 2;
        let back = FeatureMatrix::from_csv(&fm.to_csv()).unwrap();
        assert_eq!(back, fm);
    }
}
