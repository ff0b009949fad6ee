//! Recordings, bipolar montages and 1 Hz annotation masks.
//!
//! EEG comes in as EDF (see [`edf`]); expert annotations and bad-electrode
//! marks come in as small CSV sidecars (see [`annotations`]).

pub mod annotations;
pub mod edf;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use annotations::{
    consensus, load_annotations, load_bad_electrodes, parse_events, read_mask_csv, write_events,
    write_mask_csv, AnnotationMask, Event,
};
pub use edf::{read_edf, write_edf};

/// Sampling rate of the high-density training cohort.
pub const TRAINING_FS: f64 = 256.0;
/// Sampling rate of the long-duration monitoring cohort.
pub const MONITORING_FS: f64 = 250.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub label: String,
    /// Samples in microvolts.
    pub samples: Vec<f64>,
}

/// Multichannel EEG sampled at a common rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub id: String,
    pub fs: f64,
    /// Seconds since the Unix epoch.
    pub start_time: i64,
    pub channels: Vec<Channel>,
    /// Per-channel, per-second "bad electrode" flags, aligned with `channels`.
    pub bad: Option<Vec<Vec<bool>>>,
}

impl Recording {
    pub fn new(id: impl Into<String>, fs: f64, channels: Vec<Channel>) -> Result<Self> {
        let rec = Recording {
            id: id.into(),
            fs,
            start_time: 0,
            channels,
            bad: None,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::InvalidInput(format!("sampling rate {} must be positive", self.fs)));
        }
        let n = self.n_samples();
        let mut seen = HashSet::new();
        for ch in &self.channels {
            if ch.samples.len() != n {
                return Err(Error::LengthMismatch {
                    what: "channel sample counts",
                    left: n,
                    right: ch.samples.len(),
                });
            }
            if !seen.insert(ch.label.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate channel label '{}'", ch.label)));
            }
        }
        if let Some(bad) = &self.bad {
            if bad.len() != self.channels.len() {
                return Err(Error::LengthMismatch {
                    what: "bad-electrode mask channels",
                    left: self.channels.len(),
                    right: bad.len(),
                });
            }
            let secs = self.duration_seconds();
            if let Some(row) = bad.iter().find(|row| row.len() != secs) {
                return Err(Error::LengthMismatch {
                    what: "bad-electrode mask seconds",
                    left: secs,
                    right: row.len(),
                });
            }
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.channels.first().map_or(0, |c| c.samples.len())
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs
    }

    /// Length of a 1 Hz mask covering the recording.
    pub fn duration_seconds(&self) -> usize {
        (self.duration_s() - 1e-9).ceil().max(0.0) as usize
    }

    pub fn channel(&self, label: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.label == label)
    }

    fn channel_index(&self, label: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.label == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.label.as_str()).collect()
    }
}

/// A list of bipolar derivations, each written `anode-cathode`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Montage {
    pub pairs: Vec<(String, String)>,
}

impl Montage {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for p in &pairs {
            if !seen.insert(p.clone()) {
                return Err(Error::Config(format!("montage pair {}-{} repeated", p.0, p.1)));
            }
        }
        Ok(Montage { pairs })
    }

    /// Parses derivations like `["F3-P3", "F4-P4"]`.
    pub fn parse<S: AsRef<str>>(specs: &[S]) -> Result<Self> {
        let pairs = specs
            .iter()
            .map(|s| {
                let s = s.as_ref();
                let (a, b) = s
                    .split_once('-')
                    .ok_or_else(|| Error::Config(format!("montage entry '{s}' is not 'A-B'")))?;
                let (a, b) = (a.trim(), b.trim());
                if a.is_empty() || b.is_empty() {
                    return Err(Error::Config(format!("montage entry '{s}' has an empty label")));
                }
                Ok((a.to_string(), b.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Montage::new(pairs)
    }

    /// The three-channel parasagittal derivation used in long-term monitoring.
    pub fn monitoring() -> Self {
        Montage::parse(&["F3-P3", "F4-P4", "P3-P4"]).expect("static montage")
    }

    pub fn labels(&self) -> Vec<String> {
        self.pairs.iter().map(|(a, b)| format!("{a}-{b}")).collect()
    }

    pub fn electrodes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for (a, b) in &self.pairs {
            for l in [a, b] {
                if !out.contains(l) {
                    out.push(l.clone());
                }
            }
        }
        out
    }
}

/// Derives bipolar channels: anode samples minus cathode samples.
///
/// The bad-electrode mask of a derived channel is the union of its sources.
pub fn apply_montage(rec: &Recording, montage: &Montage) -> Result<Recording> {
    let mut channels = Vec::with_capacity(montage.pairs.len());
    let mut bad = rec.bad.as_ref().map(|_| Vec::with_capacity(montage.pairs.len()));
    for (a, b) in &montage.pairs {
        let lookup = |l: &str| {
            rec.channel_index(l).ok_or_else(|| {
                Error::Config(format!(
                    "montage references '{l}' which is not in recording '{}' (has {:?})",
                    rec.id,
                    rec.labels()
                ))
            })
        };
        let (ia, ib) = (lookup(a)?, lookup(b)?);
        let samples = rec.channels[ia]
            .samples
            .iter()
            .zip(&rec.channels[ib].samples)
            .map(|(x, y)| x - y)
            .collect();
        channels.push(Channel {
            label: format!("{a}-{b}"),
            samples,
        });
        if let (Some(out), Some(src)) = (bad.as_mut(), rec.bad.as_ref()) {
            out.push(src[ia].iter().zip(&src[ib]).map(|(x, y)| *x || *y).collect());
        }
    }
    let out = Recording {
        id: rec.id.clone(),
        fs: rec.fs,
        start_time: rec.start_time,
        channels,
        bad,
    };
    out.validate()?;
    Ok(out)
}
