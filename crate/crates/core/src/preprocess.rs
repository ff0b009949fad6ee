//! Band-pass filtering, rate conversion and the 16 s epoch grid.

use std::f64::consts::PI;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_io::{Channel, Recording};

/// Rate at which features are computed.
pub const FEATURE_FS: f64 = 64.0;
pub const EPOCH_LEN_S: f64 = 16.0;
pub const DEFAULT_HOP_S: f64 = 4.0;

pub const BAND_LOW_HZ: f64 = 0.5;
pub const BAND_HIGH_HZ: f64 = 16.0;
const HIGHPASS_ORDER: usize = 4;
const LOWPASS_ORDER: usize = 8;
/// Reflection padding applied before zero-phase filtering.
const PAD_S: f64 = 10.0;

/// One second-order section, `b0 b1 b2 / 1 a1 a2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Bilinear transform of `(b2 s^2 + b1 s + b0) / (s^2 + a1 s + a0)`.
    fn bilinear(analog_b: [f64; 3], analog_a: [f64; 3], fs: f64) -> Self {
        let k = 2.0 * fs;
        let k2 = k * k;
        let [b0, b1, b2] = analog_b;
        let [a0, a1, a2] = analog_a;
        let d0 = a2 * k2 + a1 * k + a0;
        Biquad {
            b: [
                (b2 * k2 + b1 * k + b0) / d0,
                (2.0 * b0 - 2.0 * b2 * k2) / d0,
                (b2 * k2 - b1 * k + b0) / d0,
            ],
            a: [(2.0 * a0 - 2.0 * a2 * k2) / d0, (a2 * k2 - a1 * k + a0) / d0],
        }
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Transposed direct-form II state for a constant input of 1.
    fn steady_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[1] * g;
        let z1 = self.b[1] - self.a[0] * g + z2;
        [z1, z2]
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos(pub Vec<Biquad>);

#[derive(Clone, Copy)]
enum Kind {
    Low,
    High,
}

fn butterworth(order: usize, cutoff: f64, fs: f64, kind: Kind) -> Vec<Biquad> {
    assert!(order % 2 == 0, "even orders only");
    // pre-warped analog cutoff
    let wc = 2.0 * fs * (PI * cutoff / fs).tan();
    (0..order / 2)
        .map(|k| {
            let theta = PI * (2 * k + 1) as f64 / (2 * order) as f64;
            // poles at wc * (-sin(theta) +/- j cos(theta))
            let a = [wc * wc, 2.0 * wc * theta.sin(), 1.0];
            let b = match kind {
                Kind::Low => [wc * wc, 0.0, 0.0],
                Kind::High => [0.0, 0.0, 1.0],
            };
            Biquad::bilinear(b, a, fs)
        })
        .collect()
}

impl Sos {
    /// The analysis band: Butterworth high-pass at 0.5 Hz followed by a
    /// Butterworth low-pass at 16 Hz.
    pub fn eeg_band(fs: f64) -> Self {
        let mut s = butterworth(HIGHPASS_ORDER, BAND_LOW_HZ, fs, Kind::High);
        s.extend(butterworth(LOWPASS_ORDER, BAND_HIGH_HZ, fs, Kind::Low));
        Sos(s)
    }

    /// Magnitude response at `f` Hz.
    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * f / fs;
        let (c1, s1, c2, s2) = (w.cos(), -w.sin(), (2.0 * w).cos(), -(2.0 * w).sin());
        self.0.iter().fold(1.0, |acc, q| {
            let nr = q.b[0] + q.b[1] * c1 + q.b[2] * c2;
            let ni = q.b[1] * s1 + q.b[2] * s2;
            let dr = 1.0 + q.a[0] * c1 + q.a[1] * c2;
            let di = q.a[0] * s1 + q.a[1] * s2;
            acc * ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
        })
    }

    fn run(&self, x: &mut [f64], initial: f64) {
        let mut scale = initial;
        for q in &self.0 {
            let ss = q.steady_state();
            let (mut z1, mut z2) = (ss[0] * scale, ss[1] * scale);
            for v in x.iter_mut() {
                let inp = *v;
                let out = q.b[0] * inp + z1;
                z1 = q.b[1] * inp - q.a[0] * out + z2;
                z2 = q.b[2] * inp - q.a[1] * out;
                *v = out;
            }
            scale *= q.dc_gain();
        }
    }

    /// Forward-backward filtering with odd reflection padding and
    /// steady-state initial conditions.
    pub fn filtfilt(&self, x: &[f64], pad: usize) -> Vec<f64> {
        let n = x.len();
        if n == 0 {
            return Vec::new();
        }
        let pad = pad.min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        let first = ext[0];
        self.run(&mut ext, first);
        ext.reverse();
        let first = ext[0];
        self.run(&mut ext, first);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Zero-phase 0.5-16 Hz band-pass of one channel, DC removed first.
pub fn bandpass(x: &[f64], fs: f64) -> Vec<f64> {
    let mean = if x.is_empty() { 0.0 } else { x.iter().sum::<f64>() / x.len() as f64 };
    let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
    Sos::eeg_band(fs).filtfilt(&centred, (PAD_S * fs).ceil() as usize)
}

fn blackman(u: f64) -> f64 {
    // u in [-1, 1]
    let t = PI * (u + 1.0);
    0.42 - 0.5 * t.cos() + 0.08 * (2.0 * t).cos()
}

/// Band-limited rate conversion by windowed-sinc interpolation.
///
/// Output length is `round(n * to / from)`. The anti-alias cutoff sits at
/// 45% of the lower of the two rates.
pub fn resample(x: &[f64], from: f64, to: f64) -> Vec<f64> {
    if (from - to).abs() < 1e-12 {
        return x.to_vec();
    }
    let n_out = (x.len() as f64 * to / from).round() as usize;
    let cutoff = 0.45 * from.min(to);
    // normalized to input samples
    let fc = cutoff / from;
    let half = (8.0 / fc).ceil() as isize;
    let n = x.len() as isize;
    let tap = |u: f64| {
        let arg = 2.0 * fc * u;
        let sinc = if arg.abs() < 1e-12 { 1.0 } else { (PI * arg).sin() / (PI * arg) };
        sinc * blackman(u / half as f64)
    };
    let ratio = from / to;
    // With a rational rate ratio the fractional offsets repeat every
    // `period` outputs, so their kernels can be tabulated.
    let period = (1..=1024usize).find(|&q| {
        let r = ratio * q as f64;
        (r - r.round()).abs() < 1e-9
    });
    let kernels: Vec<(Vec<f64>, f64)> = match period {
        Some(q) => (0..q)
            .map(|m| {
                let pos = m as f64 * ratio;
                let f = pos - pos.floor();
                let h: Vec<f64> = (-half + 1..=half).map(|j| tap(f - j as f64)).collect();
                let w = h.iter().sum();
                (h, w)
            })
            .collect(),
        None => Vec::new(),
    };
    (0..n_out)
        .map(|m| {
            let pos = m as f64 * ratio;
            let centre = pos.floor() as isize;
            let (lo, hi) = (centre - half + 1, centre + half);
            if let (Some(q), true) = (period, lo >= 0 && hi < n) {
                let (h, w) = &kernels[m % q];
                let acc: f64 = h.iter().zip(&x[lo as usize..=hi as usize]).map(|(a, b)| a * b).sum();
                return acc / w;
            }
            let (mut acc, mut wsum) = (0.0, 0.0);
            for i in lo.max(0)..=hi.min(n - 1) {
                let h = tap(pos - i as f64);
                acc += h * x[i as usize];
                wsum += h;
            }
            if wsum.abs() > 0.0 {
                acc / wsum
            } else {
                0.0
            }
        })
        .collect()
}

/// Band-pass then convert every channel to [`FEATURE_FS`].
pub fn preprocess(rec: &Recording) -> Result<Recording> {
    if rec.fs < FEATURE_FS {
        return Err(Error::UnsupportedRate {
            fs: rec.fs,
            min: FEATURE_FS,
        });
    }
    let channels = rec
        .channels
        .par_iter()
        .map(|c| Channel {
            label: c.label.clone(),
            samples: resample(&bandpass(&c.samples, rec.fs), rec.fs, FEATURE_FS),
        })
        .collect();
    let out = Recording {
        id: rec.id.clone(),
        fs: FEATURE_FS,
        start_time: rec.start_time,
        channels,
        bad: rec.bad.clone(),
    };
    out.validate()?;
    Ok(out)
}

/// Layout of overlapping analysis epochs over a recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochGrid {
    pub epoch_len: f64,
    pub hop: f64,
    pub fs_feat: f64,
}

impl Default for EpochGrid {
    fn default() -> Self {
        EpochGrid {
            epoch_len: EPOCH_LEN_S,
            hop: DEFAULT_HOP_S,
            fs_feat: FEATURE_FS,
        }
    }
}

impl EpochGrid {
    pub fn new(hop: f64) -> Result<Self> {
        let g = EpochGrid {
            hop,
            ..Default::default()
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epoch_len != EPOCH_LEN_S {
            return Err(Error::Config(format!("epoch length must be {EPOCH_LEN_S} s")));
        }
        if !(self.hop > 0.0 && self.hop <= self.epoch_len) {
            return Err(Error::Config(format!("hop {} must lie in (0, {}]", self.hop, self.epoch_len)));
        }
        if self.hop.fract() != 0.0 {
            return Err(Error::Config(format!("hop {} must be a whole number of seconds", self.hop)));
        }
        Ok(())
    }

    pub fn epoch_samples(&self) -> usize {
        (self.epoch_len * self.fs_feat).round() as usize
    }

    pub fn hop_samples(&self) -> usize {
        (self.hop * self.fs_feat).round() as usize
    }

    pub fn hop_seconds(&self) -> usize {
        self.hop as usize
    }

    pub fn epoch_seconds(&self) -> usize {
        self.epoch_len as usize
    }

    pub fn n_epochs(&self, duration_s: f64) -> usize {
        if duration_s + 1e-9 < self.epoch_len {
            0
        } else {
            ((duration_s - self.epoch_len + 1e-9) / self.hop).floor() as usize + 1
        }
    }

    /// Seconds `[start, end)` covered by epoch `i`.
    pub fn epoch_span(&self, i: usize) -> (usize, usize) {
        let start = i * self.hop_seconds();
        (start, start + self.epoch_seconds())
    }

    /// First sample of epoch `i`.
    pub fn epoch_start_sample(&self, i: usize) -> usize {
        i * self.hop_samples()
    }
}

/// Per-channel epoch slices of a preprocessed recording.
#[derive(Debug)]
pub struct Epochs<'a> {
    pub n_channels: usize,
    pub n_epochs: usize,
    slices: Vec<&'a [f64]>,
}

impl<'a> Epochs<'a> {
    pub fn segment(&self, channel: usize, epoch: usize) -> &'a [f64] {
        self.slices[channel * self.n_epochs + epoch]
    }

    /// Segments in (channel, epoch) row order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &'a [f64])> + '_ {
        self.slices
            .iter()
            .enumerate()
            .map(move |(i, s)| (i / self.n_epochs.max(1), i % self.n_epochs.max(1), *s))
    }
}

/// Cuts a recording sampled at `grid.fs_feat` into 16 s epochs.
pub fn epoch<'a>(rec: &'a Recording, grid: &EpochGrid) -> Result<Epochs<'a>> {
    grid.validate()?;
    if (rec.fs - grid.fs_feat).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "recording at {} Hz must be preprocessed to {} Hz before epoching",
            rec.fs, grid.fs_feat
        )));
    }
    let n_epochs = grid.n_epochs(rec.duration_s());
    if n_epochs == 0 {
        warn!(
            "recording '{}' lasts {:.1} s, shorter than one {} s epoch",
            rec.id,
            rec.duration_s(),
            grid.epoch_len
        );
    }
    let len = grid.epoch_samples();
    let mut slices = Vec::with_capacity(n_epochs * rec.channels.len());
    for ch in &rec.channels {
        for i in 0..n_epochs {
            let s = grid.epoch_start_sample(i);
            slices.push(&ch.samples[s..s + len]);
        }
    }
    Ok(Epochs {
        n_channels: rec.channels.len(),
        n_epochs,
        slices,
    })
}
