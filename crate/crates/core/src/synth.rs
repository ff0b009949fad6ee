//! Synthetic neonatal EEG with known seizures, two simulated experts and
//! high-amplitude artifacts.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal_io::{write_edf, write_events, AnnotationMask, Channel, Event, Recording};

/// 2020-01-01T00:00:00Z, the nominal start of every synthetic recording.
pub const SYNTH_START: i64 = 1_577_836_800;
/// Seizures are kept this far from the recording ends and from each other.
const MARGIN_S: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurstSuppression {
    pub burst_s: f64,
    pub suppression_s: f64,
    /// Background gain during suppression.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_neonates: usize,
    pub duration_s: f64,
    pub fs: f64,
    pub electrodes: Vec<String>,
    pub seizure_rate_per_h: f64,
    pub seizure_min_s: f64,
    pub seizure_max_s: f64,
    pub seizure_amp_uv: (f64, f64),
    /// Instantaneous frequency at seizure onset and offset.
    pub chirp_hz: (f64, f64),
    pub background_rms_uv: f64,
    pub burst_suppression: Option<BurstSuppression>,
    pub artifact_rate_per_h: f64,
    pub artifact_amp_uv: f64,
    pub expert_jitter_s: f64,
    pub expert_miss_prob: f64,
    /// Only events shorter than this can be missed by an expert.
    pub short_event_s: f64,
    pub id_prefix: String,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_neonates: 12,
            duration_s: 3600.0,
            fs: 256.0,
            electrodes: ["F3", "F4", "P3", "P4"].iter().map(|s| s.to_string()).collect(),
            seizure_rate_per_h: 2.0,
            seizure_min_s: 30.0,
            seizure_max_s: 300.0,
            seizure_amp_uv: (50.0, 150.0),
            chirp_hz: (2.0, 1.0),
            background_rms_uv: 25.0,
            burst_suppression: None,
            artifact_rate_per_h: 0.0,
            artifact_amp_uv: 2000.0,
            expert_jitter_s: 5.0,
            expert_miss_prob: 0.05,
            short_event_s: 60.0,
            id_prefix: "syn".into(),
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth: {m}")));
        if self.n_neonates == 0 {
            return bad("n_neonates must be positive");
        }
        if !(self.fs >= 64.0) || self.fs.fract() != 0.0 {
            return bad("fs must be a whole number of Hz, at least 64");
        }
        if self.electrodes.is_empty() {
            return bad("no electrodes");
        }
        if self.seizure_rate_per_h < 0.0 || self.artifact_rate_per_h < 0.0 {
            return bad("rates must be non-negative");
        }
        if !(self.seizure_min_s >= 30.0 && self.seizure_max_s >= self.seizure_min_s) {
            return bad("seizure durations must satisfy 30 <= min <= max");
        }
        if !(self.seizure_amp_uv.0 > 0.0 && self.seizure_amp_uv.1 >= self.seizure_amp_uv.0) {
            return bad("seizure amplitude range must be positive and ordered");
        }
        if !(self.chirp_hz.0 > 0.0 && self.chirp_hz.1 > 0.0) {
            return bad("chirp frequencies must be positive");
        }
        if !(self.background_rms_uv > 0.0) {
            return bad("background RMS must be positive");
        }
        if !(0.0..=1.0).contains(&self.expert_miss_prob) || self.expert_jitter_s < 0.0 {
            return bad("expert miss probability must lie in [0, 1] and jitter be non-negative");
        }
        if let Some(b) = &self.burst_suppression {
            if !(b.burst_s > 0.0 && b.suppression_s > 0.0 && b.gain >= 0.0) {
                return bad("burst-suppression durations must be positive");
            }
        }
        let usable = self.duration_s - 2.0 * MARGIN_S;
        if self.seizure_rate_per_h > 0.0 && usable < self.seizure_max_s {
            return bad("recording too short to hold a seizure");
        }
        // expected seizure time plus gaps must fit comfortably
        let mean_dur = if self.seizure_max_s > self.seizure_min_s {
            (self.seizure_max_s - self.seizure_min_s) / (self.seizure_max_s / self.seizure_min_s).ln()
        } else {
            self.seizure_min_s
        };
        let expected = self.seizure_rate_per_h * self.duration_s / 3600.0 * (mean_dur + MARGIN_S);
        if expected > 0.5 * usable {
            return Err(Error::Config(format!(
                "synth: seizure rate {} /h implies {:.0} s of seizures and gaps in {:.0} s of recording",
                self.seizure_rate_per_h, expected, usable
            )));
        }
        Ok(())
    }

    pub fn neonate_id(&self, i: usize) -> String {
        format!("{}{:03}", self.id_prefix, i)
    }
}

/// A seizure as generated, with the electrodes it was mixed into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSeizure {
    pub onset_s: f64,
    pub offset_s: f64,
    pub focus: String,
    pub electrodes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthNeonate {
    /// Referential electrode recording.
    pub recording: Recording,
    pub truth: AnnotationMask,
    pub experts: [AnnotationMask; 2],
    pub seizures: Vec<SynthSeizure>,
    pub artifacts: Vec<Event>,
}

/// Kellet's pink-noise filter over Gaussian white noise, scaled to `rms`.
fn pink_noise(n: usize, rms: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let white = Normal::new(0.0, 1.0).expect("unit normal");
    let mut b = [0.0f64; 7];
    let x: Vec<f64> = (0..n)
        .map(|_| {
            let w: f64 = white.sample(rng);
            b[0] = 0.99886 * b[0] + w * 0.0555179;
            b[1] = 0.99332 * b[1] + w * 0.0750759;
            b[2] = 0.96900 * b[2] + w * 0.1538520;
            b[3] = 0.86650 * b[3] + w * 0.3104856;
            b[4] = 0.55000 * b[4] + w * 0.5329522;
            b[5] = -0.7616 * b[5] - w * 0.0168980;
            let out = b[0] + b[1] + b[2] + b[3] + b[4] + b[5] + b[6] + w * 0.5362;
            b[6] = w * 0.115926;
            out
        })
        .collect();
    let mean = x.iter().sum::<f64>() / n.max(1) as f64;
    let sd = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n.max(1) as f64).sqrt();
    let g = if sd > 0.0 { rms / sd } else { 0.0 };
    x.iter().map(|v| (v - mean) * g).collect()
}

/// Raised-cosine edges over `ramp` seconds.
fn envelope(t: f64, dur: f64, ramp: f64) -> f64 {
    let r = ramp.min(dur / 2.0);
    if t < r {
        0.5 - 0.5 * (PI * t / r).cos()
    } else if t > dur - r {
        0.5 - 0.5 * (PI * (dur - t) / r).cos()
    } else {
        1.0
    }
}

/// Rhythmic discharge with a linear frequency drift and two harmonics.
fn seizure_waveform(n: usize, fs: f64, f0: f64, f1: f64, amp: f64) -> Vec<f64> {
    let dur = n as f64 / fs;
    let norm = 1.0 / (1.0 + 0.5 + 0.25);
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let phase = 2.0 * PI * (f0 * t + 0.5 * (f1 - f0) / dur * t * t);
            let s = phase.sin() + 0.5 * (2.0 * phase).sin() + 0.25 * (3.0 * phase).sin();
            amp * norm * s * envelope(t, dur, 5.0)
        })
        .collect()
}

/// Non-overlapping placement of durations, uniformly at random.
fn place(durations: &[f64], total: f64, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let n = durations.len();
    let free = total - 2.0 * MARGIN_S - durations.iter().sum::<f64>() - MARGIN_S * n.saturating_sub(1) as f64;
    if free < 0.0 {
        return None;
    }
    let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=free)).collect();
    u.sort_by(f64::total_cmp);
    let mut onsets = Vec::with_capacity(n);
    let mut used = MARGIN_S;
    for (k, d) in durations.iter().enumerate() {
        onsets.push((used + u[k]).floor());
        used += d + MARGIN_S;
    }
    Some(onsets)
}

fn expert_mask(
    rater: &str,
    events: &[(f64, f64)],
    spec: &SynthSpec,
    duration: usize,
    rng: &mut ChaCha8Rng,
) -> AnnotationMask {
    let j = spec.expert_jitter_s;
    let mut kept = Vec::new();
    for &(on, off) in events {
        let jon = if j > 0.0 { rng.gen_range(-j..=j) } else { 0.0 };
        let joff = if j > 0.0 { rng.gen_range(-j..=j) } else { 0.0 };
        let miss = rng.gen::<f64>() < spec.expert_miss_prob;
        if miss && off - on < spec.short_event_s {
            continue;
        }
        let a = (on + jon).round().max(0.0);
        let b = (off + joff).round().min(duration as f64);
        if b > a {
            kept.push((a, b));
        }
    }
    AnnotationMask::from_intervals(rater, &kept, duration)
}

/// One neonate, drawn from stream `index` of the spec seed.
pub fn generate_one(spec: &SynthSpec, index: usize) -> Result<SynthNeonate> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let fs = spec.fs;
    let n = (spec.duration_s * fs).round() as usize;
    let duration = (n as f64 / fs).ceil() as usize;
    let hours = spec.duration_s / 3600.0;

    let mut signals: Vec<Vec<f64>> = spec
        .electrodes
        .iter()
        .map(|_| pink_noise(n, spec.background_rms_uv, &mut rng))
        .collect();
    if let Some(bs) = &spec.burst_suppression {
        let period = bs.burst_s + bs.suppression_s;
        for s in signals.iter_mut() {
            for (i, v) in s.iter_mut().enumerate() {
                if (i as f64 / fs) % period >= bs.burst_s {
                    *v *= bs.gain;
                }
            }
        }
    }

    // seizures
    let mut seizures = Vec::new();
    let mut truth_events = Vec::new();
    if spec.seizure_rate_per_h > 0.0 {
        let pois = Poisson::new(spec.seizure_rate_per_h * hours).map_err(|e| Error::Config(e.to_string()))?;
        let (lo, hi) = (spec.seizure_min_s.ln(), spec.seizure_max_s.ln());
        let mut placed = None;
        for _ in 0..100 {
            let count = pois.sample(&mut rng) as usize;
            let durs: Vec<f64> = (0..count)
                .map(|_| if hi > lo { rng.gen_range(lo..hi).exp().round() } else { spec.seizure_min_s })
                .collect();
            if let Some(on) = place(&durs, spec.duration_s, &mut rng) {
                placed = Some((durs, on));
                break;
            }
        }
        let (durs, onsets) = placed.ok_or_else(|| {
            Error::Config("synth: could not place non-overlapping seizures; lower the rate".into())
        })?;
        for (d, on) in durs.iter().zip(onsets) {
            let focus = rng.gen_range(0..spec.electrodes.len());
            let amp = rng.gen_range(spec.seizure_amp_uv.0..=spec.seizure_amp_uv.1);
            let len = (d * fs).round() as usize;
            let wave = seizure_waveform(len, fs, spec.chirp_hz.0, spec.chirp_hz.1, amp);
            let start = (on * fs).round() as usize;
            let mut electrodes = Vec::new();
            for e in 0..spec.electrodes.len() {
                let gain = if e == focus {
                    1.0
                } else if rng.gen::<f64>() < 0.3 {
                    rng.gen_range(0.2..0.5)
                } else {
                    continue;
                };
                electrodes.push(spec.electrodes[e].clone());
                for (k, w) in wave.iter().enumerate() {
                    if let Some(v) = signals[e].get_mut(start + k) {
                        *v += gain * w;
                    }
                }
            }
            seizures.push(SynthSeizure {
                onset_s: on,
                offset_s: on + d,
                focus: spec.electrodes[focus].clone(),
                electrodes,
            });
            truth_events.push((on, on + d));
        }
    }

    // artifacts: short in-band bursts far above physiological amplitude
    let mut artifacts = Vec::new();
    if spec.artifact_rate_per_h > 0.0 {
        let pois = Poisson::new(spec.artifact_rate_per_h * hours).map_err(|e| Error::Config(e.to_string()))?;
        let count = pois.sample(&mut rng) as usize;
        for _ in 0..count {
            let d = rng.gen_range(1.0..=2.0);
            let on = rng.gen_range(0.0..(spec.duration_s - d).max(0.0)).floor();
            let e = rng.gen_range(0..spec.electrodes.len());
            let f = rng.gen_range(2.0..6.0);
            let len = (d * fs) as usize;
            let start = (on * fs) as usize;
            for k in 0..len {
                let t = k as f64 / fs;
                let w = 0.5 - 0.5 * (2.0 * PI * t / d).cos();
                if let Some(v) = signals[e].get_mut(start + k) {
                    *v += spec.artifact_amp_uv * w * (2.0 * PI * f * t).sin();
                }
            }
            artifacts.push(Event::new(on as usize, (on + d).ceil() as usize));
        }
        artifacts.sort_by_key(|a| a.onset);
    }

    let truth = AnnotationMask::from_intervals("truth", &truth_events, duration);
    let experts = [
        expert_mask("e1", &truth_events, spec, duration, &mut rng),
        expert_mask("e2", &truth_events, spec, duration, &mut rng),
    ];
    let channels = spec
        .electrodes
        .iter()
        .zip(signals)
        .map(|(l, s)| Channel {
            label: l.clone(),
            samples: s,
        })
        .collect();
    let mut recording = Recording::new(spec.neonate_id(index), fs, channels)?;
    recording.start_time = SYNTH_START;
    Ok(SynthNeonate {
        recording,
        truth,
        experts,
        seizures,
        artifacts,
    })
}

/// The whole corpus; neonates are independent streams of one seed.
pub fn generate(spec: &SynthSpec) -> Result<Vec<SynthNeonate>> {
    spec.validate()?;
    (0..spec.n_neonates).into_par_iter().map(|i| generate_one(spec, i)).collect()
}

/// Writes `<id>.edf`, `<id>.e1.csv`, `<id>.e2.csv`, `<id>.truth.csv` and
/// `<id>.artifacts.csv` for every neonate, returning the paths written.
pub fn write_corpus(dir: impl AsRef<Path>, corpus: &[SynthNeonate]) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for n in corpus {
        let id = &n.recording.id;
        let edf = dir.join(format!("{id}.edf"));
        write_edf(&edf, &n.recording)?;
        out.push(edf);
        for m in n.experts.iter().chain(std::iter::once(&n.truth)) {
            let p = dir.join(format!("{id}.{}.csv", m.rater));
            write_events(&p, &m.events())?;
            out.push(p);
        }
        let p = dir.join(format!("{id}.artifacts.csv"));
        write_events(&p, &n.artifacts)?;
        out.push(p);
    }
    Ok(out)
}
