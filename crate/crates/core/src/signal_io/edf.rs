//! Plain EDF (1992) reader and writer.
//!
//! Layout: a 256-byte fixed header, then 256 bytes of per-signal fields
//! stored column-wise, then data records of little-endian `i16` samples.
//! EDF+ annotation signals are skipped on read.

use std::fs;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Timelike};
use log::warn;

use super::{Channel, Recording};
use crate::error::{Error, Result};

const FIXED_HEADER: usize = 256;
const SIGNAL_HEADER: usize = 256;

/// Widths of the per-signal header fields, in file order.
const SIGNAL_FIELDS: [usize; 10] = [16, 80, 8, 8, 8, 8, 8, 80, 8, 32];

#[derive(Debug, Clone)]
struct SignalHeader {
    label: String,
    physical_dim: String,
    physical_min: f64,
    physical_max: f64,
    digital_min: i32,
    digital_max: i32,
    samples_per_record: usize,
}

impl SignalHeader {
    fn gain(&self) -> f64 {
        (self.physical_max - self.physical_min) / f64::from(self.digital_max - self.digital_min)
    }

    fn to_physical(&self, digital: i16) -> f64 {
        self.physical_min + (f64::from(digital) - f64::from(self.digital_min)) * self.gain()
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn field(&mut self, width: usize) -> Result<(usize, &'a str)> {
        let start = self.pos;
        let raw = self.bytes.get(start..start + width).ok_or_else(|| Error::Parse {
            offset: start as u64,
            message: format!("header ends before {width}-byte field"),
        })?;
        self.pos += width;
        let text = std::str::from_utf8(raw).map_err(|_| Error::Parse {
            offset: start as u64,
            message: "non-ASCII header field".into(),
        })?;
        Ok((start, text.trim()))
    }

    fn number<T: std::str::FromStr>(&mut self, width: usize, what: &str) -> Result<T> {
        let (offset, text) = self.field(width)?;
        text.parse().map_err(|_| Error::Parse {
            offset: offset as u64,
            message: format!("{what}: cannot parse '{text}'"),
        })
    }
}

fn parse_start(date: &str, time: &str, offset: usize) -> Result<i64> {
    let bad = || Error::Parse {
        offset: offset as u64,
        message: format!("bad start date/time '{date} {time}'"),
    };
    let d: Vec<u32> = date.split('.').map(|p| p.parse().map_err(|_| bad())).collect::<Result<_>>()?;
    let t: Vec<u32> = time.split('.').map(|p| p.parse().map_err(|_| bad())).collect::<Result<_>>()?;
    if d.len() != 3 || t.len() != 3 {
        return Err(bad());
    }
    // EDF clipping date: years 85..99 are 19xx
    let year = if d[2] >= 85 { 1900 + d[2] } else { 2000 + d[2] } as i32;
    let dt = NaiveDate::from_ymd_opt(year, d[1], d[0])
        .and_then(|day| day.and_hms_opt(t[0], t[1], t[2]))
        .ok_or_else(bad)?;
    Ok(dt.and_utc().timestamp())
}

fn is_microvolt(dim: &str) -> bool {
    matches!(dim, "uV" | "µV" | "μV" | "uv")
}

/// Parses an EDF file into a [`Recording`] of physical values.
pub fn read_edf(path: impl AsRef<Path>) -> Result<Recording> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("recording")
        .to_string();
    parse_edf(&bytes, id)
}

pub fn parse_edf(bytes: &[u8], id: String) -> Result<Recording> {
    let mut cur = Cursor { bytes, pos: 0 };
    let (_, version) = cur.field(8)?;
    if version != "0" {
        return Err(Error::Parse {
            offset: 0,
            message: format!("version field is '{version}', expected '0'"),
        });
    }
    cur.field(80)?; // patient
    cur.field(80)?; // recording
    let (date_off, date) = cur.field(8)?;
    let (_, time) = cur.field(8)?;
    let start_time = parse_start(date, time, date_off)?;
    let header_bytes: usize = cur.number(8, "header size")?;
    cur.field(44)?; // reserved
    let records_off = cur.pos;
    let n_records: i64 = cur.number(8, "number of data records")?;
    let record_duration: f64 = cur.number(8, "data record duration")?;
    let ns_off = cur.pos;
    let ns: usize = cur.number(4, "number of signals")?;

    if header_bytes != FIXED_HEADER + ns * SIGNAL_HEADER {
        return Err(Error::Parse {
            offset: 184,
            message: format!(
                "header size {header_bytes} inconsistent with {ns} signals (expected {})",
                FIXED_HEADER + ns * SIGNAL_HEADER
            ),
        });
    }
    if ns == 0 {
        return Err(Error::Parse {
            offset: ns_off as u64,
            message: "file declares no signals".into(),
        });
    }
    if !(record_duration > 0.0) {
        return Err(Error::Parse {
            offset: (records_off + 8) as u64,
            message: format!("record duration {record_duration} must be positive"),
        });
    }

    // per-signal fields are stored field-by-field across all signals
    let mut columns: Vec<Vec<(usize, String)>> = Vec::with_capacity(SIGNAL_FIELDS.len());
    for &w in &SIGNAL_FIELDS {
        let mut col = Vec::with_capacity(ns);
        for _ in 0..ns {
            let (off, s) = cur.field(w)?;
            col.push((off, s.to_string()));
        }
        columns.push(col);
    }
    let num = |col: usize, i: usize, what: &str| -> Result<f64> {
        let (off, s) = &columns[col][i];
        s.parse::<f64>().map_err(|_| Error::Parse {
            offset: *off as u64,
            message: format!("{what} of signal {i}: cannot parse '{s}'"),
        })
    };
    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let spr = num(8, i, "samples per record")?;
        if spr < 1.0 || spr.fract() != 0.0 {
            return Err(Error::Parse {
                offset: columns[8][i].0 as u64,
                message: format!("signal {i} has invalid samples per record {spr}"),
            });
        }
        let sig = SignalHeader {
            label: columns[0][i].1.clone(),
            physical_dim: columns[2][i].1.clone(),
            physical_min: num(3, i, "physical minimum")?,
            physical_max: num(4, i, "physical maximum")?,
            digital_min: num(5, i, "digital minimum")? as i32,
            digital_max: num(6, i, "digital maximum")? as i32,
            samples_per_record: spr as usize,
        };
        if sig.digital_max <= sig.digital_min || sig.physical_max == sig.physical_min {
            return Err(Error::Parse {
                offset: columns[5][i].0 as u64,
                message: format!("signal '{}' has a degenerate range", sig.label),
            });
        }
        signals.push(sig);
    }

    let record_samples: usize = signals.iter().map(|s| s.samples_per_record).sum();
    let record_bytes = record_samples * 2;
    let data = &bytes[header_bytes.min(bytes.len())..];
    let n_records = if n_records < 0 {
        if data.len() % record_bytes != 0 {
            return Err(Error::Parse {
                offset: (header_bytes + data.len() / record_bytes * record_bytes) as u64,
                message: "partial trailing data record".into(),
            });
        }
        data.len() / record_bytes
    } else {
        let n = n_records as usize;
        let needed = n * record_bytes;
        if data.len() < needed {
            let complete = data.len() / record_bytes;
            return Err(Error::Parse {
                offset: (header_bytes + complete * record_bytes) as u64,
                message: format!(
                    "truncated data: header declares {n} records of {record_bytes} bytes, file holds {} bytes",
                    data.len()
                ),
            });
        }
        if data.len() > needed {
            warn!("{} bytes after the last declared data record ignored", data.len() - needed);
        }
        n
    };

    let eeg: Vec<usize> = (0..ns)
        .filter(|&i| !signals[i].label.eq_ignore_ascii_case("EDF Annotations"))
        .collect();
    let spr = signals[eeg[0]].samples_per_record;
    if let Some(&odd) = eeg.iter().find(|&&i| signals[i].samples_per_record != spr) {
        return Err(Error::Parse {
            offset: columns[8][odd].0 as u64,
            message: format!(
                "signal '{}' has {} samples per record, expected {spr}; mixed rates are not supported",
                signals[odd].label, signals[odd].samples_per_record
            ),
        });
    }
    for &i in &eeg {
        if !is_microvolt(&signals[i].physical_dim) {
            warn!(
                "signal '{}' has physical dimension '{}', expected uV; values passed through unchanged",
                signals[i].label, signals[i].physical_dim
            );
        }
    }

    let mut offsets = Vec::with_capacity(ns);
    let mut acc = 0;
    for s in &signals {
        offsets.push(acc);
        acc += s.samples_per_record;
    }
    let mut channels: Vec<Channel> = eeg
        .iter()
        .map(|&i| Channel {
            label: signals[i].label.clone(),
            samples: Vec::with_capacity(n_records * spr),
        })
        .collect();
    for r in 0..n_records {
        let rec = &data[r * record_bytes..(r + 1) * record_bytes];
        for (ch, &i) in channels.iter_mut().zip(&eeg) {
            let base = offsets[i] * 2;
            for k in 0..spr {
                let b = base + 2 * k;
                let d = i16::from_le_bytes([rec[b], rec[b + 1]]);
                ch.samples.push(signals[i].to_physical(d));
            }
        }
    }

    let rec = Recording {
        id,
        fs: spr as f64 / record_duration,
        start_time,
        channels,
        bad: None,
    };
    rec.validate().map_err(|e| Error::Parse {
        offset: FIXED_HEADER as u64,
        message: e.to_string(),
    })?;
    Ok(rec)
}

fn ascii_field(out: &mut Vec<u8>, value: &str, width: usize) {
    let mut s: String = value.chars().filter(|c| c.is_ascii()).take(width).collect();
    while s.len() < width {
        s.push(' ');
    }
    out.extend_from_slice(s.as_bytes());
}

fn number_field(value: f64) -> String {
    for decimals in (0..=4).rev() {
        let s = format!("{value:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s.len() <= 8 {
            return s;
        }
    }
    format!("{}", value.round() as i64)
}

/// Physical range for one channel: a fixed 0.1 uV grid when the data fit,
/// otherwise a symmetric range covering the data.
fn physical_range(samples: &[f64]) -> (f64, f64) {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak <= 3276.7 {
        (-3276.8, 3276.7)
    } else {
        let p = peak.ceil();
        (-p, p)
    }
}

pub fn encode_edf(rec: &Recording) -> Result<Vec<u8>> {
    rec.validate()?;
    if rec.fs.fract() != 0.0 {
        return Err(Error::InvalidInput(format!(
            "EDF writer needs an integer sampling rate, got {}",
            rec.fs
        )));
    }
    let spr = rec.fs as usize;
    let n = rec.n_samples();
    let n_records = n.div_ceil(spr);
    let ns = rec.channels.len();
    let start = chrono::DateTime::from_timestamp(rec.start_time, 0)
        .map(|d| d.naive_utc())
        .ok_or_else(|| Error::InvalidInput(format!("start time {} out of range", rec.start_time)))?;
    if !(1985..=2084).contains(&start.year()) {
        return Err(Error::InvalidInput(format!("start year {} not representable in EDF", start.year())));
    }

    let mut out = Vec::with_capacity(FIXED_HEADER + ns * SIGNAL_HEADER + n_records * spr * ns * 2);
    ascii_field(&mut out, "0", 8);
    ascii_field(&mut out, "X X X X", 80);
    ascii_field(&mut out, &format!("Startdate X X X {}", rec.id), 80);
    ascii_field(
        &mut out,
        &format!("{:02}.{:02}.{:02}", start.day(), start.month(), start.year() % 100),
        8,
    );
    ascii_field(
        &mut out,
        &format!("{:02}.{:02}.{:02}", start.hour(), start.minute(), start.second()),
        8,
    );
    ascii_field(&mut out, &(FIXED_HEADER + ns * SIGNAL_HEADER).to_string(), 8);
    ascii_field(&mut out, "", 44);
    ascii_field(&mut out, &n_records.to_string(), 8);
    ascii_field(&mut out, "1", 8);
    ascii_field(&mut out, &ns.to_string(), 4);

    let ranges: Vec<(f64, f64)> = rec.channels.iter().map(|c| physical_range(&c.samples)).collect();
    for c in &rec.channels {
        ascii_field(&mut out, &c.label, 16);
    }
    for _ in 0..ns {
        ascii_field(&mut out, "AgAgCl electrode", 80);
    }
    for _ in 0..ns {
        ascii_field(&mut out, "uV", 8);
    }
    for r in &ranges {
        ascii_field(&mut out, &number_field(r.0), 8);
    }
    for r in &ranges {
        ascii_field(&mut out, &number_field(r.1), 8);
    }
    for _ in 0..ns {
        ascii_field(&mut out, "-32768", 8);
    }
    for _ in 0..ns {
        ascii_field(&mut out, "32767", 8);
    }
    for _ in 0..ns {
        ascii_field(&mut out, "", 80);
    }
    for _ in 0..ns {
        ascii_field(&mut out, &spr.to_string(), 8);
    }
    for _ in 0..ns {
        ascii_field(&mut out, "", 32);
    }
    debug_assert_eq!(out.len(), FIXED_HEADER + ns * SIGNAL_HEADER);

    for r in 0..n_records {
        for (c, &(pmin, pmax)) in rec.channels.iter().zip(&ranges) {
            let gain = (pmax - pmin) / 65535.0;
            for k in 0..spr {
                let v = c.samples.get(r * spr + k).copied().unwrap_or(0.0);
                let d = ((v - pmin) / gain - 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Writes 1-second data records of 16-bit samples. The last record is
/// zero-padded when the duration is not a whole number of seconds.
pub fn write_edf(path: impl AsRef<Path>, rec: &Recording) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_edf(rec)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_recording() -> Recording {
        let fs = 8.0;
        let chans = ["F3", "P3"]
            .iter()
            .enumerate()
            .map(|(i, l)| Channel {
                label: l.to_string(),
                samples: (0..32).map(|k| (k as f64 * 0.7 + i as f64 * 10.0).sin() * 120.0).collect(),
            })
            .collect();
        let mut r = Recording::new("t", fs, chans).unwrap();
        r.start_time = 1_300_000_000;
        r
    }

    #[test]
    fn round_trip_within_quantization() {
        let r = sample_recording();
        let back = parse_edf(&encode_edf(&r).unwrap(), "t".into()).unwrap();
        assert_eq!(back.fs, 8.0);
        assert_eq!(back.start_time, r.start_time);
        assert_eq!(back.labels(), vec!["F3", "P3"]);
        for (a, b) in r.channels.iter().zip(&back.channels) {
            for (x, y) in a.samples.iter().zip(&b.samples) {
                assert!((x - y).abs() <= 0.05 + 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn version_must_be_zero() {
        let mut bytes = encode_edf(&sample_recording()).unwrap();
        bytes[0] = b'1';
        let err = parse_edf(&bytes, "t".into()).unwrap_err();
        assert!(matches!(err, Error::Parse { offset: 0, .. }));
    }

    #[test]
    fn linear_map_endpoints() {
        let sig = SignalHeader {
            label: "x".into(),
            physical_dim: "uV".into(),
            physical_min: -3276.8,
            physical_max: 3276.7,
            digital_min: -32768,
            digital_max: 32767,
            samples_per_record: 1,
        };
        assert_eq!(sig.to_physical(-32768), -3276.8);
        assert!((sig.to_physical(32767) - 3276.7).abs() < 1e-9);
        assert!(sig.to_physical(0).abs() < 1e-4);
    }

    #[test]
    fn truncated_record_is_rejected() {
        let bytes = encode_edf(&sample_recording()).unwrap();
        let cut = &bytes[..bytes.len() - 3];
        match parse_edf(cut, "t".into()) {
            Err(Error::Parse { offset, message }) => {
                assert!(message.contains("truncated"));
                // 4 records of 2 signals x 8 samples x 2 bytes; the fourth is incomplete
                assert_eq!(offset, (FIXED_HEADER + 2 * SIGNAL_HEADER + 3 * 32) as u64);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn header_too_short_names_offset() {
        let bytes = encode_edf(&sample_recording()).unwrap();
        match parse_edf(&bytes[..100], "t".into()) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 88),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_microvolt_passes_through() {
        let mut bytes = encode_edf(&sample_recording()).unwrap();
        // physical dimension of the first signal
        let off = FIXED_HEADER + 2 * 16 + 2 * 80;
        bytes[off..off + 2].copy_from_slice(b"mV");
        let rec = parse_edf(&bytes, "t".into()).unwrap();
        assert_eq!(rec.channels.len(), 2);
    }

    #[test]
    fn start_date_clipping() {
        assert_eq!(parse_start("01.01.85", "00.00.00", 0).unwrap(), 473_385_600);
        assert_eq!(parse_start("01.01.00", "00.00.00", 0).unwrap(), 946_684_800);
        assert!(parse_start("32.01.00", "00.00.00", 0).is_err());
    }

    #[test]
    fn number_fields_fit() {
        assert_eq!(number_field(-3276.8), "-3276.8");
        assert_eq!(number_field(12345.0), "12345");
        assert!(number_field(-123456.789).len() <= 8);
    }
}
