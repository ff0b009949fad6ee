//! Sidecar CSV files: seizure events, per-second masks and bad-electrode marks.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::Recording;
use crate::error::{Error, Result};

/// A half-open interval of whole seconds, `[onset, offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    pub onset: usize,
    pub offset: usize,
}

impl Event {
    pub fn new(onset: usize, offset: usize) -> Self {
        debug_assert!(offset >= onset);
        Event { onset, offset }
    }

    pub fn duration(&self) -> usize {
        self.offset - self.onset
    }

    /// Seconds shared with `other`.
    pub fn overlap(&self, other: &Event) -> usize {
        self.offset
            .min(other.offset)
            .saturating_sub(self.onset.max(other.onset))
    }
}

/// Per-second binary seizure labels from one rater.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationMask {
    pub rater: String,
    pub mask: Vec<bool>,
}

impl AnnotationMask {
    pub fn new(rater: impl Into<String>, mask: Vec<bool>) -> Self {
        AnnotationMask {
            rater: rater.into(),
            mask,
        }
    }

    pub fn empty(rater: impl Into<String>, duration: usize) -> Self {
        Self::new(rater, vec![false; duration])
    }

    /// Marks every second that intersects one of `events` (given in seconds).
    /// Events are clipped to `[0, duration]`.
    pub fn from_intervals(rater: impl Into<String>, events: &[(f64, f64)], duration: usize) -> Self {
        let mut mask = vec![false; duration];
        let end = duration as f64;
        for &(on, off) in events {
            if on < 0.0 || off > end {
                warn!("event ({on}, {off}) extends beyond [0, {end}] s; clipped");
            }
            let (on, off) = (on.max(0.0), off.min(end));
            if off <= on {
                continue;
            }
            let first = on.floor() as usize;
            let last = (off.ceil() as usize).min(duration);
            for s in &mut mask[first..last] {
                *s = true;
            }
        }
        Self::new(rater, mask)
    }

    pub fn from_events(rater: impl Into<String>, events: &[Event], duration: usize) -> Self {
        let mut mask = vec![false; duration];
        for e in events {
            let end = e.offset.min(duration);
            if e.onset < end {
                for s in &mut mask[e.onset..end] {
                    *s = true;
                }
            }
        }
        Self::new(rater, mask)
    }

    pub fn duration(&self) -> usize {
        self.mask.len()
    }

    pub fn true_seconds(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn events(&self) -> Vec<Event> {
        crate::postprocess::extract_events(&self.mask)
    }
}

/// Parses `onset_s,offset_s` lines. `#` starts a comment line and a
/// non-numeric first line is treated as a header.
pub fn parse_events(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    let mut first = true;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let header_ok = std::mem::replace(&mut first, false);
        let mut fields = line.split(',').map(str::trim);
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Format(format!(
                    "line {}: expected 'onset_s,offset_s', got '{line}'",
                    lineno + 1
                )))
            }
        };
        let (on, off) = match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(on), Ok(off)) => (on, off),
            _ if header_ok => continue,
            _ => {
                return Err(Error::Format(format!(
                    "line {}: non-numeric event '{line}'",
                    lineno + 1
                )))
            }
        };
        if !(on.is_finite() && off.is_finite()) || off <= on {
            return Err(Error::Format(format!(
                "line {}: offset {off} must be greater than onset {on}",
                lineno + 1
            )));
        }
        out.push((on, off));
    }
    Ok(out)
}

/// Rater name from a `<recording>.<rater>.csv` path, falling back to the stem.
fn rater_from_path(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("rater");
    match stem.rsplit_once('.') {
        Some((_, rater)) if !rater.is_empty() => rater.to_string(),
        _ => stem.to_string(),
    }
}

pub fn load_annotations(path: impl AsRef<Path>, duration: usize) -> Result<AnnotationMask> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let events = parse_events(&text)?;
    Ok(AnnotationMask::from_intervals(rater_from_path(path), &events, duration))
}

pub fn events_to_csv(events: &[Event]) -> String {
    let mut s = String::from("onset_s,offset_s\n");
    for e in events {
        let _ = writeln!(s, "{},{}", e.onset, e.offset);
    }
    s
}

pub fn write_events(path: impl AsRef<Path>, events: &[Event]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, events_to_csv(events)).map_err(|e| Error::io(path, e))
}

pub fn mask_to_csv(mask: &AnnotationMask) -> String {
    let mut s = String::with_capacity(mask.duration() * 8 + 16);
    s.push_str("second,label\n");
    for (i, &b) in mask.mask.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i, u8::from(b));
    }
    s
}

pub fn write_mask_csv(path: impl AsRef<Path>, mask: &AnnotationMask) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, mask_to_csv(mask)).map_err(|e| Error::io(path, e))
}

/// Reads a `second,label` file. Seconds must be contiguous from zero.
pub fn read_mask_csv(path: impl AsRef<Path>, rater: &str) -> Result<AnnotationMask> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut mask = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("second")) {
            continue;
        }
        let (sec, label) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("{}:{}: expected 'second,label'", path.display(), lineno + 1)))?;
        let sec: usize = sec
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("{}:{}: bad second '{sec}'", path.display(), lineno + 1)))?;
        if sec != mask.len() {
            return Err(Error::Format(format!(
                "{}:{}: expected second {}, found {sec}",
                path.display(),
                lineno + 1,
                mask.len()
            )));
        }
        let label = match label.trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Format(format!(
                    "{}:{}: label must be 0 or 1, got '{other}'",
                    path.display(),
                    lineno + 1
                )))
            }
        };
        mask.push(label);
    }
    Ok(AnnotationMask::new(rater, mask))
}

/// Per-second unanimous agreement of two or more raters.
pub fn consensus(masks: &[AnnotationMask]) -> Result<AnnotationMask> {
    if masks.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "consensus needs at least two raters, got {}",
            masks.len()
        )));
    }
    let n = masks[0].duration();
    if let Some(m) = masks.iter().find(|m| m.duration() != n) {
        return Err(Error::LengthMismatch {
            what: "rater mask durations",
            left: n,
            right: m.duration(),
        });
    }
    let mask = (0..n).map(|i| masks.iter().all(|m| m.mask[i])).collect();
    Ok(AnnotationMask::new("consensus", mask))
}

/// Reads `second,channel_label` lines into a per-channel, per-second mask
/// aligned with `rec.channels`.
pub fn load_bad_electrodes(path: impl AsRef<Path>, rec: &Recording) -> Result<Vec<Vec<bool>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let secs = rec.duration_seconds();
    let mut out = vec![vec![false; secs]; rec.channels.len()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (sec, label) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("{}:{}: expected 'second,channel_label'", path.display(), lineno + 1)))?;
        let sec: usize = match sec.trim().parse() {
            Ok(s) => s,
            Err(_) if lineno == 0 => continue,
            Err(_) => {
                return Err(Error::Format(format!(
                    "{}:{}: bad second '{sec}'",
                    path.display(),
                    lineno + 1
                )))
            }
        };
        let label = label.trim();
        let ch = rec
            .channels
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| Error::Format(format!("{}:{}: unknown channel '{label}'", path.display(), lineno + 1)))?;
        if sec < secs {
            out[ch][sec] = true;
        } else {
            warn!("{}: bad-electrode second {sec} beyond recording end; ignored", path.display());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(bits: &[u8]) -> AnnotationMask {
        AnnotationMask::new("r", bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn single_event_marks_intersecting_seconds() {
        let mask = AnnotationMask::from_intervals("e1", &[(10.0, 20.0)], 30);
        let on: Vec<usize> = (0..30).filter(|&i| mask.mask[i]).collect();
        assert_eq!(on, (10..20).collect::<Vec<_>>());
    }

    #[test]
    fn fractional_event_touches_partial_seconds() {
        let mask = AnnotationMask::from_intervals("e1", &[(1.5, 3.2)], 6);
        assert_eq!(mask.mask, vec![false, true, true, true, false, false]);
    }

    #[test]
    fn empty_file_gives_all_false() {
        assert!(parse_events("").unwrap().is_empty());
        assert!(parse_events("onset_s,offset_s\n").unwrap().is_empty());
        let mask = AnnotationMask::from_intervals("e1", &[], 12);
        assert_eq!(mask.true_seconds(), 0);
    }

    #[test]
    fn overlapping_events_union() {
        let a = AnnotationMask::from_intervals("e", &[(5.0, 15.0), (10.0, 20.0)], 30);
        let b = AnnotationMask::from_intervals("e", &[(5.0, 20.0)], 30);
        // independent oracle: second s is set iff it lies in any interval
        let oracle: Vec<bool> = (0..30).map(|s| (5..15).contains(&s) || (10..20).contains(&s)).collect();
        assert_eq!(a.mask, oracle);
        assert_eq!(a, b);
    }

    #[test]
    fn reversed_event_is_format_error() {
        assert!(matches!(parse_events("5,5\n"), Err(Error::Format(_))));
        assert!(matches!(parse_events("onset_s,offset_s\n9,2\n"), Err(Error::Format(_))));
        assert!(matches!(parse_events("1,2\nx,y\n"), Err(Error::Format(_))));
    }

    #[test]
    fn events_beyond_duration_are_clipped() {
        let mask = AnnotationMask::from_intervals("e", &[(-5.0, 2.0), (8.0, 50.0)], 10);
        assert_eq!(mask.mask, vec![true, true, false, false, false, false, false, false, true, true]);
    }

    #[test]
    fn consensus_is_unanimous_and() {
        assert_eq!(consensus(&[m(&[1, 1, 0]), m(&[1, 0, 0])]).unwrap().mask, m(&[1, 0, 0]).mask);
        let three = [m(&[1, 1, 1]), m(&[1, 1, 0]), m(&[1, 0, 0])];
        let oracle: Vec<bool> = (0..3).map(|i| three.iter().filter(|x| x.mask[i]).count() == 3).collect();
        let c = consensus(&three).unwrap();
        assert_eq!(c.mask, oracle);
        assert_eq!(c.rater, "consensus");
    }

    #[test]
    fn consensus_errors() {
        assert!(consensus(&[m(&[1])]).is_err());
        assert!(matches!(
            consensus(&[m(&[1, 0]), m(&[1])]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rater_name_from_file_name() {
        assert_eq!(rater_from_path(Path::new("/x/neo01.e2.csv")), "e2");
        assert_eq!(rater_from_path(Path::new("/x/events.csv")), "events");
    }

    #[test]
    fn mask_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.mask.csv");
        let mask = m(&[0, 1, 1, 0, 1]);
        write_mask_csv(&p, &mask).unwrap();
        assert_eq!(read_mask_csv(&p, "r").unwrap(), mask);
    }

    proptest::proptest! {
        #[test]
        fn event_file_round_trip(raw in proptest::collection::vec((0usize..200, 1usize..40), 0..8)) {
            let duration = 250;
            let intervals: Vec<(f64, f64)> = raw.iter().map(|&(on, len)| (on as f64, (on + len) as f64)).collect();
            let first = AnnotationMask::from_intervals("e", &intervals, duration);
            let text = events_to_csv(&first.events());
            let second = AnnotationMask::from_intervals("e", &parse_events(&text).unwrap(), duration);
            proptest::prop_assert_eq!(&first.mask, &second.mask);
            proptest::prop_assert_eq!(first.events(), second.events());
        }

        #[test]
        fn consensus_with_itself_is_identity(bits in proptest::collection::vec(proptest::bool::ANY, 1..100)) {
            let a = AnnotationMask::new("x", bits);
            proptest::prop_assert_eq!(consensus(&[a.clone(), a.clone()]).unwrap().mask, a.mask);
        }
    }
}
