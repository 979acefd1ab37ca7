//! Position log parsing, live record ingestion and uniform resampling.
//!
//! All positions are millimeters and all timestamps seconds. Parsers keep
//! whatever unit the log uses; conversion is the producer's job.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source id assigned to records that carry none.
pub const DEFAULT_SOURCE: &str = "default";

/// Default gap threshold for [`resample`], seconds.
pub const DEFAULT_MAX_GAP: f64 = 1.0;

/// One timestamped position fix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(rename = "id", default = "default_source")]
    pub source_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fork_z: Option<f64>,
}

fn default_source() -> String {
    DEFAULT_SOURCE.to_string()
}

impl PositionSample {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self {
            t,
            x,
            y,
            z,
            source_id: default_source(),
            fork_z: None,
        }
    }

    pub fn with_fork(mut self, fork_z: f64) -> Self {
        self.fork_z = Some(fork_z);
        self
    }

    fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in [("t", self.t), ("x", self.x), ("y", self.y), ("z", self.z)] {
            if !v.is_finite() {
                return Err(format!("non-finite {name} = {v}"));
            }
        }
        if let Some(f) = self.fork_z {
            if !f.is_finite() {
                return Err(format!("non-finite fork_z = {f}"));
            }
        }
        Ok(())
    }

    /// Serializes as one JSONL record (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("sample serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl LogFormat {
    /// Guesses the format from a file extension.
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "csv" => Some(Self::Csv),
            "jsonl" | "ndjson" | "json" => Some(Self::Jsonl),
            _ => None,
        }
    }
}

/// Parses a recorded log. The result is grouped by source id (ascending) and
/// sorted by time within each source; duplicate timestamps keep the value
/// that appears last in the input.
pub fn parse_log(bytes: &[u8], format: LogFormat) -> Result<Vec<PositionSample>> {
    let samples = match format {
        LogFormat::Csv => parse_csv(bytes)?,
        LogFormat::Jsonl => parse_jsonl(bytes)?,
    };
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(normalize(samples))
}

fn normalize(mut samples: Vec<PositionSample>) -> Vec<PositionSample> {
    // stable: equal keys stay in input order, so the last one is the latest write
    samples.sort_by(|a, b| {
        a.source_id
            .cmp(&b.source_id)
            .then_with(|| a.t.total_cmp(&b.t))
    });
    let mut out: Vec<PositionSample> = Vec::with_capacity(samples.len());
    for s in samples {
        match out.last_mut() {
            Some(prev) if prev.source_id == s.source_id && prev.t == s.t => *prev = s,
            _ => out.push(s),
        }
    }
    out
}

fn parse_csv(bytes: &[u8]) -> Result<Vec<PositionSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(Error::EmptyInput);
    }
    let column = |name: &str| headers.iter().position(|h| h == name);
    let required = |name: &str| {
        column(name).ok_or_else(|| Error::Parse {
            line: 1,
            reason: format!("missing column `{name}`"),
        })
    };
    let (ti, xi, yi, zi) = (required("t")?, required("x")?, required("y")?, required("z")?);
    let fork_i = column("fork_z");
    let id_i = column("id");

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>().map_err(|_| Error::Parse {
                line,
                reason: format!("`{name}` is not a number: {raw:?}"),
            })
        };
        let fork_z = match fork_i {
            Some(i) if !record.get(i).unwrap_or("").is_empty() => Some(field(i, "fork_z")?),
            _ => None,
        };
        let source_id = id_i
            .and_then(|i| record.get(i))
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .unwrap_or_else(default_source);
        let sample = PositionSample {
            t: field(ti, "t")?,
            x: field(xi, "x")?,
            y: field(yi, "y")?,
            z: field(zi, "z")?,
            source_id,
            fork_z,
        };
        sample
            .validate()
            .map_err(|reason| Error::Parse { line, reason })?;
        samples.push(sample);
    }
    Ok(samples)
}

#[derive(Deserialize)]
struct JsonRecord {
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    #[serde(default)]
    fork_z: Option<f64>,
    #[serde(default)]
    id: Option<serde_json::Value>,
}

/// Parses one JSONL position record.
pub fn parse_record(line: &str) -> std::result::Result<PositionSample, String> {
    let rec: JsonRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let source_id = match rec.id {
        None | Some(serde_json::Value::Null) => default_source(),
        Some(serde_json::Value::String(s)) => s,
        Some(other) => other.to_string(),
    };
    let sample = PositionSample {
        t: rec.t,
        x: rec.x,
        y: rec.y,
        z: rec.z,
        source_id,
        fork_z: rec.fork_z,
    };
    sample.validate()?;
    Ok(sample)
}

fn parse_jsonl(bytes: &[u8]) -> Result<Vec<PositionSample>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        reason: format!("not UTF-8: {e}"),
    })?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let sample = parse_record(line).map_err(|reason| Error::Parse {
            line: i + 1,
            reason,
        })?;
        samples.push(sample);
    }
    Ok(samples)
}

/// Splits a parsed log into per-source sequences.
pub fn split_sources(samples: Vec<PositionSample>) -> BTreeMap<String, Vec<PositionSample>> {
    let mut map: BTreeMap<String, Vec<PositionSample>> = BTreeMap::new();
    for s in samples {
        map.entry(s.source_id.clone()).or_default().push(s);
    }
    map
}

/// Uniformly sampled channels produced by [`resample`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformSeries {
    pub t0: f64,
    pub rate: f64,
    pub channels: BTreeMap<String, Vec<f64>>,
    /// Index ranges that were linearly bridged across an outage longer than
    /// the gap threshold.
    pub gaps: Vec<Range<usize>>,
}

impl UniformSeries {
    pub fn len(&self) -> usize {
        self.channels.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.rate
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.get(name).map(Vec::as_slice)
    }

    pub fn in_gap(&self, k: usize) -> bool {
        self.gaps.iter().any(|g| g.contains(&k))
    }

    /// Converts back into samples so the series can be fed through
    /// [`resample`] again.
    pub fn to_samples(&self, source_id: &str) -> Vec<PositionSample> {
        let x = self.channel("x").unwrap_or_default();
        let y = self.channel("y").unwrap_or_default();
        let z = self.channel("z").unwrap_or_default();
        let fork = self.channel("fork_z");
        (0..self.len())
            .map(|k| PositionSample {
                t: self.time(k),
                x: x[k],
                y: y[k],
                z: z[k],
                source_id: source_id.to_string(),
                fork_z: fork.map(|f| f[k]),
            })
            .collect()
    }
}

/// Linearly interpolates samples onto the grid `t_first + k / rate`.
///
/// Samples must come from one source and be strictly increasing in time.
/// The fork channel is kept only when every sample carries it.
pub fn resample(samples: &[PositionSample], rate: f64, max_gap: f64) -> Result<UniformSeries> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidRate(rate));
    }
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    for (i, w) in samples.windows(2).enumerate() {
        if w[1].t <= w[0].t {
            return Err(Error::Unordered { index: i + 1 });
        }
    }
    let t_first = samples[0].t;
    let duration = samples[samples.len() - 1].t - t_first;
    if duration <= 0.0 {
        return Err(Error::ZeroDuration);
    }
    let n = (duration * rate + 1e-9).floor() as usize + 1;
    let has_fork = samples.iter().all(|s| s.fork_z.is_some());

    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut zs = Vec::with_capacity(n);
    let mut forks = Vec::with_capacity(if has_fork { n } else { 0 });
    let mut gaps: Vec<Range<usize>> = Vec::new();

    let mut j = 0;
    for k in 0..n {
        let t = t_first + k as f64 / rate;
        while j + 2 < samples.len() && samples[j + 1].t <= t {
            j += 1;
        }
        let (a, b) = (&samples[j], &samples[j + 1]);
        let eps = 1e-9 * t.abs().max(1.0);
        let lerp = |va: f64, vb: f64| {
            if (t - a.t).abs() <= eps {
                va
            } else if (t - b.t).abs() <= eps {
                vb
            } else {
                va + (vb - va) * (t - a.t) / (b.t - a.t)
            }
        };
        xs.push(lerp(a.x, b.x));
        ys.push(lerp(a.y, b.y));
        zs.push(lerp(a.z, b.z));
        if has_fork {
            forks.push(lerp(a.fork_z.unwrap_or(0.0), b.fork_z.unwrap_or(0.0)));
        }
        let strictly_inside = t > a.t + eps && t < b.t - eps;
        if b.t - a.t > max_gap && strictly_inside {
            match gaps.last_mut() {
                Some(g) if g.end == k => g.end = k + 1,
                _ => gaps.push(k..k + 1),
            }
        }
    }

    let mut channels = BTreeMap::new();
    channels.insert("x".to_string(), xs);
    channels.insert("y".to_string(), ys);
    channels.insert("z".to_string(), zs);
    if has_fork {
        channels.insert("fork_z".to_string(), forks);
    }
    Ok(UniformSeries {
        t0: t_first,
        rate,
        channels,
        gaps,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub accepted: u64,
    pub dropped_out_of_order: u64,
    pub malformed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineOutcome {
    Accepted(PositionSample),
    OutOfOrder,
    Malformed(String),
    Blank,
}

/// Single-writer buffer behind a live ingest session.
///
/// Readers take [`LiveSession::snapshot`]s; a snapshot never changes after it
/// was taken.
#[derive(Debug, Default)]
pub struct LiveSession {
    samples: Arc<Vec<PositionSample>>,
    last_t: HashMap<String, f64>,
    stats: IngestStats,
    finalized: bool,
}

impl LiveSession {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates and appends one JSONL record.
    pub fn push_line(&mut self, line: &str) -> LineOutcome {
        if line.trim().is_empty() {
            return LineOutcome::Blank;
        }
        match parse_record(line) {
            Ok(sample) => {
                if self.push_sample(sample.clone()) {
                    LineOutcome::Accepted(sample)
                } else {
                    LineOutcome::OutOfOrder
                }
            }
            Err(reason) => {
                self.stats.malformed += 1;
                LineOutcome::Malformed(reason)
            }
        }
    }

    /// Appends a sample unless it is not newer than the last one of its
    /// source. Returns whether it was kept.
    pub fn push_sample(&mut self, sample: PositionSample) -> bool {
        assert!(!self.finalized, "push into finalized session");
        if let Some(&last) = self.last_t.get(&sample.source_id) {
            if sample.t <= last {
                self.stats.dropped_out_of_order += 1;
                return false;
            }
        }
        self.last_t.insert(sample.source_id.clone(), sample.t);
        Arc::make_mut(&mut self.samples).push(sample);
        self.stats.accepted += 1;
        true
    }

    pub fn snapshot(&self) -> Arc<Vec<PositionSample>> {
        Arc::clone(&self.samples)
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    pub fn finalize(&mut self) {
        self.finalized = true;
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Reads JSONL records until the stream closes, notifying `sink` for each
/// accepted sample. The returned session is finalized.
pub fn live_ingest<R, F>(reader: R, mut sink: F) -> std::io::Result<LiveSession>
where
    R: BufRead,
    F: FnMut(&PositionSample),
{
    let mut session = LiveSession::new();
    for line in reader.lines() {
        let line = line?;
        if let LineOutcome::Accepted(sample) = session.push_line(&line) {
            sink(&sample);
        }
    }
    session.finalize();
    Ok(session)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_two_rows() {
        let s = parse_log(b"t,x,y,z\n0.0,0,0,0\n0.01,1,0,0", LogFormat::Csv).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[1].t - s[0].t - 0.01).abs() < 1e-12);
        assert_eq!(s[1].x, 1.0);
        assert_eq!(s[0].fork_z, None);
    }

    #[test]
    fn csv_nan_names_row() {
        let err = parse_log(b"t,x,y,z\n0.0,0,0,0\n0.01,NaN,0,0\n", LogFormat::Csv).unwrap_err();
        match err {
            Error::Parse { line, reason } => {
                assert_eq!(line, 3);
                assert!(reason.contains('x'), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_malformed_row() {
        let err = parse_log(b"t,x,y,z\n0.0,0,0,0\n0.01,abc,0,0\n", LogFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = parse_log(b"t,x,y,z\n0.0,0,0\n", LogFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(parse_log(b"", LogFormat::Csv), Err(Error::EmptyInput)));
        assert!(matches!(parse_log(b"t,x,y,z\n", LogFormat::Csv), Err(Error::EmptyInput)));
        assert!(matches!(parse_log(b"\n\n", LogFormat::Jsonl), Err(Error::EmptyInput)));
    }

    #[test]
    fn csv_fork_column() {
        let s = parse_log(b"t,x,y,z,fork_z\n0,0,0,0,100\n1,0,0,0,250\n", LogFormat::Csv).unwrap();
        assert_eq!(s[1].fork_z, Some(250.0));
    }

    #[test]
    fn duplicates_last_writer_wins_and_sorted() {
        let log = b"{\"t\":1,\"x\":1,\"y\":0,\"z\":0}\n{\"t\":0,\"x\":0,\"y\":0,\"z\":0}\n{\"t\":1,\"x\":7,\"y\":0,\"z\":0}\n";
        let s = parse_log(log, LogFormat::Jsonl).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].t, 0.0);
        assert_eq!(s[1].x, 7.0);
    }

    #[test]
    fn jsonl_groups_sources() {
        let log = b"{\"t\":0,\"x\":0,\"y\":0,\"z\":0,\"id\":\"b\"}\n{\"t\":0,\"x\":1,\"y\":0,\"z\":0,\"id\":\"a\"}\n{\"t\":1,\"x\":1,\"y\":0,\"z\":0,\"id\":7}\n";
        let s = parse_log(log, LogFormat::Jsonl).unwrap();
        let ids: Vec<_> = s.iter().map(|s| s.source_id.as_str()).collect();
        assert_eq!(ids, ["7", "a", "b"]);
        assert_eq!(split_sources(s).len(), 3);
    }

    #[test]
    fn jsonl_bad_line_numbered() {
        let err = parse_log(b"{\"t\":0,\"x\":0,\"y\":0,\"z\":0}\n{\"t\":1}\n", LogFormat::Jsonl)
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn resample_two_points_at_10hz() {
        let s = vec![PositionSample::new(0.0, 0.0, 0.0, 0.0), PositionSample::new(1.0, 1000.0, 0.0, 0.0)];
        let u = resample(&s, 10.0, DEFAULT_MAX_GAP).unwrap();
        assert_eq!(u.len(), 11);
        for (k, x) in u.channel("x").unwrap().iter().enumerate() {
            assert!((x - 100.0 * k as f64).abs() < 1e-9, "k={k} x={x}");
        }
        assert!(u.gaps.is_empty());
    }

    #[test]
    fn resample_identity_on_grid() {
        let s: Vec<_> = (0..50)
            .map(|k| PositionSample::new(k as f64 * 0.01, (k * k) as f64, -(k as f64), 3.0))
            .collect();
        let u = resample(&s, 100.0, DEFAULT_MAX_GAP).unwrap();
        assert_eq!(u.len(), 50);
        for (k, smp) in s.iter().enumerate() {
            assert_eq!(u.channel("x").unwrap()[k], smp.x);
            assert_eq!(u.channel("y").unwrap()[k], smp.y);
        }
    }

    #[test]
    fn resample_errors() {
        let one = vec![PositionSample::new(0.0, 0.0, 0.0, 0.0)];
        assert!(matches!(resample(&one, 10.0, 1.0), Err(Error::TooFewSamples { .. })));
        let same = vec![PositionSample::new(0.0, 0.0, 0.0, 0.0), PositionSample::new(0.0, 1.0, 0.0, 0.0)];
        assert!(resample(&same, 10.0, 1.0).is_err());
        let ok = vec![PositionSample::new(0.0, 0.0, 0.0, 0.0), PositionSample::new(1.0, 1.0, 0.0, 0.0)];
        assert!(matches!(resample(&ok, 0.0, 1.0), Err(Error::InvalidRate(_))));
    }

    #[test]
    fn resample_marks_gaps() {
        let s = vec![
            PositionSample::new(0.0, 0.0, 0.0, 0.0),
            PositionSample::new(0.5, 50.0, 0.0, 0.0),
            PositionSample::new(3.0, 300.0, 0.0, 0.0),
            PositionSample::new(3.5, 350.0, 0.0, 0.0),
        ];
        let u = resample(&s, 10.0, 1.0).unwrap();
        assert_eq!(u.len(), 36);
        // grid points strictly between t=0.5 and t=3.0
        assert_eq!(u.gaps, vec![6..30]);
        assert!(u.in_gap(10) && !u.in_gap(5) && !u.in_gap(30));
        // still bridged linearly
        assert!((u.channel("x").unwrap()[20] - 200.0).abs() < 1e-9);
    }

    #[test]
    fn resample_drops_partial_fork_channel() {
        let s = vec![
            PositionSample::new(0.0, 0.0, 0.0, 0.0).with_fork(10.0),
            PositionSample::new(1.0, 0.0, 0.0, 0.0),
        ];
        assert!(resample(&s, 10.0, 1.0).unwrap().channel("fork_z").is_none());
    }

    #[test]
    fn live_counts_drops_and_malformed() {
        let mut session = LiveSession::new();
        let mut notified = 0;
        for line in [
            r#"{"t":0,"x":0,"y":0,"z":0}"#,
            r#"{"t":1,"x":0,"y":0,"z":0}"#,
            r#"{"t":0.5,"x":0,"y":0,"z":0}"#,
            r#"{"t":2,"x":0,"y":0"#,
            r#"{"t":2,"x":0,"y":0,"z":0}"#,
        ] {
            if let LineOutcome::Accepted(_) = session.push_line(line) {
                notified += 1;
            }
        }
        assert_eq!(notified, 3);
        let st = session.stats();
        assert_eq!((st.accepted, st.dropped_out_of_order, st.malformed), (3, 1, 1));
    }

    #[test]
    fn live_snapshot_is_immutable() {
        let mut session = LiveSession::new();
        session.push_sample(PositionSample::new(0.0, 0.0, 0.0, 0.0));
        let snap = session.snapshot();
        session.push_sample(PositionSample::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(snap.len(), 1);
        assert_eq!(session.snapshot().len(), 2);
    }

    #[test]
    fn live_ingest_three_in_order() {
        let data = "{\"t\":0,\"x\":0,\"y\":0,\"z\":0}\n{\"t\":1,\"x\":1,\"y\":0,\"z\":0}\n{\"t\":2,\"x\":2,\"y\":0,\"z\":0}\n";
        let mut seen = Vec::new();
        let session = live_ingest(data.as_bytes(), |s| seen.push(s.t)).unwrap();
        assert_eq!(seen, vec![0.0, 1.0, 2.0]);
        assert_eq!(session.stats().dropped_out_of_order, 0);
        assert!(session.is_finalized());
    }
}
