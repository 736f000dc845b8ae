//! Line-oriented trace files: a `#`-prefixed typed header block followed by
//! CSV rows of per-leg signed torques, vertical acceleration, and an optional
//! contact label.
//!
//! ```text
//! # touchdown-trace v1
//! # sample_rate: 200
//! # units: s,Nm,Nm,Nm,Nm,m/s^2,-
//! # event: 2,takeoff
//! timestamp,tau_knee_left,tau_knee_right,tau_wheel_left,tau_wheel_right,acc_z,label
//! 0,10.1,-9.7,3.2,-2.8,9.9,C
//! ```
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, so write/read round trips are bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::config::LegAggregation;
use crate::error::{Error, Result};
use crate::types::{ContactState, Event, EventKind, TorqueSample};

pub const TRACE_FORMAT: &str = "touchdown-trace";
pub const TRACE_VERSION: u32 = 1;
pub const COLUMNS: [&str; 7] = [
    "timestamp",
    "tau_knee_left",
    "tau_knee_right",
    "tau_wheel_left",
    "tau_wheel_right",
    "acc_z",
    "label",
];
pub const UNITS: [&str; 7] = ["s", "Nm", "Nm", "Nm", "Nm", "m/s^2", "-"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormatError {
    #[error("file is empty or has no data rows")]
    Empty,
    #[error("missing header line {expected:?}")]
    MissingHeader { expected: String },
    #[error("format version {found} not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("wrong file format {found:?}, expected {expected:?}")]
    WrongFormat { found: String, expected: &'static str },
    #[error("declared units {found:?} do not match {expected:?}")]
    UnitMismatch { found: String, expected: String },
    #[error("line {line}: column header does not match {expected:?}")]
    ColumnMismatch { line: usize, expected: String },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: timestamp {time} does not increase")]
    NonMonotone { line: usize, time: f64 },
    #[error("declared sample rate {declared} Hz disagrees with measured {measured} Hz")]
    RateMismatch { declared: f64, measured: f64 },
    #[error("header events disagree with the label sequence")]
    EventMismatch,
    #[error("need at least {needed} usable rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("trace has unlabeled rows")]
    Unlabeled,
    #[error("{0}")]
    Json(String),
}

/// One sample row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub timestamp: f64,
    pub knee_left: f64,
    pub knee_right: f64,
    pub wheel_left: f64,
    pub wheel_right: f64,
    pub acc_z: f64,
    pub label: Option<ContactState>,
}

impl TraceRecord {
    fn numbers(&self) -> [f64; 6] {
        [
            self.timestamp,
            self.knee_left,
            self.knee_right,
            self.wheel_left,
            self.wheel_right,
            self.acc_z,
        ]
    }

    /// Aggregated absolute torque pair.
    pub fn torque(&self, mode: LegAggregation) -> TorqueSample {
        TorqueSample {
            knee: mode.combine(self.knee_left, self.knee_right),
            wheel: mode.combine(self.wheel_left, self.wheel_right),
        }
    }
}

/// A time series of sensor samples with optional ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub sample_rate: f64,
    pub records: Vec<TraceRecord>,
}

/// A row dropped in lenient mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_labeled(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.label.is_some())
    }

    pub fn labels(&self) -> Option<Vec<ContactState>> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.timestamp).collect()
    }

    /// Label flips, stamped at the first row of the new state.
    pub fn events(&self) -> Vec<Event> {
        self.records
            .windows(2)
            .filter_map(|w| {
                let kind = EventKind::between(w[0].label?, w[1].label?)?;
                Some(Event {
                    time: w[1].timestamp,
                    kind,
                })
            })
            .collect()
    }

    /// `(acc_z, torque)` pairs in time order, ready for the filter.
    pub fn measurements(
        &self,
        mode: LegAggregation,
    ) -> impl ExactSizeIterator<Item = (f64, TorqueSample)> + '_ {
        self.records.iter().map(move |r| (r.acc_z, r.torque(mode)))
    }

    pub fn torques(&self, mode: LegAggregation) -> Vec<TorqueSample> {
        self.records.iter().map(|r| r.torque(mode)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 8));
        let _ = writeln!(out, "# {TRACE_FORMAT} v{TRACE_VERSION}");
        let _ = writeln!(out, "# sample_rate: {}", self.sample_rate);
        let _ = writeln!(out, "# units: {}", UNITS.join(","));
        for e in self.events() {
            let _ = writeln!(out, "# event: {},{}", e.time, e.kind.as_str());
        }
        let _ = writeln!(out, "{}", COLUMNS.join(","));
        for r in &self.records {
            for x in r.numbers() {
                let _ = write!(out, "{x},");
            }
            out.push_str(r.label.map_or("", ContactState::as_str));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path, strictness: Strictness) -> Result<(Trace, Vec<SkippedRow>)> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Trace::parse(&text, strictness)?)
    }

    pub fn parse(text: &str, strictness: Strictness) -> Result<(Trace, Vec<SkippedRow>), FormatError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        let (_, first) = lines.next().ok_or(FormatError::Empty)?;
        if first.is_empty() {
            return Err(FormatError::Empty);
        }
        parse_magic(first, TRACE_FORMAT, TRACE_VERSION)?;

        let mut sample_rate = None;
        let mut units = None;
        let mut header_events = Vec::new();
        let mut columns_seen = false;
        let mut records = Vec::new();
        let mut skipped = Vec::new();

        for (line, content) in lines {
            if content.is_empty() {
                continue;
            }
            if !columns_seen {
                if let Some(meta) = content.strip_prefix('#') {
                    let (key, value) = meta.split_once(':').ok_or_else(|| FormatError::Malformed {
                        line,
                        reason: "header line is not `key: value`".into(),
                    })?;
                    let value = value.trim();
                    match key.trim() {
                        "sample_rate" => {
                            let rate: f64 = value.parse().map_err(|_| FormatError::Malformed {
                                line,
                                reason: format!("bad sample rate {value:?}"),
                            })?;
                            if !(rate.is_finite() && rate > 0.0) {
                                return Err(FormatError::Malformed {
                                    line,
                                    reason: format!("sample rate {rate} must be positive"),
                                });
                            }
                            sample_rate = Some(rate);
                        }
                        "units" => units = Some(value.to_owned()),
                        "event" => header_events.push(parse_event(line, value)?),
                        // unknown metadata is tolerated
                        _ => {}
                    }
                    continue;
                }
                if content != COLUMNS.join(",") {
                    return Err(FormatError::ColumnMismatch {
                        line,
                        expected: COLUMNS.join(","),
                    });
                }
                columns_seen = true;
                continue;
            }
            match parse_row(content) {
                Ok(rec) => {
                    if let Some(prev) = records.last().map(|r: &TraceRecord| r.timestamp) {
                        if rec.timestamp <= prev {
                            return Err(FormatError::NonMonotone {
                                line,
                                time: rec.timestamp,
                            });
                        }
                    }
                    records.push(rec);
                }
                Err(reason) => match strictness {
                    Strictness::Strict => return Err(FormatError::Malformed { line, reason }),
                    Strictness::Lenient => skipped.push(SkippedRow { line, reason }),
                },
            }
        }

        let sample_rate = sample_rate.ok_or(FormatError::MissingHeader {
            expected: "# sample_rate: <Hz>".into(),
        })?;
        let units = units.ok_or(FormatError::MissingHeader {
            expected: "# units: ...".into(),
        })?;
        if units != UNITS.join(",") {
            return Err(FormatError::UnitMismatch {
                found: units,
                expected: UNITS.join(","),
            });
        }
        if !columns_seen || records.is_empty() {
            return Err(FormatError::Empty);
        }
        check_rate(&records, sample_rate)?;

        let trace = Trace {
            sample_rate,
            records,
        };
        if trace.is_labeled() && !header_events.is_empty() && header_events != trace.events() {
            return Err(FormatError::EventMismatch);
        }
        Ok((trace, skipped))
    }
}

/// Checks a `# <format> v<version>` magic line.
pub(crate) fn parse_magic(line: &str, format: &'static str, version: u32) -> Result<(), FormatError> {
    let body = line.strip_prefix('#').map(str::trim).ok_or_else(|| FormatError::MissingHeader {
        expected: format!("# {format} v{version}"),
    })?;
    let (name, ver) = body.split_once(' ').unwrap_or((body, ""));
    if name != format {
        return Err(FormatError::WrongFormat {
            found: name.to_owned(),
            expected: format,
        });
    }
    if ver.trim() != format!("v{version}") {
        return Err(FormatError::VersionMismatch {
            found: ver.trim().to_owned(),
            expected: version,
        });
    }
    Ok(())
}

fn parse_event(line: usize, value: &str) -> Result<Event, FormatError> {
    let bad = || FormatError::Malformed {
        line,
        reason: format!("bad event {value:?}"),
    };
    let (time, kind) = value.split_once(',').ok_or_else(bad)?;
    Ok(Event {
        time: time.trim().parse().map_err(|_| bad())?,
        kind: kind.trim().parse().map_err(|_| bad())?,
    })
}

fn parse_row(content: &str) -> Result<TraceRecord, String> {
    let fields: Vec<&str> = content.split(',').collect();
    if fields.len() != COLUMNS.len() {
        return Err(format!(
            "expected {} fields, found {}",
            COLUMNS.len(),
            fields.len()
        ));
    }
    let mut nums = [0.0; 6];
    for (k, slot) in nums.iter_mut().enumerate() {
        let raw = fields[k].trim();
        let v: f64 = raw
            .parse()
            .map_err(|_| format!("{}: cannot parse {raw:?}", COLUMNS[k]))?;
        if !v.is_finite() {
            return Err(format!("{}: non-finite value {raw}", COLUMNS[k]));
        }
        *slot = v;
    }
    let label = match fields[6].trim() {
        "" => None,
        s => Some(s.parse::<ContactState>()?),
    };
    Ok(TraceRecord {
        timestamp: nums[0],
        knee_left: nums[1],
        knee_right: nums[2],
        wheel_left: nums[3],
        wheel_right: nums[4],
        acc_z: nums[5],
        label,
    })
}

fn check_rate(records: &[TraceRecord], declared: f64) -> Result<(), FormatError> {
    if records.len() < 2 {
        return Ok(());
    }
    let mut deltas: Vec<f64> = records
        .windows(2)
        .map(|w| w[1].timestamp - w[0].timestamp)
        .collect();
    deltas.sort_by(f64::total_cmp);
    let median = deltas[deltas.len() / 2];
    let measured = 1.0 / median;
    if ((measured - declared) / declared).abs() > 0.01 {
        return Err(FormatError::RateMismatch { declared, measured });
    }
    Ok(())
}

/// One ingested step: aggregated absolute torques plus acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub timestamp: f64,
    pub torque: TorqueSample,
    pub acc_z: f64,
    pub label: Option<ContactState>,
}

/// Result of reading a trace for estimation.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub trace: Trace,
    pub steps: Vec<Step>,
    pub skipped: Vec<SkippedRow>,
}

/// Reads a trace file and aggregates per-leg torques into measurement vectors.
pub fn ingest(path: &Path, aggregation: LegAggregation, strictness: Strictness) -> Result<Ingested> {
    let (trace, skipped) = Trace::read(path, strictness)?;
    let steps = trace
        .records
        .iter()
        .map(|r| Step {
            timestamp: r.timestamp,
            torque: r.torque(aggregation),
            acc_z: r.acc_z,
            label: r.label,
        })
        .collect();
    Ok(Ingested {
        trace,
        steps,
        skipped,
    })
}
