//! Per-step estimator output as written by `touchdown run`.
//!
//! ```text
//! # touchdown-run v1
//! # mode: bayes
//! # threshold: 0.8
//! timestamp,p_contact,decision,p_switch,median_frequency
//! 0,0.5,NC,0.00033535013046647811,
//! ```
//!
//! `p_switch` and `median_frequency` are empty when not defined (measurement-only
//! mode, warm-up, or a spectrum without power).

use std::fmt::Write as _;

use touchdown_core::eval::classify;
use touchdown_core::{EstimatorMode, EstimatorOutput};

use crate::CliError;

pub const RUN_FORMAT: &str = "touchdown-run";
pub const RUN_VERSION: u32 = 1;
pub const RUN_COLUMNS: &str = "timestamp,p_contact,decision,p_switch,median_frequency";

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub timestamp: f64,
    pub p_contact: f64,
    pub p_switch: Option<f64>,
    pub median_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub mode: EstimatorMode,
    pub threshold: f64,
    pub rows: Vec<RunRow>,
}

fn mode_name(mode: EstimatorMode) -> &'static str {
    match mode {
        EstimatorMode::Bayes => "bayes",
        EstimatorMode::MeasurementOnly => "measurement-only",
    }
}

impl RunOutput {
    pub fn new(mode: EstimatorMode, threshold: f64, timestamps: &[f64], out: &[EstimatorOutput]) -> Self {
        let rows = timestamps
            .iter()
            .zip(out)
            .map(|(&timestamp, o)| RunRow {
                timestamp,
                p_contact: o.p_contact,
                p_switch: o.p_switch,
                median_frequency: o.median_frequency,
            })
            .collect();
        Self {
            mode,
            threshold,
            rows,
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.p_contact).collect()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.timestamp).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(48 * (self.rows.len() + 4));
        let _ = writeln!(s, "# {RUN_FORMAT} v{RUN_VERSION}");
        let _ = writeln!(s, "# mode: {}", mode_name(self.mode));
        let _ = writeln!(s, "# threshold: {}", self.threshold);
        let _ = writeln!(s, "{RUN_COLUMNS}");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.timestamp,
                r.p_contact,
                classify(r.p_contact, self.threshold),
                opt(r.p_switch),
                opt(r.median_frequency)
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let bad = |line: usize, msg: &str| CliError::validation(format!("run output line {line}: {msg}"));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        match lines.next() {
            Some((_, first)) if first == format!("# {RUN_FORMAT} v{RUN_VERSION}") => {}
            Some((_, first)) if first.starts_with(&format!("# {RUN_FORMAT} ")) => {
                return Err(CliError::validation(format!(
                    "run output version {:?} not supported",
                    first
                )))
            }
            _ => return Err(CliError::data("run output is empty or lacks its version line")),
        }
        let mut mode = None;
        let mut threshold = None;
        let mut rows = Vec::new();
        let mut header_seen = false;
        for (line, content) in lines {
            if content.is_empty() {
                continue;
            }
            if !header_seen {
                if let Some(meta) = content.strip_prefix('#') {
                    match meta.split_once(':').map(|(k, v)| (k.trim(), v.trim())) {
                        Some(("mode", "bayes")) => mode = Some(EstimatorMode::Bayes),
                        Some(("mode", "measurement-only")) => mode = Some(EstimatorMode::MeasurementOnly),
                        Some(("threshold", v)) => {
                            threshold = Some(v.parse::<f64>().map_err(|_| bad(line, "bad threshold"))?)
                        }
                        _ => return Err(bad(line, "unrecognized header line")),
                    }
                    continue;
                }
                if content != RUN_COLUMNS {
                    return Err(bad(line, "unexpected column header"));
                }
                header_seen = true;
                continue;
            }
            let f: Vec<&str> = content.split(',').collect();
            if f.len() != 5 {
                return Err(bad(line, "expected 5 fields"));
            }
            let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
            let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some).ok_or(()) };
            rows.push(RunRow {
                timestamp: num(f[0]).ok_or_else(|| bad(line, "bad timestamp"))?,
                p_contact: num(f[1])
                    .filter(|p| (0.0..=1.0).contains(p))
                    .ok_or_else(|| bad(line, "bad p_contact"))?,
                p_switch: opt(f[3]).map_err(|_| bad(line, "bad p_switch"))?,
                median_frequency: opt(f[4]).map_err(|_| bad(line, "bad median_frequency"))?,
            });
        }
        if rows.is_empty() {
            return Err(CliError::data("run output has no rows"));
        }
        Ok(Self {
            mode: mode.ok_or_else(|| CliError::validation("run output lacks `# mode:`"))?,
            threshold: threshold.ok_or_else(|| CliError::validation("run output lacks `# threshold:`"))?,
            rows,
        })
    }
}
