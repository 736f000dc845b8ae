//! Evaluation: pointwise classification metrics, transition-event detection
//! and matching, latency statistics, and the noise-robustness sweep.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::config::EstimatorConfig;
use crate::filter::{run_estimator, EstimatorMode, FilterError, MeasurementModel};
use crate::synth::{generate_trace, NoiseLevels, ScenarioConfig, ScenarioError};
use crate::types::{ContactState, Event, EventKind};

/// Default matching window after each true transition (seconds).
pub const DEFAULT_MATCH_WINDOW: f64 = 0.25;
/// Slack on window edges so that `t + 0.25` computed in floating point still
/// counts as inside.
const WINDOW_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("length mismatch: {probabilities} probabilities vs {labels} labels")]
    LengthMismatch { probabilities: usize, labels: usize },
    #[error("empty sequence")]
    Empty,
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("trace has no ground-truth labels")]
    MissingLabels,
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// A ratio that may have a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Value(f64),
    Undefined,
}

impl Metric {
    pub fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            Metric::Undefined
        } else {
            Metric::Value(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            Metric::Undefined => None,
        }
    }

    pub fn is_undefined(self) -> bool {
        self == Metric::Undefined
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Value(v) => match f.precision() {
                Some(p) => write!(f, "{v:.p$}"),
                None => write!(f, "{v}"),
            },
            Metric::Undefined => f.write_str("undefined"),
        }
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Metric::Value(v) => s.serialize_f64(*v),
            Metric::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for Metric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Metric::Value(v)),
            Raw::Text(t) if t == "undefined" => Ok(Metric::Undefined),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad metric {t:?}"))),
        }
    }
}

/// One-vs-rest confusion counts and derived metrics for one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub precision: Metric,
    pub recall: Metric,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ClassReport {
    fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self {
            precision: Metric::ratio(tp, tp + fp),
            recall: Metric::ratio(tp, tp + fn_),
            tp,
            fp,
            fn_,
            tn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub threshold: f64,
    pub steps: usize,
    /// Fraction of correctly classified steps.
    pub success_rate: f64,
    pub contact: ClassReport,
    pub no_contact: ClassReport,
}

impl PointwiseReport {
    pub fn class(&self, state: ContactState) -> &ClassReport {
        match state {
            ContactState::Contact => &self.contact,
            ContactState::NoContact => &self.no_contact,
        }
    }
}

fn check_threshold(threshold: f64) -> Result<(), EvalError> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(())
    } else {
        Err(EvalError::InvalidThreshold(threshold))
    }
}

/// Contact iff `p >= threshold`.
pub fn classify(p_contact: f64, threshold: f64) -> ContactState {
    if p_contact >= threshold {
        ContactState::Contact
    } else {
        ContactState::NoContact
    }
}

pub fn threshold_states(probabilities: &[f64], threshold: f64) -> Vec<ContactState> {
    probabilities.iter().map(|&p| classify(p, threshold)).collect()
}

pub fn pointwise_metrics(
    probabilities: &[f64],
    labels: &[ContactState],
    threshold: f64,
) -> Result<PointwiseReport, EvalError> {
    check_threshold(threshold)?;
    if probabilities.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            probabilities: probabilities.len(),
            labels: labels.len(),
        });
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    // counts[truth][predicted], index 0 = contact
    let mut counts = [[0usize; 2]; 2];
    let idx = |s: ContactState| (s == ContactState::NoContact) as usize;
    for (&p, &truth) in probabilities.iter().zip(labels) {
        counts[idx(truth)][idx(classify(p, threshold))] += 1;
    }
    let [[cc, cn], [nc, nn]] = counts;
    Ok(PointwiseReport {
        threshold,
        steps: labels.len(),
        success_rate: (cc + nn) as f64 / labels.len() as f64,
        contact: ClassReport::from_counts(cc, nc, cn, nn),
        no_contact: ClassReport::from_counts(nn, cn, nc, cc),
    })
}

/// Edges of the thresholded sequence, stamped with `timestamps[k]` of the
/// first step in the new state.
pub fn detect_events_at(probabilities: &[f64], threshold: f64, timestamps: &[f64]) -> Vec<Event> {
    let states = threshold_states(probabilities, threshold);
    states
        .windows(2)
        .zip(&timestamps[1..])
        .filter_map(|(w, &time)| EventKind::between(w[0], w[1]).map(|kind| Event { time, kind }))
        .collect()
}

/// [`detect_events_at`] with timestamps `k / sample_rate`.
pub fn detect_events(probabilities: &[f64], threshold: f64, sample_rate: f64) -> Vec<Event> {
    let timestamps: Vec<f64> = (0..probabilities.len())
        .map(|k| k as f64 / sample_rate)
        .collect();
    detect_events_at(probabilities, threshold, &timestamps)
}

/// Replays an edge list from `initial` over `timestamps`.
pub fn reconstruct_states(initial: ContactState, events: &[Event], timestamps: &[f64]) -> Vec<ContactState> {
    let mut state = initial;
    let mut pending = events.iter().peekable();
    timestamps
        .iter()
        .map(|&t| {
            while let Some(e) = pending.next_if(|e| e.time <= t) {
                state = e.kind.target();
            }
            state
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub truth: f64,
    pub detected: f64,
}

impl MatchedPair {
    pub fn latency(&self) -> f64 {
        self.detected - self.truth
    }
}

/// Matching outcome for one event kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub truth_count: usize,
    pub detected_count: usize,
    pub precision: Metric,
    pub recall: Metric,
    pub matches: Vec<MatchedPair>,
    pub false_positives: Vec<f64>,
    /// Extra detections inside a matched window; neither true nor false positives.
    pub excluded: Vec<f64>,
    pub missed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub window: f64,
    pub takeoff: KindReport,
    pub landing: KindReport,
}

impl EventReport {
    pub fn kind(&self, kind: EventKind) -> &KindReport {
        match kind {
            EventKind::Takeoff => &self.takeoff,
            EventKind::Landing => &self.landing,
        }
    }
}

fn times_of(events: &[Event], kind: EventKind) -> Vec<f64> {
    let mut t: Vec<f64> = events.iter().filter(|e| e.kind == kind).map(|e| e.time).collect();
    t.sort_by(f64::total_cmp);
    t
}

fn match_kind(detected: &[f64], truth: &[f64], window: f64) -> KindReport {
    let in_window = |d: f64, t: f64| d >= t - WINDOW_EPS && d <= t + window + WINDOW_EPS;
    let mut used = vec![false; detected.len()];
    let mut matches = Vec::new();
    let mut missed = Vec::new();
    for &t in truth {
        match (0..detected.len()).find(|&j| !used[j] && in_window(detected[j], t)) {
            Some(j) => {
                used[j] = true;
                matches.push(MatchedPair {
                    truth: t,
                    detected: detected[j],
                });
            }
            None => missed.push(t),
        }
    }
    let mut false_positives = Vec::new();
    let mut excluded = Vec::new();
    for (j, &d) in detected.iter().enumerate() {
        if used[j] {
            continue;
        }
        if truth.iter().any(|&t| in_window(d, t)) {
            excluded.push(d);
        } else {
            false_positives.push(d);
        }
    }
    let tp = matches.len();
    KindReport {
        truth_count: truth.len(),
        detected_count: detected.len(),
        precision: Metric::ratio(tp, tp + false_positives.len()),
        recall: Metric::ratio(tp, truth.len()),
        matches,
        false_positives,
        excluded,
        missed,
    }
}

/// Matches each true event to the earliest same-kind detection in
/// `[t, t + window]`.
pub fn match_events(detected: &[Event], truth: &[Event], window: f64) -> EventReport {
    let report = |kind| match_kind(&times_of(detected, kind), &times_of(truth, kind), window);
    EventReport {
        window,
        takeoff: report(EventKind::Takeoff),
        landing: report(EventKind::Landing),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub mean_ms: Metric,
    /// Population standard deviation.
    pub std_ms: Metric,
}

impl LatencyStats {
    pub fn from_latencies_ms(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                count: 0,
                mean_ms: Metric::Undefined,
                std_ms: Metric::Undefined,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            count: values.len(),
            mean_ms: Metric::Value(mean),
            std_ms: Metric::Value(var.sqrt()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub takeoff: LatencyStats,
    pub landing: LatencyStats,
}

/// Latency statistics over matched transitions only.
pub fn latency_stats(report: &EventReport) -> LatencyReport {
    let stats = |k: &KindReport| {
        let ms: Vec<f64> = k.matches.iter().map(|m| 1000.0 * m.latency()).collect();
        LatencyStats::from_latencies_ms(&ms)
    };
    LatencyReport {
        takeoff: stats(&report.takeoff),
        landing: stats(&report.landing),
    }
}

/// Grid and episode settings for a noise sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Applied to both knee and wheel channels (Nm).
    pub torque_sigmas: Vec<f64>,
    /// m/s².
    pub accel_sigmas: Vec<f64>,
    pub episodes: usize,
    /// Episode `e` of every cell uses seed `base_seed + e`.
    pub base_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            torque_sigmas: vec![0.0, 1.0, 2.0, 5.0, 10.0],
            accel_sigmas: vec![0.0, 1.0, 2.0, 5.0, 10.0],
            episodes: 20,
            base_seed: 1000,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidSweep(m.to_owned()));
        if self.torque_sigmas.is_empty() || self.accel_sigmas.is_empty() {
            return bad("noise axes must be non-empty");
        }
        if self
            .torque_sigmas
            .iter()
            .chain(&self.accel_sigmas)
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return bad("noise levels must be finite and non-negative");
        }
        if self.episodes == 0 {
            return bad("episodes must be at least 1");
        }
        Ok(())
    }

    /// Row-major `(torque, accel)` cell coordinates.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        (0..self.torque_sigmas.len())
            .flat_map(|i| (0..self.accel_sigmas.len()).map(move |j| (i, j)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub torque_sigma: f64,
    pub accel_sigma: f64,
    /// Mean of the per-episode success rates.
    pub success_rate: f64,
    pub episode_success: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub torque_sigmas: Vec<f64>,
    pub accel_sigmas: Vec<f64>,
    pub episodes: usize,
    pub base_seed: u64,
    pub threshold: f64,
    /// Row-major over `torque_sigmas × accel_sigmas`.
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn from_cells(sweep: &SweepConfig, threshold: f64, cells: Vec<SweepCell>) -> Self {
        Self {
            torque_sigmas: sweep.torque_sigmas.clone(),
            accel_sigmas: sweep.accel_sigmas.clone(),
            episodes: sweep.episodes,
            base_seed: sweep.base_seed,
            threshold,
            cells,
        }
    }

    pub fn cell(&self, torque: usize, accel: usize) -> &SweepCell {
        &self.cells[torque * self.accel_sigmas.len() + accel]
    }

    /// Matrix CSV: first row holds the accel axis, first column the torque axis.
    pub fn heatmap_csv(&self) -> String {
        let mut out = String::from("torque_sigma\\accel_sigma");
        for a in &self.accel_sigmas {
            out.push_str(&format!(",{a}"));
        }
        out.push('\n');
        for (i, t) in self.torque_sigmas.iter().enumerate() {
            out.push_str(&t.to_string());
            for j in 0..self.accel_sigmas.len() {
                out.push_str(&format!(",{}", self.cell(i, j).success_rate));
            }
            out.push('\n');
        }
        out
    }
}

/// Success rate of one estimator run on one generated episode.
pub fn episode_success(
    scenario: &ScenarioConfig,
    models: &MeasurementModel,
    config: &EstimatorConfig,
    mode: EstimatorMode,
) -> Result<f64, EvalError> {
    let trace = generate_trace(scenario)?;
    let labels = trace.labels().ok_or(EvalError::MissingLabels)?;
    let out = run_estimator(trace.measurements(config.leg_aggregation), models, config, mode)?;
    let probs: Vec<f64> = out.iter().map(|o| o.p_contact).collect();
    Ok(pointwise_metrics(&probs, &labels, config.threshold)?.success_rate)
}

/// Runs every episode of one sweep cell sequentially.
pub fn run_sweep_cell(
    base: &ScenarioConfig,
    models: &MeasurementModel,
    config: &EstimatorConfig,
    sweep: &SweepConfig,
    torque_sigma: f64,
    accel_sigma: f64,
) -> Result<SweepCell, EvalError> {
    let noise = NoiseLevels::new(torque_sigma, torque_sigma, accel_sigma);
    let episode_success = (0..sweep.episodes as u64)
        .map(|e| {
            let scenario = base.with_noise(noise, sweep.base_seed + e);
            episode_success(&scenario, models, config, EstimatorMode::Bayes)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepCell {
        torque_sigma,
        accel_sigma,
        success_rate: episode_success.iter().sum::<f64>() / episode_success.len() as f64,
        episode_success,
    })
}

/// Success-rate heatmap over the noise grid. Cells run in parallel on the
/// current rayon pool.
pub fn noise_sweep(
    base: &ScenarioConfig,
    models: &MeasurementModel,
    config: &EstimatorConfig,
    sweep: &SweepConfig,
) -> Result<SweepReport, EvalError> {
    sweep.validate()?;
    base.validate()?;
    let cells = sweep
        .cells()
        .into_par_iter()
        .map(|(i, j)| {
            run_sweep_cell(
                base,
                models,
                config,
                sweep,
                sweep.torque_sigmas[i],
                sweep.accel_sigmas[j],
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepReport::from_cells(sweep, config.threshold, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use ContactState::{Contact as C, NoContact as N};

    fn ev(time: f64, kind: EventKind) -> Event {
        Event { time, kind }
    }

    #[test]
    fn perfect_classifier() {
        let r = pointwise_metrics(&[0.9, 0.1, 1.0], &[C, N, C], 0.8).unwrap();
        for s in [C, N] {
            assert_eq!(r.class(s).precision, Metric::Value(1.0));
            assert_eq!(r.class(s).recall, Metric::Value(1.0));
        }
        assert_eq!(r.success_rate, 1.0);
    }

    #[test]
    fn degenerate_class_is_undefined() {
        let r = pointwise_metrics(&[0.9, 0.95], &[C, C], 0.8).unwrap();
        assert_eq!(r.contact.recall, Metric::Value(1.0));
        assert!(r.no_contact.precision.is_undefined());
        assert!(r.no_contact.recall.is_undefined());
        assert_eq!(serde_json::to_string(&r.no_contact.recall).unwrap(), "\"undefined\"");
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(classify(0.8, 0.8), C);
        assert_eq!(classify(0.7999, 0.8), N);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            pointwise_metrics(&[0.9], &[C, N], 0.8),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn square_pulse_gives_two_events() {
        let p = [0.9, 0.9, 0.1, 0.1, 0.9];
        let e = detect_events(&p, 0.8, 100.0);
        assert_eq!(e, vec![ev(0.02, EventKind::Takeoff), ev(0.04, EventKind::Landing)]);
        assert!(detect_events(&[0.3; 10], 0.8, 100.0).is_empty());
    }

    #[test]
    fn chattering_is_not_debounced() {
        let p = [0.9, 0.7, 0.9, 0.7, 0.9];
        assert_eq!(detect_events(&p, 0.8, 100.0).len(), 4);
    }

    #[test]
    fn in_window_detection_matches() {
        let r = match_events(&[ev(1.1, EventKind::Landing)], &[ev(1.0, EventKind::Landing)], 0.25);
        assert_eq!(r.landing.matches.len(), 1);
        assert!((r.landing.matches[0].latency() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn second_detection_in_window_is_excluded() {
        let r = match_events(
            &[ev(1.05, EventKind::Takeoff), ev(1.15, EventKind::Takeoff)],
            &[ev(1.0, EventKind::Takeoff)],
            0.25,
        );
        assert_eq!(r.takeoff.matches.len(), 1);
        assert_eq!(r.takeoff.matches[0].detected, 1.05);
        assert_eq!(r.takeoff.excluded, vec![1.15]);
        assert!(r.takeoff.false_positives.is_empty());
        assert_eq!(r.takeoff.precision, Metric::Value(1.0));
    }

    #[test]
    fn late_detection_is_false_positive() {
        let r = match_events(&[ev(1.4, EventKind::Landing)], &[ev(1.0, EventKind::Landing)], 0.25);
        assert_eq!(r.landing.false_positives, vec![1.4]);
        assert_eq!(r.landing.missed, vec![1.0]);
        assert_eq!(r.landing.recall, Metric::Value(0.0));
    }

    #[test]
    fn window_edge_is_closed() {
        let r = match_events(&[ev(1.25, EventKind::Landing)], &[ev(1.0, EventKind::Landing)], 0.25);
        assert_eq!(r.landing.matches.len(), 1);
    }

    #[test]
    fn detection_before_truth_is_not_matched() {
        let r = match_events(&[ev(0.99, EventKind::Takeoff)], &[ev(1.0, EventKind::Takeoff)], 0.25);
        assert_eq!(r.takeoff.false_positives.len(), 1);
    }

    #[test]
    fn latency_examples() {
        let s = LatencyStats::from_latencies_ms(&[10.0, 20.0, 30.0]);
        assert_eq!(s.mean_ms, Metric::Value(20.0));
        let sd = s.std_ms.value().unwrap();
        assert!((sd - (200.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((sd - 8.165).abs() < 1e-3);
        assert_eq!(LatencyStats::from_latencies_ms(&[5.0]).std_ms, Metric::Value(0.0));
        let empty = LatencyStats::from_latencies_ms(&[]);
        assert_eq!(empty.count, 0);
        assert!(empty.mean_ms.is_undefined() && empty.std_ms.is_undefined());
    }

    #[test]
    fn heatmap_has_axis_headers() {
        let sweep = SweepConfig {
            torque_sigmas: vec![0.0, 1.0],
            accel_sigmas: vec![0.5],
            episodes: 1,
            base_seed: 0,
        };
        let cell = |t, r| SweepCell {
            torque_sigma: t,
            accel_sigma: 0.5,
            success_rate: r,
            episode_success: vec![r],
        };
        let report = SweepReport::from_cells(&sweep, 0.8, vec![cell(0.0, 1.0), cell(1.0, 0.5)]);
        assert_eq!(report.heatmap_csv(), "torque_sigma\\accel_sigma,0.5\n0,1\n1,0.5\n");
    }

    fn arb_events() -> impl Strategy<Value = Vec<Event>> {
        prop::collection::vec(
            (0u32..400, any::<bool>()).prop_map(|(k, takeoff)| {
                let kind = if takeoff { EventKind::Takeoff } else { EventKind::Landing };
                ev(k as f64 * 0.01, kind)
            }),
            0..30,
        )
    }

    proptest! {
        #[test]
        fn counts_sum_to_length(
            pairs in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..200),
            threshold in 0.0f64..=1.0,
        ) {
            let probs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let labels: Vec<ContactState> = pairs.iter().map(|p| if p.1 { C } else { N }).collect();
            let r = pointwise_metrics(&probs, &labels, threshold).unwrap();
            let c = r.contact;
            prop_assert_eq!(c.tp + c.fp + c.fn_ + c.tn, probs.len());
            prop_assert_eq!(r.no_contact.tp, c.tn);
        }

        #[test]
        fn matching_is_order_independent(det in arb_events(), truth in arb_events(), seed in any::<u64>()) {
            let mut truth = truth;
            truth.sort_by(|a, b| a.time.total_cmp(&b.time));
            let mut shuffled = det.clone();
            let n = shuffled.len();
            if n > 1 {
                for i in 0..n {
                    shuffled.swap(i, (seed as usize).wrapping_add(i * 7) % n);
                }
            }
            prop_assert_eq!(match_events(&det, &truth, 0.25), match_events(&shuffled, &truth, 0.25));
        }

        #[test]
        fn match_counts_are_bounded(det in arb_events(), truth in arb_events()) {
            let r = match_events(&det, &truth, 0.25);
            for k in [&r.takeoff, &r.landing] {
                prop_assert!(k.matches.len() <= k.truth_count.min(k.detected_count));
                prop_assert_eq!(k.matches.len() + k.excluded.len() + k.false_positives.len(), k.detected_count);
                prop_assert_eq!(k.matches.len() + k.missed.len(), k.truth_count);
                for m in [k.precision, k.recall] {
                    if let Metric::Value(v) = m {
                        prop_assert!((0.0..=1.0).contains(&v));
                    }
                }
            }
        }

        #[test]
        fn edges_reconstruct_thresholded_sequence(
            probs in prop::collection::vec(0.0f64..=1.0, 1..300),
            threshold in 0.0f64..=1.0,
        ) {
            let ts: Vec<f64> = (0..probs.len()).map(|k| k as f64 * 0.005).collect();
            let states = threshold_states(&probs, threshold);
            let events = detect_events_at(&probs, threshold, &ts);
            prop_assert_eq!(reconstruct_states(states[0], &events, &ts), states);
        }
    }
}
