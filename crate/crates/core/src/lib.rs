//! Ground-contact estimation for wheeled bipeds.
//!
//! A two-state Bayes filter combines kernel-density likelihoods over
//! absolute knee and wheel torques with transition probabilities derived
//! from the short-time spectrum of vertical acceleration. The crate also
//! carries the trace and model file formats, a synthetic drop-scenario
//! generator, and the evaluation harness.
//!
//! ```no_run
//! use touchdown_core::{generate_fit_dataset, generate_trace, run_estimator};
//! use touchdown_core::{EstimatorConfig, EstimatorMode, LegAggregation, ModelFile, ScenarioConfig};
//!
//! let scenario = ScenarioConfig::default();
//! let config = EstimatorConfig::default();
//! let (contact, no_contact) = generate_fit_dataset(&scenario, LegAggregation::Mean)?;
//! let model = ModelFile::fit(&contact, &no_contact, &config)?;
//! let trace = generate_trace(&scenario)?;
//! let out = run_estimator(trace.measurements(config.leg_aggregation), &model.models, &config, EstimatorMode::Bayes)?;
//! println!("final P(contact) = {}", out.last().unwrap().p_contact);
//! # Ok::<(), touchdown_core::Error>(())
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

pub mod config;
pub mod density;
pub mod error;
pub mod eval;
pub mod filter;
pub mod model_file;
pub mod signal;
pub mod synth;
pub mod trace;
pub mod types;

pub use config::{EstimatorConfig, LegAggregation, SigmoidParams, SwitchFeature};
pub use density::{fit_kde, BandwidthRule, DensityError, GridBounds, Interpolation, KdeConfig, KdeModel};
pub use error::{Error, ErrorCategory, Result};
pub use eval::{
    detect_events, detect_events_at, latency_stats, match_events, noise_sweep, pointwise_metrics,
    EvalError, EventReport, LatencyReport, Metric, PointwiseReport, SweepConfig, SweepReport,
};
pub use filter::{
    measurement_only, predict, run_estimator, update, Belief, ContactFilter, EstimatorMode,
    EstimatorOutput, FilterError, MeasurementModel, TransitionMatrix,
};
pub use model_file::ModelFile;
pub use signal::{median_frequency, power_spectrum, AccelWindow, PowerSpectrum, SignalError, Taper};
pub use synth::{
    generate_fit_dataset, generate_fit_traces, generate_trace, generate_trace_pair, NoiseLevels,
    ScenarioConfig, ScenarioError,
};
pub use trace::{ingest, FormatError, Strictness, Trace, TraceRecord};
pub use types::{ContactState, Event, EventKind, TorqueSample};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
