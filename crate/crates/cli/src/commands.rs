use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde_json::json;
use touchdown_core::eval::{latency_stats, match_events, pointwise_metrics, Metric};
use touchdown_core::trace::{Ingested, SkippedRow};
use touchdown_core::{
    detect_events_at, generate_fit_traces, generate_trace, ingest, run_estimator, ContactState,
    EstimatorMode, Event, FormatError, ModelFile, NoiseLevels, Strictness, Trace,
};

use crate::args::{Cli, Command, OutputFormat};
use crate::runfile::RunOutput;
use crate::settings::Settings;
use crate::{emit, sweep, write_file, CliError};

pub fn dispatch(cli: &Cli, settings: &Settings, stdout: &mut dyn Write) -> Result<(), CliError> {
    let g = &cli.global;
    let strictness = g.strictness();
    let format = g.output_format;
    match &cli.command {
        Command::Gen {
            out,
            drops,
            torque_noise,
            accel_noise,
        } => {
            let mut scenario = settings.scenario.clone();
            if let Some(seed) = g.seed {
                scenario.seed = seed;
            }
            if let Some(d) = drops {
                scenario.drops = *d;
            }
            if let Some(t) = torque_noise {
                scenario.noise.knee = *t;
                scenario.noise.wheel = *t;
            }
            if let Some(a) = accel_noise {
                scenario.noise.acc = *a;
            }
            gen(&scenario, out, format, stdout)
        }
        Command::Fit {
            contact,
            no_contact,
            out,
        } => fit(settings, contact, no_contact, out, strictness, format, stdout),
        Command::Run {
            trace,
            model,
            mode,
            out,
        } => run(settings, trace, model, (*mode).into(), out.as_ref(), strictness, format, stdout),
        Command::Eval {
            run,
            trace,
            window,
            out,
        } => eval(run, trace, *window, out.as_ref(), strictness, format, stdout),
        Command::Sweep {
            out,
            model,
            max_cells,
        } => {
            let mut sweep_cfg = settings.sweep.clone();
            if let Some(seed) = g.seed {
                sweep_cfg.base_seed = seed;
            }
            let model = model.as_deref().map(ModelFile::read).transpose()?;
            if let Some(m) = &model {
                check_model(m, settings, None, strictness)?;
            }
            sweep::run(
                &sweep::Plan {
                    scenario: settings.scenario.clone(),
                    estimator: settings.estimator.clone(),
                    sweep: sweep_cfg,
                    model,
                },
                out,
                *max_cells,
                format,
                stdout,
            )
        }
    }
}

fn gen(
    scenario: &touchdown_core::ScenarioConfig,
    out: &Path,
    format: OutputFormat,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    scenario.validate().map_err(touchdown_core::Error::from)?;
    let trace = generate_trace(scenario).map_err(touchdown_core::Error::from)?;
    // Fit captures are noise-free regardless of the scenario noise.
    let clean = scenario.with_noise(NoiseLevels::default(), scenario.seed);
    let (contact, no_contact) = generate_fit_traces(&clean).map_err(touchdown_core::Error::from)?;
    let files = [
        ("trace.csv", &trace),
        ("fit_contact.csv", &contact),
        ("fit_no_contact.csv", &no_contact),
    ];
    for (name, t) in files {
        write_file(&out.join(name), &t.to_text())?;
    }
    let text = match format {
        OutputFormat::Csv => {
            let mut s = String::from("file,rows,events\n");
            for (name, t) in files {
                s.push_str(&format!("{},{},{}\n", out.join(name).display(), t.len(), t.events().len()));
            }
            s
        }
        OutputFormat::Summary => json_line(&json!({
            "seed": scenario.seed,
            "drops": scenario.drops,
            "noise": scenario.noise,
            "files": files.iter().map(|(name, t)| json!({
                "path": out.join(name),
                "rows": t.len(),
                "events": t.events().len(),
            })).collect::<Vec<_>>(),
        })),
    };
    emit(stdout, None, &text)
}

fn report_skipped(path: &Path, skipped: &[SkippedRow]) {
    for s in skipped {
        warn!("{}:{}: skipped row: {}", path.display(), s.line, s.reason);
    }
}

fn load(path: &Path, settings_agg: touchdown_core::LegAggregation, strictness: Strictness) -> Result<Ingested, CliError> {
    let ingested = ingest(path, settings_agg, strictness)?;
    report_skipped(path, &ingested.skipped);
    Ok(ingested)
}

fn mismatch(strictness: Strictness, message: String) -> Result<(), CliError> {
    match strictness {
        Strictness::Strict => Err(CliError::validation(message)),
        Strictness::Lenient => {
            warn!("{message}");
            Ok(())
        }
    }
}

fn fit(
    settings: &Settings,
    contact: &Path,
    no_contact: &Path,
    out: &Path,
    strictness: Strictness,
    format: OutputFormat,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let config = &settings.estimator;
    let mut pools = Vec::with_capacity(2);
    for (path, state) in [(contact, ContactState::Contact), (no_contact, ContactState::NoContact)] {
        let ingested = load(path, config.leg_aggregation, strictness)?;
        if ingested.steps.len() < 2 {
            return Err(touchdown_core::Error::from(FormatError::TooFewRows {
                needed: 2,
                found: ingested.steps.len(),
            })
            .into());
        }
        let wrong = ingested
            .steps
            .iter()
            .filter(|s| s.label.is_some_and(|l| l != state))
            .count();
        if wrong > 0 {
            mismatch(
                strictness,
                format!(
                    "{}: {wrong} rows labeled opposite to the {} capture",
                    path.display(),
                    state.as_str()
                ),
            )?;
        }
        pools.push(ingested.steps.iter().map(|s| s.torque).collect::<Vec<_>>());
    }
    let model = ModelFile::fit(&pools[0], &pools[1], config)?;
    write_file(out, &model.to_json())?;
    info!("wrote {}", out.display());
    let states = [&model.models.contact, &model.models.no_contact];
    let text = match format {
        OutputFormat::Csv => {
            let mut s = String::from("state,samples,bandwidth_knee,bandwidth_wheel\n");
            for m in states {
                let [bk, bw] = m.bandwidths();
                s.push_str(&format!("{},{},{bk},{bw}\n", m.state().as_str(), m.sample_count()));
            }
            s
        }
        OutputFormat::Summary => json_line(&json!({
            "model": out,
            "config_hash": model.config_hash,
            "provenance": model.provenance,
            "states": states.iter().map(|m| json!({
                "state": m.state(),
                "samples": m.sample_count(),
                "bandwidths": m.bandwidths(),
            })).collect::<Vec<_>>(),
        })),
    };
    emit(stdout, None, &text)
}

/// Checks a loaded model against itself, the trace rate and the config file.
fn check_model(
    model: &ModelFile,
    settings: &Settings,
    trace_rate: Option<f64>,
    strictness: Strictness,
) -> Result<(), CliError> {
    if !model.config_consistent() {
        return Err(CliError::validation("model config hash does not match its embedded config"));
    }
    if let Some(rate) = trace_rate {
        let expected = model.config.sample_rate;
        if ((rate - expected) / expected).abs() > 1e-9 {
            mismatch(
                strictness,
                format!("trace sample rate {rate} Hz differs from the model's {expected} Hz"),
            )?;
        }
    }
    if settings.estimator_given && settings.estimator.hash() != model.config_hash {
        mismatch(
            strictness,
            "[estimator] in the config file differs from the model's fit-time config; using the model's".into(),
        )?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    settings: &Settings,
    trace: &Path,
    model: &Path,
    mode: EstimatorMode,
    out: Option<&PathBuf>,
    strictness: Strictness,
    format: OutputFormat,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let model = ModelFile::read(model)?;
    let config = &model.config;
    let ingested = load(trace, config.leg_aggregation, strictness)?;
    check_model(&model, settings, Some(ingested.trace.sample_rate), strictness)?;
    let samples = ingested.steps.iter().map(|s| (s.acc_z, s.torque));
    let outputs = run_estimator(samples, &model.models, config, mode).map_err(touchdown_core::Error::from)?;
    let run = RunOutput::new(mode, config.threshold, &ingested.trace.timestamps(), &outputs);
    let text = match format {
        OutputFormat::Csv => run.to_csv(),
        OutputFormat::Summary => {
            let probs = run.probabilities();
            let events = detect_events_at(&probs, run.threshold, &run.timestamps());
            let contact_steps = probs.iter().filter(|&&p| p >= run.threshold).count();
            json_line(&json!({
                "format": "touchdown-run-summary",
                "version": 1,
                "mode": mode,
                "threshold": run.threshold,
                "steps": probs.len(),
                "contact_steps": contact_steps,
                "events": events,
            }))
        }
    };
    emit(stdout, out, &text)
}

fn eval(
    run_path: &Path,
    trace_path: &Path,
    window: f64,
    out: Option<&PathBuf>,
    strictness: Strictness,
    format: OutputFormat,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if !(window.is_finite() && window > 0.0) {
        return Err(CliError::validation(format!("--window {window} must be positive")));
    }
    let text = fs::read_to_string(run_path).map_err(|e| CliError::io(run_path, e))?;
    let run = RunOutput::parse(&text)?;
    let (trace, skipped) = Trace::read(trace_path, strictness)?;
    report_skipped(trace_path, &skipped);
    let labels = trace
        .labels()
        .ok_or_else(|| CliError::validation(format!("{}: trace has no ground-truth labels", trace_path.display())))?;
    if run.rows.len() != trace.len() {
        return Err(CliError::validation(format!(
            "run output has {} rows but the trace has {}",
            run.rows.len(),
            trace.len()
        )));
    }
    if let Some((r, t)) = run
        .rows
        .iter()
        .zip(&trace.records)
        .find(|(r, t)| (r.timestamp - t.timestamp).abs() > 1e-9)
    {
        return Err(CliError::validation(format!(
            "run timestamp {} does not line up with trace timestamp {}",
            r.timestamp, t.timestamp
        )));
    }
    let probs = run.probabilities();
    let pointwise = pointwise_metrics(&probs, &labels, run.threshold).map_err(touchdown_core::Error::from)?;
    let detected: Vec<Event> = detect_events_at(&probs, run.threshold, &trace.timestamps());
    let events = match_events(&detected, &trace.events(), window);
    let latency = latency_stats(&events);
    let text = match format {
        OutputFormat::Summary => json_line(&json!({
            "format": "touchdown-eval",
            "version": 1,
            "mode": run.mode,
            "pointwise": pointwise,
            "events": events,
            "latency": latency,
        })),
        OutputFormat::Csv => {
            let mut rows: Vec<(&str, &str, &str, String)> = vec![
                ("pointwise", "all", "threshold", pointwise.threshold.to_string()),
                ("pointwise", "all", "steps", pointwise.steps.to_string()),
                ("pointwise", "all", "success_rate", pointwise.success_rate.to_string()),
            ];
            for state in [ContactState::Contact, ContactState::NoContact] {
                let c = pointwise.class(state);
                let key = state.as_str();
                rows.push(("pointwise", key, "precision", metric(c.precision)));
                rows.push(("pointwise", key, "recall", metric(c.recall)));
                rows.push(("pointwise", key, "tp", c.tp.to_string()));
                rows.push(("pointwise", key, "fp", c.fp.to_string()));
                rows.push(("pointwise", key, "fn", c.fn_.to_string()));
                rows.push(("pointwise", key, "tn", c.tn.to_string()));
            }
            for (key, k, l) in [
                ("takeoff", &events.takeoff, &latency.takeoff),
                ("landing", &events.landing, &latency.landing),
            ] {
                rows.push(("events", key, "truth", k.truth_count.to_string()));
                rows.push(("events", key, "detected", k.detected_count.to_string()));
                rows.push(("events", key, "precision", metric(k.precision)));
                rows.push(("events", key, "recall", metric(k.recall)));
                rows.push(("events", key, "false_positives", k.false_positives.len().to_string()));
                rows.push(("events", key, "missed", k.missed.len().to_string()));
                rows.push(("events", key, "excluded", k.excluded.len().to_string()));
                rows.push(("latency", key, "count", l.count.to_string()));
                rows.push(("latency", key, "mean_ms", metric(l.mean_ms)));
                rows.push(("latency", key, "std_ms", metric(l.std_ms)));
            }
            let mut s = format!("# touchdown-eval v1\n# window: {window}\ntable,key,metric,value\n");
            for (table, key, name, value) in rows {
                s.push_str(&format!("{table},{key},{name},{value}\n"));
            }
            s
        }
    };
    emit(stdout, out, &text)
}

fn metric(m: Metric) -> String {
    match m.value() {
        Some(v) => v.to_string(),
        None => "undefined".into(),
    }
}

pub(crate) fn json_line(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}
