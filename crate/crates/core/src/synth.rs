//! Phase-based synthetic drop scenarios.
//!
//! A trace is `drops` repetitions of roll (contact) → fall (no contact) →
//! stabilization (contact). Torques are drawn per leg from a per-state
//! Gaussian; the accelerometer reads gravity plus vibration in contact, zero
//! in free fall, a smooth bump right after takeoff and a short impulse at
//! landing. Sensor noise is drawn from its own RNG stream so that the clean
//! signal for a given seed is identical at every noise level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::LegAggregation;
use crate::trace::{Trace, TraceRecord};
use crate::types::{ContactState, TorqueSample};

pub const GRAVITY: f64 = 9.81;

const SIGNAL_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const FIT_CONTACT_STREAM: u64 = 2;
const FIT_NO_CONTACT_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid scenario parameter `{field}`: {reason}")]
pub struct ScenarioError {
    pub field: &'static str,
    pub reason: String,
}

/// Per-leg Gaussian torque emission `(knee, wheel)` in Nm. Means are
/// magnitudes; signs are applied per leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorqueEmission {
    pub mean: [f64; 2],
    pub stddev: [f64; 2],
}

/// Additive zero-mean Gaussian sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseLevels {
    /// Nm, applied to both knee channels.
    pub knee: f64,
    /// Nm, applied to both wheel channels.
    pub wheel: f64,
    /// m/s².
    pub acc: f64,
}

impl NoiseLevels {
    pub const fn new(knee: f64, wheel: f64, acc: f64) -> Self {
        Self { knee, wheel, acc }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub sample_rate: f64,
    /// Seconds.
    pub roll_duration: f64,
    pub fall_duration: f64,
    pub stabilization_duration: f64,
    pub drops: usize,
    pub contact_torque: TorqueEmission,
    pub no_contact_torque: TorqueEmission,
    /// Samples over which torques fade from contact to no-contact after takeoff.
    pub takeoff_ramp: usize,
    /// Samples over which torques rise back after landing.
    pub landing_ramp: usize,
    /// Vibration stddev while in contact (m/s²).
    pub contact_vibration: f64,
    pub takeoff_bump_amplitude: f64,
    /// Samples.
    pub takeoff_bump_width: usize,
    pub landing_impulse_amplitude: f64,
    /// Samples.
    pub landing_impulse_width: usize,
    pub noise: NoiseLevels,
    /// Size of each fit pool.
    pub fit_samples: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            sample_rate: 200.0,
            roll_duration: 2.0,
            fall_duration: 0.35,
            stabilization_duration: 1.0,
            drops: 10,
            contact_torque: TorqueEmission {
                mean: [10.0, 3.0],
                stddev: [2.0, 1.0],
            },
            no_contact_torque: TorqueEmission {
                mean: [0.0, 0.0],
                stddev: [0.3, 0.1],
            },
            takeoff_ramp: 6,
            landing_ramp: 2,
            contact_vibration: 0.2,
            takeoff_bump_amplitude: 8.0,
            takeoff_bump_width: 20,
            landing_impulse_amplitude: 40.0,
            landing_impulse_width: 2,
            noise: NoiseLevels::default(),
            fit_samples: 2000,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |field, reason: String| Err(ScenarioError { field, reason });
        let positive = [
            ("sample_rate", self.sample_rate),
            ("roll_duration", self.roll_duration),
            ("fall_duration", self.fall_duration),
            ("stabilization_duration", self.stabilization_duration),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return fail(field, format!("{v} must be positive"));
            }
        }
        let non_negative = [
            ("contact_torque.mean", self.contact_torque.mean[0].min(self.contact_torque.mean[1])),
            ("contact_torque.stddev", self.contact_torque.stddev[0].min(self.contact_torque.stddev[1])),
            ("no_contact_torque.mean", self.no_contact_torque.mean[0].min(self.no_contact_torque.mean[1])),
            ("no_contact_torque.stddev", self.no_contact_torque.stddev[0].min(self.no_contact_torque.stddev[1])),
            ("contact_vibration", self.contact_vibration),
            ("takeoff_bump_amplitude", self.takeoff_bump_amplitude),
            ("landing_impulse_amplitude", self.landing_impulse_amplitude),
            ("noise.knee", self.noise.knee),
            ("noise.wheel", self.noise.wheel),
            ("noise.acc", self.noise.acc),
        ];
        for (field, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return fail(field, format!("{v} must be finite and non-negative"));
            }
        }
        if self.drops == 0 {
            return fail("drops", "need at least one drop".into());
        }
        if self.fit_samples < 2 {
            return fail("fit_samples", format!("{} below 2", self.fit_samples));
        }
        let roll = self.samples(self.roll_duration);
        let fall = self.samples(self.fall_duration);
        let stab = self.samples(self.stabilization_duration);
        if roll == 0 || fall == 0 || stab == 0 {
            return fail("sample_rate", "every phase needs at least one sample".into());
        }
        if self.takeoff_ramp > fall || self.takeoff_bump_width > fall {
            return fail("fall_duration", "shorter than the takeoff ramp or bump".into());
        }
        if self.landing_ramp > stab || self.landing_impulse_width > stab {
            return fail(
                "stabilization_duration",
                "shorter than the landing ramp or impulse".into(),
            );
        }
        Ok(())
    }

    /// Same scenario with different noise and seed.
    pub fn with_noise(&self, noise: NoiseLevels, seed: u64) -> Self {
        Self {
            noise,
            seed,
            ..self.clone()
        }
    }

    fn samples(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate).round() as usize
    }

    /// Total samples in one generated trace.
    pub fn trace_len(&self) -> usize {
        self.drops
            * (self.samples(self.roll_duration)
                + self.samples(self.fall_duration)
                + self.samples(self.stabilization_duration))
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn sign(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Signed per-leg torques `[knee_l, knee_r, wheel_l, wheel_r]`.
/// Left knee positive, right knee negative; wheel direction is shared by both
/// legs and mirrored like the knees.
fn draw_legs(rng: &mut ChaCha8Rng, e: &TorqueEmission, wheel_sign: f64) -> [f64; 4] {
    let mut draw = |axis: usize| e.mean[axis] + e.stddev[axis] * normal(rng);
    let (kl, kr) = (draw(0), draw(0));
    let (wl, wr) = (draw(1), draw(1));
    [kl, -kr, wheel_sign * wl, -wheel_sign * wr]
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Roll,
    Fall,
    Stabilize,
}

/// Noise-free signals plus labels; noise is added in a second pass.
struct CleanSample {
    torques: [f64; 4],
    acc: f64,
    label: ContactState,
}

fn clean_samples(config: &ScenarioConfig) -> Vec<CleanSample> {
    let mut rng = rng_for(config.seed, SIGNAL_STREAM);
    let mut out = Vec::with_capacity(config.trace_len());
    let phases = [
        (Phase::Roll, config.samples(config.roll_duration)),
        (Phase::Fall, config.samples(config.fall_duration)),
        (Phase::Stabilize, config.samples(config.stabilization_duration)),
    ];
    for _ in 0..config.drops {
        for (phase, len) in phases {
            let wheel_sign = sign(&mut rng);
            for i in 0..len {
                let contact = draw_legs(&mut rng, &config.contact_torque, wheel_sign);
                let free = draw_legs(&mut rng, &config.no_contact_torque, wheel_sign);
                let vibration = config.contact_vibration * normal(&mut rng);
                let (weight, acc, label) = match phase {
                    Phase::Roll => (1.0, GRAVITY + vibration, ContactState::Contact),
                    Phase::Fall => {
                        let n = config.takeoff_ramp;
                        let w = if i < n { 1.0 - (i + 1) as f64 / n as f64 } else { 0.0 };
                        let width = config.takeoff_bump_width;
                        let bump = if i < width {
                            let x = std::f64::consts::PI * (i as f64 + 0.5) / width as f64;
                            config.takeoff_bump_amplitude * x.sin()
                        } else {
                            0.0
                        };
                        (w, bump, ContactState::NoContact)
                    }
                    Phase::Stabilize => {
                        let n = config.landing_ramp;
                        let w = if i < n { (i + 1) as f64 / n as f64 } else { 1.0 };
                        let impulse = if i < config.landing_impulse_width {
                            config.landing_impulse_amplitude
                        } else {
                            0.0
                        };
                        (w, GRAVITY + vibration + impulse, ContactState::Contact)
                    }
                };
                let mut torques = [0.0; 4];
                for k in 0..4 {
                    torques[k] = weight * contact[k] + (1.0 - weight) * free[k];
                }
                out.push(CleanSample {
                    torques,
                    acc,
                    label,
                });
            }
        }
    }
    out
}

fn add_noise(rng: &mut ChaCha8Rng, noise: &NoiseLevels, torques: [f64; 4], acc: f64) -> ([f64; 4], f64) {
    // Every draw is taken even at zero sigma so streams stay aligned across noise levels.
    let sig = [noise.knee, noise.knee, noise.wheel, noise.wheel];
    let mut t = torques;
    for k in 0..4 {
        t[k] += sig[k] * normal(rng);
    }
    (t, acc + noise.acc * normal(rng))
}

/// Generates one labeled drop-scenario trace.
pub fn generate_trace(config: &ScenarioConfig) -> Result<Trace, ScenarioError> {
    Ok(generate_trace_pair(config)?.1)
}

/// Returns the noise-free trace and its noisy counterpart.
pub fn generate_trace_pair(config: &ScenarioConfig) -> Result<(Trace, Trace), ScenarioError> {
    config.validate()?;
    let mut noise_rng = rng_for(config.seed, NOISE_STREAM);
    let mut clean = Vec::with_capacity(config.trace_len());
    let mut noisy = Vec::with_capacity(config.trace_len());
    for (i, s) in clean_samples(config).into_iter().enumerate() {
        let timestamp = i as f64 / config.sample_rate;
        let record = |t: [f64; 4], acc: f64| TraceRecord {
            timestamp,
            knee_left: t[0],
            knee_right: t[1],
            wheel_left: t[2],
            wheel_right: t[3],
            acc_z: acc,
            label: Some(s.label),
        };
        let (t, acc) = add_noise(&mut noise_rng, &config.noise, s.torques, s.acc);
        clean.push(record(s.torques, s.acc));
        noisy.push(record(t, acc));
    }
    let wrap = |records| Trace {
        sample_rate: config.sample_rate,
        records,
    };
    Ok((wrap(clean), wrap(noisy)))
}

fn fit_trace(config: &ScenarioConfig, state: ContactState) -> Trace {
    let (stream, emission) = match state {
        ContactState::Contact => (FIT_CONTACT_STREAM, &config.contact_torque),
        ContactState::NoContact => (FIT_NO_CONTACT_STREAM, &config.no_contact_torque),
    };
    let mut rng = rng_for(config.seed, stream);
    let mut noise_rng = rng_for(config.seed, stream + 2);
    let records = (0..config.fit_samples)
        .map(|i| {
            let wheel_sign = sign(&mut rng);
            let torques = draw_legs(&mut rng, emission, wheel_sign);
            // Balancing and tethered captures both hold the body still.
            let acc = GRAVITY + config.contact_vibration * normal(&mut rng);
            let (t, acc) = add_noise(&mut noise_rng, &config.noise, torques, acc);
            TraceRecord {
                timestamp: i as f64 / config.sample_rate,
                knee_left: t[0],
                knee_right: t[1],
                wheel_left: t[2],
                wheel_right: t[3],
                acc_z: acc,
                label: Some(state),
            }
        })
        .collect();
    Trace {
        sample_rate: config.sample_rate,
        records,
    }
}

/// Stationary contact and no-contact capture traces for fitting.
pub fn generate_fit_traces(config: &ScenarioConfig) -> Result<(Trace, Trace), ScenarioError> {
    config.validate()?;
    Ok((
        fit_trace(config, ContactState::Contact),
        fit_trace(config, ContactState::NoContact),
    ))
}

/// The fit traces reduced to measurement pools `(contact, no_contact)`.
pub fn generate_fit_dataset(
    config: &ScenarioConfig,
    aggregation: LegAggregation,
) -> Result<(Vec<TorqueSample>, Vec<TorqueSample>), ScenarioError> {
    let (c, n) = generate_fit_traces(config)?;
    Ok((c.torques(aggregation), n.torques(aggregation)))
}
