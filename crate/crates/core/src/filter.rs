//! Two-state recursive Bayes filter over ground contact.
//!
//! Each step pushes one vertical acceleration sample into the window,
//! derives a transition matrix from the window spectrum, predicts, and then
//! reweights the prediction by the KDE likelihoods of the torque measurement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{EstimatorConfig, SigmoidParams, SwitchFeature};
use crate::density::KdeModel;
use crate::signal::{median_frequency, AccelWindow, SignalError, SpectrumAnalyzer};
use crate::types::{ContactState, TorqueSample};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("non-finite acceleration sample: {0}")]
    NonFiniteAccel(f64),
    #[error("torque measurement ({knee}, {wheel}) is not finite and non-negative")]
    InvalidTorque { knee: f64, wheel: f64 },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Logistic curve `1 / (1 + exp(-slope * (x - offset)))`, evaluated without overflow.
pub fn sigmoid(x: f64, offset: f64, slope: f64) -> f64 {
    let z = slope * (x - offset);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Posterior over the two contact states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub p_contact: f64,
    pub p_no_contact: f64,
}

impl Belief {
    pub fn flat() -> Self {
        Self::from_contact(0.5)
    }

    pub fn from_contact(p_contact: f64) -> Self {
        let p = p_contact.clamp(0.0, 1.0);
        Self {
            p_contact: p,
            p_no_contact: 1.0 - p,
        }
    }

    pub fn prob(&self, state: ContactState) -> f64 {
        match state {
            ContactState::Contact => self.p_contact,
            ContactState::NoContact => self.p_no_contact,
        }
    }

    fn clamped(self, eps: f64) -> Self {
        if self.p_contact < eps || self.p_contact > 1.0 - eps {
            Self::from_contact(self.p_contact.clamp(eps, 1.0 - eps))
        } else {
            self
        }
    }
}

/// Transition probabilities as a switch probability times a direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    /// Probability that the state changes this step.
    pub p_switch: f64,
    /// Probability that a switch ends in contact (a landing).
    pub p_land_given_switch: f64,
}

impl TransitionMatrix {
    pub fn new(p_switch: f64, p_land_given_switch: f64) -> Self {
        Self {
            p_switch: p_switch.clamp(0.0, 1.0),
            p_land_given_switch: p_land_given_switch.clamp(0.0, 1.0),
        }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.5)
    }

    /// `P(to | from)`.
    pub fn prob(&self, to: ContactState, from: ContactState) -> f64 {
        use ContactState::*;
        let land = self.p_switch * self.p_land_given_switch;
        let takeoff = self.p_switch * (1.0 - self.p_land_given_switch);
        match (to, from) {
            (Contact, NoContact) => land,
            (NoContact, NoContact) => 1.0 - land,
            (NoContact, Contact) => takeoff,
            (Contact, Contact) => 1.0 - takeoff,
        }
    }
}

/// Transition matrix plus the spectral features it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionEstimate {
    pub matrix: TransitionMatrix,
    /// Switch-sigmoid input; `None` while the window is still filling.
    pub switch_feature: Option<f64>,
    /// `None` while filling or when the spectrum carries no power.
    pub median_frequency: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionParams {
    pub switch: SigmoidParams,
    pub direction: SigmoidParams,
    pub feature: SwitchFeature,
}

impl From<&EstimatorConfig> for TransitionParams {
    fn from(c: &EstimatorConfig) -> Self {
        Self {
            switch: c.switch_sigmoid,
            direction: c.direction_sigmoid,
            feature: c.switch_feature,
        }
    }
}

impl TransitionParams {
    /// Matrix used before the window has filled: switch sigmoid at zero power,
    /// no preferred direction.
    pub fn warmup_matrix(&self) -> TransitionMatrix {
        TransitionMatrix::new(self.switch.eval(0.0), 0.5)
    }
}

/// Transition model for the current window contents.
pub fn transition_model(
    analyzer: &mut SpectrumAnalyzer,
    window: &AccelWindow,
    params: &TransitionParams,
) -> Result<TransitionEstimate, SignalError> {
    let spectrum = analyzer.power_spectrum(window)?;
    let feature = match params.feature {
        SwitchFeature::TotalPower => spectrum.total_power,
        SwitchFeature::MaxBin => spectrum.max_bin(),
    };
    let p_switch = params.switch.eval(feature);
    let median = median_frequency(&spectrum).ok();
    let p_land = median.map_or(0.5, |m| params.direction.eval(m));
    Ok(TransitionEstimate {
        matrix: TransitionMatrix::new(p_switch, p_land),
        switch_feature: Some(feature),
        median_frequency: median,
    })
}

/// Prediction step: pushes the belief through the transition matrix.
pub fn predict(belief: &Belief, trans: &TransitionMatrix) -> Belief {
    use ContactState::*;
    let c = trans.prob(Contact, Contact) * belief.p_contact
        + trans.prob(Contact, NoContact) * belief.p_no_contact;
    let n = trans.prob(NoContact, Contact) * belief.p_contact
        + trans.prob(NoContact, NoContact) * belief.p_no_contact;
    let total = c + n;
    Belief {
        p_contact: c / total,
        p_no_contact: n / total,
    }
}

/// Update step from raw likelihood values, computed in log space.
pub fn update_with_likelihoods(prior: &Belief, lik_contact: f64, lik_no_contact: f64) -> Belief {
    let lc = lik_contact.ln() + prior.p_contact.ln();
    let ln = lik_no_contact.ln() + prior.p_no_contact.ln();
    let top = lc.max(ln);
    if !top.is_finite() {
        return *prior;
    }
    let ec = (lc - top).exp();
    let en = (ln - top).exp();
    let eta = ec + en;
    Belief {
        p_contact: ec / eta,
        p_no_contact: en / eta,
    }
}

/// The pair of fitted likelihood models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub contact: KdeModel,
    pub no_contact: KdeModel,
}

impl MeasurementModel {
    pub fn likelihoods(&self, m: &TorqueSample) -> (f64, f64) {
        (self.contact.likelihood(m), self.no_contact.likelihood(m))
    }
}

/// Update step: `posterior ∝ f_S(m) · prior`.
pub fn update(prior: &Belief, m: &TorqueSample, models: &MeasurementModel) -> Belief {
    let (lc, ln) = models.likelihoods(m);
    update_with_likelihoods(prior, lc, ln)
}

/// Normalized likelihood ratio `f_C / (f_C + f_¬C)`.
pub fn contact_probability(lik_contact: f64, lik_no_contact: f64) -> f64 {
    update_with_likelihoods(&Belief::flat(), lik_contact, lik_no_contact).p_contact
}

/// Stateless contact probability from the torque measurement alone.
pub fn measurement_only(m: &TorqueSample, models: &MeasurementModel) -> f64 {
    let (lc, ln) = models.likelihoods(m);
    contact_probability(lc, ln)
}

/// Everything one filter step produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    pub belief: Belief,
    pub transition: TransitionEstimate,
    pub lik_contact: f64,
    pub lik_no_contact: f64,
}

/// Streaming filter state for one robot.
#[derive(Debug, Clone)]
pub struct ContactFilter {
    belief: Belief,
    window: AccelWindow,
    analyzer: SpectrumAnalyzer,
    params: TransitionParams,
    clamp: f64,
    steps: u64,
}

impl ContactFilter {
    /// Starts from the configured prior (flat by default).
    pub fn new(config: &EstimatorConfig) -> Result<Self, SignalError> {
        Ok(Self {
            belief: Belief::from_contact(config.prior_contact),
            window: AccelWindow::new(config.window_len, config.sample_rate)?,
            analyzer: SpectrumAnalyzer::new(config.window_len, config.taper, config.remove_mean),
            params: TransitionParams::from(config),
            clamp: config.belief_clamp,
            steps: 0,
        })
    }

    pub fn belief(&self) -> Belief {
        self.belief
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn window(&self) -> &AccelWindow {
        &self.window
    }

    /// Transition estimate for the current window (warm-up matrix until full).
    pub fn current_transition(&mut self) -> TransitionEstimate {
        if !self.window.is_full() {
            return TransitionEstimate {
                matrix: self.params.warmup_matrix(),
                switch_feature: None,
                median_frequency: None,
            };
        }
        transition_model(&mut self.analyzer, &self.window, &self.params)
            .expect("full window of matching length")
    }

    /// Advances the filter with an externally supplied transition matrix and
    /// likelihood pair.
    pub fn advance(&mut self, trans: &TransitionMatrix, lik_contact: f64, lik_no_contact: f64) -> Belief {
        let prior = predict(&self.belief.clamped(self.clamp), trans);
        self.belief = update_with_likelihoods(&prior, lik_contact, lik_no_contact);
        self.steps += 1;
        self.belief
    }

    /// One synchronous accelerometer + torque sample. On error the state is untouched.
    pub fn step(
        &mut self,
        acc_z: f64,
        m: &TorqueSample,
        models: &MeasurementModel,
    ) -> Result<StepOutput, FilterError> {
        if !acc_z.is_finite() {
            return Err(FilterError::NonFiniteAccel(acc_z));
        }
        if TorqueSample::new(m.knee, m.wheel).is_none() {
            return Err(FilterError::InvalidTorque {
                knee: m.knee,
                wheel: m.wheel,
            });
        }
        self.window.push(acc_z)?;
        let transition = self.current_transition();
        let (lik_contact, lik_no_contact) = models.likelihoods(m);
        let belief = self.advance(&transition.matrix, lik_contact, lik_no_contact);
        Ok(StepOutput {
            belief,
            transition,
            lik_contact,
            lik_no_contact,
        })
    }
}

/// Which estimator produces the contact probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    #[default]
    Bayes,
    MeasurementOnly,
}

/// Per-step record from [`run_estimator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOutput {
    pub p_contact: f64,
    pub p_switch: Option<f64>,
    pub median_frequency: Option<f64>,
}

/// Runs one estimator over a sequence of `(acc_z, torque)` samples.
pub fn run_estimator(
    samples: impl IntoIterator<Item = (f64, TorqueSample)>,
    models: &MeasurementModel,
    config: &EstimatorConfig,
    mode: EstimatorMode,
) -> Result<Vec<EstimatorOutput>, FilterError> {
    let samples = samples.into_iter();
    let mut out = Vec::with_capacity(samples.size_hint().0);
    match mode {
        EstimatorMode::Bayes => {
            let mut filter = ContactFilter::new(config)?;
            for (acc, m) in samples {
                let step = filter.step(acc, &m, models)?;
                out.push(EstimatorOutput {
                    p_contact: step.belief.p_contact,
                    p_switch: Some(step.transition.matrix.p_switch),
                    median_frequency: step.transition.median_frequency,
                });
            }
        }
        EstimatorMode::MeasurementOnly => {
            for (_, m) in samples {
                out.push(EstimatorOutput {
                    p_contact: measurement_only(&m, models),
                    p_switch: None,
                    median_frequency: None,
                });
            }
        }
    }
    Ok(out)
}
