use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::density::{BandwidthRule, Interpolation, KdeConfig, DEFAULT_DENSITY_FLOOR, DEFAULT_GRID_RESOLUTION};
use crate::error::{Error, Result};
use crate::signal::{Taper, MIN_WINDOW_LEN};

/// Offset and slope of a logistic curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidParams {
    pub offset: f64,
    pub slope: f64,
}

impl SigmoidParams {
    pub const fn new(offset: f64, slope: f64) -> Self {
        Self { offset, slope }
    }

    pub fn eval(&self, x: f64) -> f64 {
        crate::filter::sigmoid(x, self.offset, self.slope)
    }
}

/// Scalar summary of the window spectrum fed to the switch sigmoid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchFeature {
    #[default]
    TotalPower,
    MaxBin,
}

/// How per-leg torques collapse into one measurement vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LegAggregation {
    /// Mean of the per-leg absolute torques.
    #[default]
    Mean,
    Left,
    Right,
}

impl LegAggregation {
    pub fn combine(self, left: f64, right: f64) -> f64 {
        match self {
            LegAggregation::Mean => 0.5 * (left.abs() + right.abs()),
            LegAggregation::Left => left.abs(),
            LegAggregation::Right => right.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Maps window power to the switch probability.
    pub switch_sigmoid: SigmoidParams,
    /// Maps median frequency (bin units) to the probability a switch is a landing.
    pub direction_sigmoid: SigmoidParams,
    /// P(contact) at or above this is classified as contact.
    pub threshold: f64,
    pub prior_contact: f64,
    pub window_len: usize,
    pub sample_rate: f64,
    pub taper: Taper,
    /// Subtract the window mean (gravity) before the transform.
    pub remove_mean: bool,
    pub switch_feature: SwitchFeature,
    pub leg_aggregation: LegAggregation,
    pub density_floor: f64,
    pub grid_resolution: usize,
    pub bandwidth: BandwidthRule,
    pub interpolation: Interpolation,
    /// Beliefs are kept inside `[clamp, 1 - clamp]` before each prediction.
    pub belief_clamp: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            switch_sigmoid: SigmoidParams::new(8.0, 1.0),
            direction_sigmoid: SigmoidParams::new(7.5, 2.5),
            threshold: 0.8,
            prior_contact: 0.5,
            window_len: 32,
            sample_rate: 200.0,
            taper: Taper::Rectangular,
            remove_mean: true,
            switch_feature: SwitchFeature::TotalPower,
            leg_aggregation: LegAggregation::Mean,
            density_floor: DEFAULT_DENSITY_FLOOR,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            bandwidth: BandwidthRule::ScottIsotropic,
            interpolation: Interpolation::Bicubic,
            belief_clamp: 1e-9,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        for (name, s) in [
            ("switch_sigmoid", self.switch_sigmoid),
            ("direction_sigmoid", self.direction_sigmoid),
        ] {
            if !(s.slope.is_finite() && s.slope > 0.0 && s.offset.is_finite()) {
                return fail(format!("{name} needs a finite offset and positive slope"));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return fail(format!("threshold {} outside [0, 1]", self.threshold));
        }
        if !(self.prior_contact > 0.0 && self.prior_contact < 1.0) {
            return fail(format!("prior_contact {} outside (0, 1)", self.prior_contact));
        }
        if self.window_len < MIN_WINDOW_LEN {
            return fail(format!(
                "window_len {} below minimum {MIN_WINDOW_LEN}",
                self.window_len
            ));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return fail(format!("sample_rate {} must be positive", self.sample_rate));
        }
        if !(self.density_floor.is_finite() && self.density_floor > 0.0) {
            return fail(format!("density_floor {} must be positive", self.density_floor));
        }
        if self.grid_resolution < 2 {
            return fail(format!("grid_resolution {} below 2", self.grid_resolution));
        }
        if !(0.0..0.5).contains(&self.belief_clamp) {
            return fail(format!("belief_clamp {} outside [0, 0.5)", self.belief_clamp));
        }
        Ok(())
    }

    pub fn kde_config(&self) -> KdeConfig {
        KdeConfig {
            grid_resolution: self.grid_resolution,
            density_floor: self.density_floor,
            bandwidth: self.bandwidth,
            interpolation: self.interpolation,
        }
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
