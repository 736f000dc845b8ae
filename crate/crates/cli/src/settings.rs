//! TOML configuration file.
//!
//! ```toml
//! version = 1
//!
//! [estimator]
//! threshold = 0.8
//! window_len = 32
//!
//! [scenario]
//! drops = 10
//! noise = { knee = 0.25, wheel = 0.12, acc = 0.23 }
//!
//! [sweep]
//! episodes = 20
//! ```
//!
//! Every section and field is optional; missing values take their defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use touchdown_core::{EstimatorConfig, ScenarioConfig, SweepConfig};

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub version: u32,
    pub estimator: EstimatorConfig,
    pub scenario: ScenarioConfig,
    pub sweep: SweepConfig,
    /// Whether an `[estimator]` table was present in the file.
    #[serde(skip)]
    pub estimator_given: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            estimator: EstimatorConfig::default(),
            scenario: ScenarioConfig::default(),
            sweep: SweepConfig::default(),
            estimator_given: false,
        }
    }
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut s: Settings =
            toml::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))?;
        if s.version != CONFIG_VERSION {
            return Err(CliError::validation(format!(
                "config version {} not supported (expected {CONFIG_VERSION})",
                s.version
            )));
        }
        s.estimator_given = text
            .parse::<toml::Table>()
            .map(|t| t.contains_key("estimator"))
            .unwrap_or(false);
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.estimator.validate()?;
        self.scenario
            .validate()
            .map_err(touchdown_core::Error::from)?;
        self.sweep.validate().map_err(touchdown_core::Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let s = Settings::parse("").unwrap();
        assert_eq!(s.estimator, EstimatorConfig::default());
        assert!(!s.estimator_given);
    }

    #[test]
    fn sections_override_defaults() {
        let s = Settings::parse(
            "version = 1\n[estimator]\nthreshold = 0.7\ntaper = \"hann\"\n[scenario]\ndrops = 3\nnoise = { knee = 0.25 }\n",
        )
        .unwrap();
        assert_eq!(s.estimator.threshold, 0.7);
        assert_eq!(s.estimator.taper, touchdown_core::Taper::Hann);
        assert_eq!(s.scenario.drops, 3);
        assert_eq!(s.scenario.noise.knee, 0.25);
        assert!(s.estimator_given);
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(Settings::parse("[estimator]\nthreshhold = 0.7\n").is_err());
        assert!(Settings::parse("version = 2\n").is_err());
        assert!(Settings::parse("[scenario]\nfall_duration = -1.0\n").is_err());
    }
}
