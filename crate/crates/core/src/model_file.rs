//! Fitted model files: both KDEs, the estimator configuration they were fit
//! under, and a hash of the fit inputs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::EstimatorConfig;
use crate::density::fit_kde;
use crate::error::{Error, Result};
use crate::filter::MeasurementModel;
use crate::trace::FormatError;
use crate::types::{ContactState, TorqueSample};

pub const MODEL_FORMAT: &str = "touchdown-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub config: EstimatorConfig,
    pub config_hash: String,
    /// SHA-256 over the fit samples (bit patterns, in order).
    pub provenance: String,
    pub models: MeasurementModel,
}

/// Hash of two sample pools, independent of how they were stored on disk.
pub fn samples_hash(contact: &[TorqueSample], no_contact: &[TorqueSample]) -> String {
    let mut h = Sha256::new();
    for pool in [contact, no_contact] {
        h.update((pool.len() as u64).to_le_bytes());
        for m in pool {
            h.update(m.knee.to_bits().to_le_bytes());
            h.update(m.wheel.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

impl ModelFile {
    /// Fits both state models under `config`.
    pub fn fit(
        contact: &[TorqueSample],
        no_contact: &[TorqueSample],
        config: &EstimatorConfig,
    ) -> Result<Self> {
        config.validate()?;
        let kde = config.kde_config();
        let models = MeasurementModel {
            contact: fit_kde(contact, ContactState::Contact, &kde)?,
            no_contact: fit_kde(no_contact, ContactState::NoContact, &kde)?,
        };
        Ok(Self {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            config: config.clone(),
            config_hash: config.hash(),
            provenance: samples_hash(contact, no_contact),
            models,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
        if header.format != MODEL_FORMAT {
            return Err(FormatError::WrongFormat {
                found: header.format,
                expected: MODEL_FORMAT,
            });
        }
        if header.version != MODEL_VERSION {
            return Err(FormatError::VersionMismatch {
                found: header.version.to_string(),
                expected: MODEL_VERSION,
            });
        }
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
        for m in [&file.models.contact, &file.models.no_contact] {
            m.validate()
                .map_err(|e| FormatError::Json(format!("invalid model: {e}")))?;
        }
        if file.models.contact.state() != ContactState::Contact
            || file.models.no_contact.state() != ContactState::NoContact
        {
            return Err(FormatError::Json("model states are swapped".into()));
        }
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_json(&text)?)
    }

    /// True when the embedded hash matches the embedded config.
    pub fn config_consistent(&self) -> bool {
        self.config.hash() == self.config_hash
    }
}
