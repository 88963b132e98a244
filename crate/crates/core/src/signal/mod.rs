//! Raw EEG ingestion and cleanup: band-pass / notch IIR filtering followed by
//! ICA-based artifact rejection.
//!
//! The stage order is filter -> notch -> ICA; every operation is pure and
//! deterministic, so recordings can be processed independently.

mod filter;
mod ica;

pub use filter::{design_bandpass, design_notch, apply_filter, FilterKind, IirFilter};
pub use ica::{fit_ica, reject_artifacts, IcaModel};

use ndarray::Array2;

use crate::error::{Error, Result};

/// A multichannel EEG recording plus the metadata the pipeline carries along.
///
/// `data` is channels x samples in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    pub channels: Vec<String>,
    pub data: Array2<f64>,
    pub sample_rate_hz: f64,
    pub id: String,
    pub transcript: String,
    pub subject: String,
    pub dataset_tag: String,
}

impl EegRecording {
    /// Checks the structural invariants: row count matches the channel list,
    /// all samples finite, positive sample rate, at least one sample.
    pub fn validate(&self) -> Result<()> {
        if self.data.nrows() != self.channels.len() {
            return Err(Error::parameter(format!(
                "recording {}: {} data rows but {} channel labels",
                self.id,
                self.data.nrows(),
                self.channels.len()
            )));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::parameter(format!(
                "recording {}: sample rate must be positive",
                self.id
            )));
        }
        if self.data.ncols() == 0 {
            return Err(Error::parameter(format!(
                "recording {}: no samples",
                self.id
            )));
        }
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!(
                "recording {}: non-finite sample",
                self.id
            )));
        }
        Ok(())
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    /// Same metadata, new signal matrix.
    pub fn with_data(&self, data: Array2<f64>) -> Self {
        EegRecording {
            data,
            channels: self.channels.clone(),
            sample_rate_hz: self.sample_rate_hz,
            id: self.id.clone(),
            transcript: self.transcript.clone(),
            subject: self.subject.clone(),
            dataset_tag: self.dataset_tag.clone(),
        }
    }
}
