//! Per-frame statistical EEG features at a 100 Hz frame rate.
//!
//! Each analysis window yields five statistics per channel — RMS, zero
//! crossing rate, window mean, kurtosis, power spectral entropy — giving
//! 31 x 5 = 155 dimensions per frame for the standard montage. Frame
//! features are concatenated channel-major, `[rms, zcr, avg, kurtosis, pse]`
//! within each channel.

mod io;

pub use io::{read_feature_file, write_feature_csv, write_feature_file};

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::EegRecording;

/// Number of scalar features computed per channel per frame.
pub const FEATURES_PER_CHANNEL: usize = 5;

/// Which pipeline stage produced a feature sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Raw 155-dim statistical features (31 channels x 5).
    Raw155,
    /// After kernel-PCA reduction to 30 dims.
    Kpca30,
    /// After the adversarial transform to 32 dims.
    Gan32,
}

impl Provenance {
    /// Expected feature dimension, if this provenance pins one.
    pub fn expected_dim(&self) -> Option<usize> {
        match self {
            Provenance::Raw155 => Some(155),
            Provenance::Kpca30 => Some(30),
            Provenance::Gan32 => Some(32),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Provenance::Raw155 => "raw155",
            Provenance::Kpca30 => "kpca30",
            Provenance::Gan32 => "gan32",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "raw155" => Ok(Provenance::Raw155),
            "kpca30" => Ok(Provenance::Kpca30),
            "gan32" => Ok(Provenance::Gan32),
            other => Err(Error::parameter(format!("unknown provenance tag {other}"))),
        }
    }

    pub(crate) fn byte(&self) -> u8 {
        match self {
            Provenance::Raw155 => 0,
            Provenance::Kpca30 => 1,
            Provenance::Gan32 => 2,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Provenance::Raw155),
            1 => Ok(Provenance::Kpca30),
            2 => Ok(Provenance::Gan32),
            other => Err(Error::parameter(format!("unknown provenance byte {other}"))),
        }
    }
}

/// Analysis framing: window length and hop in samples of the source signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub window_len_samples: usize,
    pub hop_samples: usize,
    pub source_rate_hz: f64,
}

impl WindowSpec {
    /// 100 ms windows hopped so the frame rate is exactly 100 Hz.
    ///
    /// Requires the source rate to be a positive multiple of 100 Hz so the
    /// hop is a whole number of samples.
    pub fn for_rate(source_rate_hz: f64) -> Result<Self> {
        Self::new(100, source_rate_hz)
    }

    pub fn new(window_len_samples: usize, source_rate_hz: f64) -> Result<Self> {
        if window_len_samples < 2 {
            return Err(Error::parameter("window length must be at least 2 samples"));
        }
        if !(source_rate_hz > 0.0) {
            return Err(Error::parameter("source rate must be positive"));
        }
        let hop = source_rate_hz / 100.0;
        if hop < 1.0 || hop.fract() != 0.0 {
            return Err(Error::parameter(format!(
                "sample rate {source_rate_hz} Hz does not give an integer hop at 100 Hz frames"
            )));
        }
        Ok(WindowSpec {
            window_len_samples,
            hop_samples: hop as usize,
            source_rate_hz,
        })
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.source_rate_hz / self.hop_samples as f64
    }

    /// Closed-form frame count for a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> Option<usize> {
        if len < self.window_len_samples {
            None
        } else {
            Some((len - self.window_len_samples) / self.hop_samples + 1)
        }
    }
}

/// A time-major feature matrix with its provenance and source metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub frames: Array2<f64>,
    pub frame_rate_hz: f64,
    pub provenance: Provenance,
    pub recording_id: String,
    pub transcript: String,
}

impl FeatureSequence {
    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frames.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.provenance.expected_dim() {
            if self.dim() != d {
                return Err(Error::parameter(format!(
                    "feature sequence {}: provenance {} expects dim {}, got {}",
                    self.recording_id,
                    self.provenance.tag(),
                    d,
                    self.dim()
                )));
            }
        }
        if self.frames.iter().any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!(
                "feature sequence {}: non-finite entry",
                self.recording_id
            )));
        }
        Ok(())
    }
}

/// Root mean square of the window.
pub fn rms(window: &[f64]) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::parameter("rms of empty window"));
    }
    let sum_sq: f64 = window.iter().map(|v| v * v).sum();
    Ok((sum_sq / window.len() as f64).sqrt())
}

/// Fraction of adjacent sample pairs that change sign. Zeros count as
/// positive, so constants report 0.
pub fn zero_crossing_rate(window: &[f64]) -> Result<f64> {
    if window.len() < 2 {
        return Err(Error::parameter("zero crossing rate needs >= 2 samples"));
    }
    let sign = |v: f64| v >= 0.0;
    let crossings = window
        .windows(2)
        .filter(|pair| sign(pair[0]) != sign(pair[1]))
        .count();
    Ok(crossings as f64 / (window.len() - 1) as f64)
}

/// Arithmetic mean of the window.
pub fn moving_window_average(window: &[f64]) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::parameter("average of empty window"));
    }
    Ok(window.iter().sum::<f64>() / window.len() as f64)
}

/// Pearson sample kurtosis m4 / m2^2 (not excess); zero-variance windows map
/// to 0 by convention.
pub fn kurtosis(window: &[f64]) -> Result<f64> {
    if window.len() < 4 {
        return Err(Error::parameter("kurtosis needs >= 4 samples"));
    }
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &v in window {
        let d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    if m2 < 1e-12 {
        return Ok(0.0);
    }
    Ok(m4 / (m2 * m2))
}

/// Shannon entropy of the normalized one-sided periodogram (DC excluded),
/// scaled by log(#bins) into [0, 1]. Zero-power windows map to 0.
pub fn power_spectral_entropy(window: &[f64]) -> Result<f64> {
    if window.len() < 4 {
        return Err(Error::parameter("spectral entropy needs >= 4 samples"));
    }
    let n = window.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut buf: Vec<Complex<f64>> = window.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);

    let n_bins = n / 2; // bins 1..=n/2, DC excluded
    let power: Vec<f64> = (1..=n_bins).map(|k| buf[k].norm_sqr()).collect();
    let total: f64 = power.iter().sum();
    if total < 1e-12 {
        return Ok(0.0);
    }
    let mut entropy = 0.0;
    for p in power {
        let q = p / total;
        if q > 0.0 {
            entropy -= q * q.ln();
        }
    }
    Ok(entropy / (n_bins as f64).ln())
}

/// Frames a recording and computes the per-channel statistics, channel-major.
pub fn extract_features(recording: &EegRecording, spec: &WindowSpec) -> Result<FeatureSequence> {
    recording.validate()?;
    if (recording.sample_rate_hz - spec.source_rate_hz).abs() > 1e-9 {
        return Err(Error::parameter(format!(
            "window spec is for {} Hz but recording {} is {} Hz",
            spec.source_rate_hz, recording.id, recording.sample_rate_hz
        )));
    }
    let len = recording.n_samples();
    let n_frames = spec.frame_count(len).ok_or_else(|| {
        Error::parameter(format!(
            "recording {} has {} samples, shorter than one {}-sample window",
            recording.id, len, spec.window_len_samples
        ))
    })?;

    let n_ch = recording.n_channels();
    let dim = n_ch * FEATURES_PER_CHANNEL;
    let mut frames = Array2::zeros((n_frames, dim));
    let mut window = vec![0.0f64; spec.window_len_samples];
    for t in 0..n_frames {
        let start = t * spec.hop_samples;
        for ch in 0..n_ch {
            for (i, w) in window.iter_mut().enumerate() {
                *w = recording.data[[ch, start + i]];
            }
            let base = ch * FEATURES_PER_CHANNEL;
            frames[[t, base]] = rms(&window)?;
            frames[[t, base + 1]] = zero_crossing_rate(&window)?;
            frames[[t, base + 2]] = moving_window_average(&window)?;
            frames[[t, base + 3]] = kurtosis(&window)?;
            frames[[t, base + 4]] = power_spectral_entropy(&window)?;
        }
    }

    Ok(FeatureSequence {
        frames,
        frame_rate_hz: spec.frame_rate_hz(),
        provenance: Provenance::Raw155,
        recording_id: recording.id.clone(),
        transcript: recording.transcript.clone(),
    })
}
