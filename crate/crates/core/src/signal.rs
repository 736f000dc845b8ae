//! Windowed spectral analysis of vertical acceleration.
//!
//! An [`AccelWindow`] keeps the most recent `N` vertical accelerometer samples.
//! [`SpectrumAnalyzer`] turns a full window into a one-sided [`PowerSpectrum`]
//! with bins `A(k) = |X(k)|² / N` for `k = 0..=N/2`, and [`median_frequency`]
//! locates the frequency that splits the spectral energy into two halves.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest window the transition model accepts.
pub const MIN_WINDOW_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("non-finite acceleration sample: {0}")]
    NonFinite(f64),
    #[error("window holds {filled} of {capacity} samples")]
    InsufficientData { filled: usize, capacity: usize },
    #[error("window length {0} is below the minimum of {MIN_WINDOW_LEN}")]
    WindowTooShort(usize),
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
    #[error("spectrum has no power")]
    DegenerateSpectrum,
    #[error("analyzer built for {expected} samples, window has {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Ring buffer of the most recent vertical accelerations (m/s²), oldest first.
#[derive(Clone)]
pub struct AccelWindow {
    buf: Vec<f64>,
    head: usize,
    len: usize,
    sample_rate: f64,
}

impl AccelWindow {
    pub fn new(capacity: usize, sample_rate: f64) -> Result<Self, SignalError> {
        if capacity < MIN_WINDOW_LEN {
            return Err(SignalError::WindowTooShort(capacity));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(SignalError::InvalidSampleRate(sample_rate));
        }
        Ok(Self {
            buf: vec![0.0; capacity],
            head: 0,
            len: 0,
            sample_rate,
        })
    }

    /// Appends `acc_z`, evicting the oldest sample once the window is full.
    pub fn push(&mut self, acc_z: f64) -> Result<(), SignalError> {
        if !acc_z.is_finite() {
            return Err(SignalError::NonFinite(acc_z));
        }
        let cap = self.buf.len();
        let slot = (self.head + self.len) % cap;
        self.buf[slot] = acc_z;
        if self.len == cap {
            self.head = (self.head + 1) % cap;
        } else {
            self.len += 1;
        }
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.buf.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_full(&self) -> bool {
        self.len == self.buf.len()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn clear(&mut self) {
        self.head = 0;
        self.len = 0;
    }

    /// Samples from oldest to newest.
    pub fn iter(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let cap = self.buf.len();
        (0..self.len).map(move |i| self.buf[(self.head + i) % cap])
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.iter().collect()
    }
}

impl fmt::Debug for AccelWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AccelWindow")
            .field("capacity", &self.capacity())
            .field("sample_rate", &self.sample_rate)
            .field("samples", &self.to_vec())
            .finish()
    }
}

/// Taper applied to the window before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Taper {
    #[default]
    Rectangular,
    Hann,
}

impl Taper {
    pub fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Taper::Rectangular => vec![1.0; n],
            // periodic Hann
            Taper::Hann => (0..n)
                .map(|i| {
                    let phase = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    0.5 - 0.5 * phase.cos()
                })
                .collect(),
        }
    }
}

/// One-sided power spectrum of a window, bins indexed `0..=N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub bins: Vec<f64>,
    /// Width of one frequency bin in Hz (`sample_rate / N`).
    pub bin_width: f64,
    pub total_power: f64,
}

impl PowerSpectrum {
    pub fn from_bins(bins: Vec<f64>, bin_width: f64) -> Self {
        let total_power = bins.iter().sum();
        Self {
            bins,
            bin_width,
            total_power,
        }
    }

    pub fn max_bin(&self) -> f64 {
        self.bins.iter().copied().fold(0.0, f64::max)
    }
}

/// Reusable FFT plan and scratch space for windows of a fixed length.
#[derive(Clone)]
pub struct SpectrumAnalyzer {
    len: usize,
    weights: Vec<f64>,
    remove_mean: bool,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl SpectrumAnalyzer {
    /// `remove_mean` subtracts the window mean before tapering, which drops
    /// the constant gravity component from the spectrum.
    pub fn new(len: usize, taper: Taper, remove_mean: bool) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Self {
            len,
            weights: taper.weights(len),
            remove_mean,
            fft,
            buf: vec![Complex::default(); len],
            scratch,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn power_spectrum(&mut self, window: &AccelWindow) -> Result<PowerSpectrum, SignalError> {
        if !window.is_full() {
            return Err(SignalError::InsufficientData {
                filled: window.len(),
                capacity: window.capacity(),
            });
        }
        if window.capacity() != self.len {
            return Err(SignalError::LengthMismatch {
                expected: self.len,
                actual: window.capacity(),
            });
        }
        let bin_width = window.sample_rate() / self.len as f64;
        let mean = if self.remove_mean {
            window.iter().sum::<f64>() / self.len as f64
        } else {
            0.0
        };
        for ((slot, x), w) in self.buf.iter_mut().zip(window.iter()).zip(&self.weights) {
            *slot = Complex::new((x - mean) * w, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let n = self.len as f64;
        let bins = self.buf[..=self.len / 2]
            .iter()
            .map(|c| c.norm_sqr() / n)
            .collect();
        Ok(PowerSpectrum::from_bins(bins, bin_width))
    }
}

impl fmt::Debug for SpectrumAnalyzer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectrumAnalyzer")
            .field("len", &self.len)
            .field("remove_mean", &self.remove_mean)
            .finish()
    }
}

/// Power spectrum of a full window without mean removal.
pub fn power_spectrum(window: &AccelWindow, taper: Taper) -> Result<PowerSpectrum, SignalError> {
    SpectrumAnalyzer::new(window.capacity(), taper, false).power_spectrum(window)
}

/// Fractional bin index splitting the spectral energy into equal halves.
///
/// Bin `k` is treated as a uniform mass on `[k - 0.5, k + 0.5]`, so the
/// result is the linear interpolation of the cumulative power between bin
/// edges. A flat spectrum over bins `0..=3` gives `1.5`; all power in bin 0
/// gives `0.0`.
pub fn median_frequency(spectrum: &PowerSpectrum) -> Result<f64, SignalError> {
    let total: f64 = spectrum.bins.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(SignalError::DegenerateSpectrum);
    }
    let half = 0.5 * total;
    let mut below = 0.0;
    for (k, &power) in spectrum.bins.iter().enumerate() {
        let above = below + power;
        if above >= half && power > 0.0 {
            let frac = ((half - below) / power).clamp(0.0, 1.0);
            return Ok(k as f64 - 0.5 + frac);
        }
        below = above;
    }
    // Rounding left `below` a hair under `half`; the last non-empty bin's upper edge.
    let last = spectrum.bins.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    Ok(last as f64 + 0.5)
}
