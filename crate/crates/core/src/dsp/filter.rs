//! Causal Butterworth band-pass built from two bilinear-transform biquads.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Second-order IIR section in transposed direct form II, `a0` normalized
/// to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    z1: f64,
    z2: f64,
}

impl Biquad {
    pub fn new(b0: f64, b1: f64, b2: f64, a1: f64, a2: f64) -> Self {
        Self {
            b0,
            b1,
            b2,
            a1,
            a2,
            z1: 0.0,
            z2: 0.0,
        }
    }

    /// 2nd-order Butterworth low-pass with a pre-warped cutoff.
    pub fn butterworth_lowpass(cutoff: f64, fs: f64) -> Self {
        let k = (PI * cutoff / fs).tan();
        let norm = 1.0 / (1.0 + SQRT_2 * k + k * k);
        let b0 = k * k * norm;
        Self::new(
            b0,
            2.0 * b0,
            b0,
            2.0 * (k * k - 1.0) * norm,
            (1.0 - SQRT_2 * k + k * k) * norm,
        )
    }

    /// 2nd-order Butterworth high-pass with a pre-warped cutoff.
    pub fn butterworth_highpass(cutoff: f64, fs: f64) -> Self {
        let k = (PI * cutoff / fs).tan();
        let norm = 1.0 / (1.0 + SQRT_2 * k + k * k);
        Self::new(
            norm,
            -2.0 * norm,
            norm,
            2.0 * (k * k - 1.0) * norm,
            (1.0 - SQRT_2 * k + k * k) * norm,
        )
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }

    pub fn reset(&mut self) {
        self.z1 = 0.0;
        self.z2 = 0.0;
    }

    /// Magnitude of the frequency response at `freq`.
    pub fn gain_at(&self, freq: f64, fs: f64) -> f64 {
        let w = 2.0 * PI * freq / fs;
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b0 + self.b1 * c1 + self.b2 * c2, self.b1 * s1 + self.b2 * s2);
        let den = (1.0 + self.a1 * c1 + self.a2 * c2, self.a1 * s1 + self.a2 * s2);
        (num.0.hypot(num.1)) / (den.0.hypot(den.1))
    }
}

/// High-pass at `lo` followed by low-pass at `hi`, starting from zero state.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassFilter {
    highpass: Biquad,
    lowpass: Biquad,
}

impl BandpassFilter {
    pub fn new(lo: f64, hi: f64, fs: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi < fs / 2.0) {
            return Err(Error::InvalidArgument(format!(
                "band-pass cutoffs must satisfy 0 < lo < hi < fs/2 (lo={lo}, hi={hi}, fs={fs})"
            )));
        }
        Ok(Self {
            highpass: Biquad::butterworth_highpass(lo, fs),
            lowpass: Biquad::butterworth_lowpass(hi, fs),
        })
    }

    #[inline]
    pub fn process(&mut self, x: f64) -> f64 {
        self.lowpass.process(self.highpass.process(x))
    }

    pub fn reset(&mut self) {
        self.highpass.reset();
        self.lowpass.reset();
    }

    pub fn gain_at(&self, freq: f64, fs: f64) -> f64 {
        self.highpass.gain_at(freq, fs) * self.lowpass.gain_at(freq, fs)
    }
}

/// Filter a whole signal with a fresh [`BandpassFilter`].
pub fn bandpass_filter(signal: &[f64], lo: f64, hi: f64, fs: f64) -> Result<Vec<f64>> {
    let mut filter = BandpassFilter::new(lo, hi, fs)?;
    Ok(signal.iter().map(|&x| filter.process(x)).collect())
}
