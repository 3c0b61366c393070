//! Iterative radix-2 FFT and the one-sided power spectrum of a 2 s frame.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Samples per spectral frame (2 s at 128 Hz).
pub const FRAME_LEN: usize = 256;
/// One-sided bins reported for a [`FRAME_LEN`] frame.
pub const NUM_BINS: usize = FRAME_LEN / 2 + 1;
/// Frequency spacing of the bins, Hz.
pub const BIN_HZ: f64 = 0.5;

/// Precomputed twiddles and bit-reversal table for one power-of-two size.
#[derive(Debug, Clone)]
pub struct Radix2Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Radix2Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("FFT size {n} is not a power of two")));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        Ok(Self { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Forward transform in place, `X_k = Σ x_t e^{-2πikt/N}`.
    pub fn forward(&self, data: &mut [Complex64]) -> Result<()> {
        if data.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "FFT of size {} given {} points",
                self.n,
                data.len()
            )));
        }
        for (i, &j) in self.bitrev.iter().enumerate() {
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.n {
            let step = self.n / (2 * half);
            for start in (0..self.n).step_by(2 * half) {
                for k in 0..half {
                    let w = self.twiddles[k * step];
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowFunction {
    #[default]
    Rectangular,
    Hann,
}

impl WindowFunction {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowFunction::Rectangular => vec![1.0; n],
            WindowFunction::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rectangular" | "rect" | "none" => Some(WindowFunction::Rectangular),
            "hann" | "hanning" => Some(WindowFunction::Hann),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WindowFunction::Rectangular => "rectangular",
            WindowFunction::Hann => "hann",
        }
    }
}

/// One-sided powers `|X_k|² / N²` at `k · 0.5 Hz`, `k = 0..=128`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub bins: [f64; NUM_BINS],
}

impl PowerSpectrum {
    pub fn frequency(k: usize) -> f64 {
        k as f64 * BIN_HZ
    }
}

/// Reusable FFT plan plus window coefficients for [`FRAME_LEN`] frames.
#[derive(Debug, Clone)]
pub struct SpectrumAnalyzer {
    fft: Radix2Fft,
    window: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl SpectrumAnalyzer {
    pub fn new(window: WindowFunction) -> Self {
        Self {
            fft: Radix2Fft::new(FRAME_LEN).expect("power of two"),
            window: window.coefficients(FRAME_LEN),
            scratch: vec![Complex64::default(); FRAME_LEN],
        }
    }

    pub fn power_spectrum(&mut self, frame: &[f64]) -> Result<PowerSpectrum> {
        if frame.len() != FRAME_LEN {
            return Err(Error::ShapeMismatch(format!(
                "spectral frame needs {FRAME_LEN} samples, got {}",
                frame.len()
            )));
        }
        for ((dst, &x), &w) in self.scratch.iter_mut().zip(frame).zip(&self.window) {
            *dst = Complex64::new(x * w, 0.0);
        }
        self.fft.forward(&mut self.scratch)?;
        let norm = (FRAME_LEN * FRAME_LEN) as f64;
        let mut bins = [0.0; NUM_BINS];
        for (bin, x) in bins.iter_mut().zip(&self.scratch) {
            *bin = x.norm_sqr() / norm;
        }
        Ok(PowerSpectrum { bins })
    }
}

/// Power spectrum of a single 256-sample frame.
pub fn power_spectrum(frame: &[f64], window: WindowFunction) -> Result<PowerSpectrum> {
    SpectrumAnalyzer::new(window).power_spectrum(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_frame_is_dc_only() {
        let c = -3.25;
        let p = power_spectrum(&[c; FRAME_LEN], WindowFunction::Rectangular).unwrap();
        assert!((p.bins[0] - c * c).abs() <= 1e-12);
        assert!(p.bins[1..].iter().all(|&b| b.abs() <= 1e-12));
    }

    #[test]
    fn bin_aligned_cosine() {
        let frame: Vec<f64> = (0..FRAME_LEN)
            .map(|t| (2.0 * PI * 16.0 * t as f64 / 128.0).cos())
            .collect();
        let p = power_spectrum(&frame, WindowFunction::Rectangular).unwrap();
        assert!((p.bins[32] - 0.25).abs() <= 1e-12);
        for (k, &b) in p.bins.iter().enumerate() {
            if k != 32 {
                assert!(b <= 1e-12, "bin {k}: {b}");
            }
        }
    }

    #[test]
    fn wrong_length_rejected() {
        assert!(power_spectrum(&[0.0; 255], WindowFunction::Rectangular).is_err());
        assert!(Radix2Fft::new(12).is_err());
    }

    #[test]
    fn small_sizes() {
        let fft = Radix2Fft::new(1).unwrap();
        let mut d = [Complex64::new(2.0, 1.0)];
        fft.forward(&mut d).unwrap();
        assert_eq!(d[0], Complex64::new(2.0, 1.0));
        let fft = Radix2Fft::new(2).unwrap();
        let mut d = [Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0)];
        fft.forward(&mut d).unwrap();
        assert_eq!(d, [Complex64::new(4.0, 0.0), Complex64::new(-2.0, 0.0)]);
    }

    #[test]
    fn hann_window_shape() {
        let w = WindowFunction::Hann.coefficients(8);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
    }
}
