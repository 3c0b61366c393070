use std::f64::consts::PI;

use eegdd_core::dsp::fft::{power_spectrum, WindowFunction, FRAME_LEN, NUM_BINS};
use eegdd_core::dsp::{bandpass_filter, BandpassFilter};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// |X_k|² / N² by direct summation.
fn naive_power(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &x) in frame.iter().enumerate() {
                let a = -2.0 * PI * (k * t % n) as f64 / n as f64;
                re += x * a.cos();
                im += x * a.sin();
            }
            (re * re + im * im) / (n * n) as f64
        })
        .collect()
}

fn random_frame(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..FRAME_LEN).map(|_| rng.random_range(-50.0..50.0)).collect()
}

#[test]
fn spectrum_matches_direct_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let frame = random_frame(&mut rng);
        let fast = power_spectrum(&frame, WindowFunction::Rectangular).unwrap();
        let slow = naive_power(&frame);
        let scale = slow.iter().cloned().fold(0.0, f64::max);
        for (k, (a, b)) in fast.bins.iter().zip(&slow).enumerate() {
            assert!((a - b).abs() <= 1e-9 * scale.max(b.abs()), "bin {k}: {a} vs {b}");
        }
    }
}

#[test]
fn parseval_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let frame = random_frame(&mut rng);
        let p = power_spectrum(&frame, WindowFunction::Rectangular).unwrap().bins;
        let one_sided = p[0] + p[NUM_BINS - 1] + 2.0 * p[1..NUM_BINS - 1].iter().sum::<f64>();
        let energy = frame.iter().map(|x| x * x).sum::<f64>() / FRAME_LEN as f64;
        assert!((one_sided - energy).abs() <= 1e-9 * energy);
    }
}

#[test]
fn pure_tone_lands_in_its_bin() {
    // 10 Hz at 0.5 Hz resolution is bin 20, amplitude² / 4 each side.
    let frame: Vec<f64> = (0..FRAME_LEN)
        .map(|t| 3.0 * (2.0 * PI * 10.0 * t as f64 / 128.0).cos())
        .collect();
    let p = power_spectrum(&frame, WindowFunction::Rectangular).unwrap().bins;
    assert!((p[20] - 9.0 / 4.0).abs() < 1e-12);
    let leak: f64 = p.iter().enumerate().filter(|&(k, _)| k != 20).map(|(_, v)| v).sum();
    assert!(leak < 1e-20);
}

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

/// Gain measured on a steady-state sinusoid after a long settling period.
fn measured_gain(freq: f64) -> f64 {
    let fs = 128.0;
    let n = 128 * 60;
    let x: Vec<f64> = (0..n).map(|t| (2.0 * PI * freq * t as f64 / fs).sin()).collect();
    let y = bandpass_filter(&x, 4.0, 40.0, fs).unwrap();
    let tail = n / 2;
    let rms = |s: &[f64]| (s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64).sqrt();
    rms(&y[tail..]) / rms(&x[tail..])
}

#[test]
fn filter_response() {
    for f in [10.0, 20.0] {
        let g = db(measured_gain(f));
        assert!((-3.0..=0.5).contains(&g), "{f} Hz: {g} dB");
    }
    assert!(db(measured_gain(1.0)) <= -20.0);
    assert!(db(measured_gain(60.0)) <= -6.0);
}

#[test]
fn measured_gain_matches_transfer_function() {
    let filter = BandpassFilter::new(4.0, 40.0, 128.0).unwrap();
    for f in [2.0, 6.0, 15.0, 35.0, 50.0] {
        let m = measured_gain(f);
        assert!((m - filter.gain_at(f, 128.0)).abs() < 1e-3 * m.max(1e-3), "{f} Hz");
    }
}

proptest! {
    #[test]
    fn spectrum_scales_quadratically(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = random_frame(&mut rng);
        let scaled: Vec<f64> = frame.iter().map(|x| c * x).collect();
        let a = power_spectrum(&frame, WindowFunction::Hann).unwrap().bins;
        let b = power_spectrum(&scaled, WindowFunction::Hann).unwrap().bins;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((c * c * x - y).abs() <= 1e-9 * y.abs().max(1e-12));
            prop_assert!(*x >= 0.0);
        }
    }

    #[test]
    fn circular_shift_leaves_power_unchanged(seed in any::<u64>(), shift in 0usize..FRAME_LEN) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = random_frame(&mut rng);
        let mut rotated = frame.clone();
        rotated.rotate_left(shift);
        let a = power_spectrum(&frame, WindowFunction::Rectangular).unwrap().bins;
        let b = power_spectrum(&rotated, WindowFunction::Rectangular).unwrap().bins;
        let scale = a.iter().cloned().fold(0.0, f64::max);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * scale);
        }
    }
}
