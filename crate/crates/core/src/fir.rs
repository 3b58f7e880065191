//! Linear-phase FIR design and zero-phase application.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Transition width between pass- and stop-band edges.
pub const TRANSITION_HZ: f64 = 5.0;

/// Hamming-window transition width is about `3.3 fs / N`; a little extra
/// length keeps the stop band past 40 dB right at the edge.
const HAMMING_TRANSITION_FACTOR: f64 = 3.6;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Windowed-sinc low-pass with unit DC gain.
fn lowpass(cutoff_hz: f64, sample_rate_hz: f64, n_taps: usize) -> Vec<f64> {
    let fc = cutoff_hz / sample_rate_hz;
    let mid = (n_taps - 1) as f64 / 2.0;
    let taps: Vec<f64> = hamming(n_taps)
        .iter()
        .enumerate()
        .map(|(i, w)| w * 2.0 * fc * sinc(2.0 * fc * (i as f64 - mid)))
        .collect();
    let gain: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / gain).collect()
}

/// Odd tap count giving a [`TRANSITION_HZ`] transition at this rate.
pub fn bandpass_length(sample_rate_hz: f64) -> usize {
    let n = (HAMMING_TRANSITION_FACTOR * sample_rate_hz / TRANSITION_HZ).ceil() as usize;
    n | 1
}

/// Symmetric band-pass taps for `[low, high]`; cutoffs sit half a transition
/// outside the band so the band itself is in the pass band.
pub fn design_bandpass(band_hz: (f64, f64), sample_rate_hz: f64) -> Result<Vec<f64>> {
    let (low, high) = band_hz;
    let nyquist = sample_rate_hz / 2.0;
    if !(low > 0.0 && low < high && high < nyquist) {
        return Err(invalid(format!(
            "band [{low}, {high}] Hz must satisfy 0 < low < high < {nyquist}"
        )));
    }
    let n = bandpass_length(sample_rate_hz);
    let upper = high + TRANSITION_HZ / 2.0;
    let lower = low - TRANSITION_HZ / 2.0;
    let mut taps = if upper >= nyquist {
        let mut delta = vec![0.0; n];
        delta[n / 2] = 1.0;
        delta
    } else {
        lowpass(upper, sample_rate_hz, n)
    };
    if lower > 0.0 {
        for (t, l) in taps.iter_mut().zip(lowpass(lower, sample_rate_hz, n)) {
            *t -= l;
        }
    }
    Ok(taps)
}

/// Maps any index onto `[0, n)` by mirror reflection about the end samples.
pub(crate) fn mirror_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

/// Applies odd-length symmetric taps centred on each sample (no group
/// delay), with mirror-reflected edges.
pub fn filter_zero_phase(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let half = (taps.len() / 2) as isize;
    (0..n as isize)
        .map(|i| {
            taps.iter()
                .enumerate()
                .map(|(k, t)| t * x[mirror_index(i + half - k as isize, n)])
                .sum()
        })
        .collect()
}

/// Magnitude response of `taps` at `freq_hz`.
pub fn magnitude_response(taps: &[f64], freq_hz: f64, sample_rate_hz: f64) -> f64 {
    let w = 2.0 * PI * freq_hz / sample_rate_hz;
    let (re, im) = taps.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, t)| {
        (re + t * (w * k as f64).cos(), im - t * (w * k as f64).sin())
    });
    (re * re + im * im).sqrt()
}
