//! Morlet time-frequency energy and the channel x time build-up map.
//!
//! Per channel: band-pass, mean squared Morlet magnitude over the in-band
//! scales, 256-sample moving average, then division by the smoothed 10-15 Hz
//! energy of the reference recording.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fir::{design_bandpass, filter_zero_phase};
use crate::signal::{median, ms_to_samples, MultiChannelSignal};

pub const SMOOTHING_WIDTH: usize = 256;
pub const NORMALIZATION_BAND_HZ: (f64, f64) = (10.0, 15.0);
/// Kernel truncation: the Gaussian envelope below this fraction of its peak is dropped.
pub const KERNEL_FLOOR: f64 = 1e-6;
pub const MIN_RUN_SAMPLES: usize = 64;
pub const FOLLOW_WINDOW_MS: f64 = 500.0;

/// Analysis band for a target gamma frequency.
pub fn band_for_target(target_freq_hz: f64) -> (f64, f64) {
    match target_freq_hz {
        f if (f - 45.0).abs() < 1e-9 => (40.0, 50.0),
        f if (f - 55.0).abs() < 1e-9 => (50.0, 60.0),
        f if (f - 85.0).abs() < 1e-9 => (80.0, 90.0),
        f => (f - 5.0, f + 5.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorletParams {
    /// Centre angular frequency of the mother wavelet (radians per sample at unit scale).
    pub w0: f64,
    /// Gaussian spread in units of the scale.
    pub s: f64,
    /// Dilations `a` in samples.
    pub scales: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl MorletParams {
    pub fn new(w0: f64, s: f64, scales: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(w0 > 0.0) || !(s > 0.0) || !(sample_rate_hz > 0.0) {
            return Err(invalid("w0, s and sample rate must be positive"));
        }
        if scales.is_empty() || scales.iter().any(|a| !(*a > 0.0)) {
            return Err(invalid("scales must be non-empty and positive"));
        }
        Ok(Self { w0, s, scales, sample_rate_hz })
    }

    /// `w0 = 6`, `s = 1`, one scale per integer Hz across `band_hz`.
    pub fn for_band(band_hz: (f64, f64), sample_rate_hz: f64) -> Result<Self> {
        Self::for_band_with(6.0, 1.0, band_hz, sample_rate_hz)
    }

    pub fn for_band_with(w0: f64, s: f64, band_hz: (f64, f64), sample_rate_hz: f64) -> Result<Self> {
        let (low, high) = band_hz;
        if !(low > 0.0 && low < high && high < sample_rate_hz / 2.0) {
            return Err(invalid(format!("band [{low}, {high}] Hz is not inside (0, Nyquist)")));
        }
        let mut scales = Vec::new();
        let mut f = low.ceil();
        while f <= high {
            scales.push(sample_rate_hz * w0 / (2.0 * PI * f));
            f += 1.0;
        }
        Self::new(w0, s, scales, sample_rate_hz)
    }

    pub fn pseudo_frequency(&self, a: f64) -> f64 {
        self.sample_rate_hz * self.w0 / (2.0 * PI * a)
    }

    /// Scales whose pseudo-frequency lies inside the band.
    pub fn scales_in_band(&self, band_hz: (f64, f64)) -> Vec<f64> {
        self.scales
            .iter()
            .copied()
            .filter(|a| {
                let f = self.pseudo_frequency(*a);
                f >= band_hz.0 - 1e-9 && f <= band_hz.1 + 1e-9
            })
            .collect()
    }
}

/// `(1/a) exp(i w0 t/a) exp(-(t/a)^2 / (2 s^2))` for integer offsets `t`
/// centred on the middle element.
pub fn morlet_kernel(params: &MorletParams, a: f64) -> Result<Vec<Complex64>> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(invalid(format!("scale must be positive, got {a}")));
    }
    let half = (a * params.s * (2.0 * (1.0 / KERNEL_FLOOR).ln()).sqrt()).floor() as isize;
    Ok((-half..=half)
        .map(|t| {
            let u = t as f64 / a;
            let envelope = (-u * u / (2.0 * params.s * params.s)).exp() / a;
            Complex64::from_polar(envelope, params.w0 * u)
        })
        .collect())
}

/// Same-length convolution with a centred kernel, zero outside the signal.
fn convolve_same(x: &[f64], kernel: &[Complex64]) -> Vec<Complex64> {
    let n = x.len() as isize;
    let half = (kernel.len() / 2) as isize;
    (0..n)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, h) in kernel.iter().enumerate() {
                let j = i + half - k as isize;
                if j >= 0 && j < n {
                    acc += h * x[j as usize];
                }
            }
            acc
        })
        .collect()
}

/// One row per scale in `params.scales`.
pub fn morlet_transform(x: &[f64], params: &MorletParams) -> Result<Vec<Vec<Complex64>>> {
    if x.is_empty() {
        return Err(invalid("empty signal"));
    }
    params
        .scales
        .par_iter()
        .map(|a| Ok(convolve_same(x, &morlet_kernel(params, *a)?)))
        .collect()
}

pub fn bandpass(x: &[f64], band_hz: (f64, f64), sample_rate_hz: f64) -> Result<Vec<f64>> {
    let taps = design_bandpass(band_hz, sample_rate_hz)?;
    Ok(filter_zero_phase(x, &taps))
}

/// Centred moving average; near the edges the window shrinks to the samples available.
pub fn envelope_smooth(x: &[f64], width: usize) -> Result<Vec<f64>> {
    if width < 1 {
        return Err(invalid("smoothing width must be at least 1"));
    }
    let n = x.len();
    let back = width / 2;
    let fwd = width - 1 - back;
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + fwd).min(n - 1);
            x[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect())
}

/// Smoothed squared 10-15 Hz band of `x`.
pub fn low_band_energy(x: &[f64], sample_rate_hz: f64) -> Result<Vec<f64>> {
    let low = bandpass(x, NORMALIZATION_BAND_HZ, sample_rate_hz)?;
    let sq: Vec<f64> = low.iter().map(|v| v * v).collect();
    envelope_smooth(&sq, SMOOTHING_WIDTH)
}

/// `band_energy / (low_energy + eps)` with `eps = 1e-12 max(low_energy)`.
pub fn normalize_by_low_band(band_energy: &[f64], x_original: &[f64], sample_rate_hz: f64) -> Result<Vec<f64>> {
    if band_energy.len() != x_original.len() {
        return Err(invalid("band energy and reference signal differ in length"));
    }
    let low = low_band_energy(x_original, sample_rate_hz)?;
    Ok(divide_guarded(band_energy, &low))
}

pub(crate) fn divide_guarded(num: &[f64], den: &[f64]) -> Vec<f64> {
    let peak = den.iter().fold(0.0_f64, |m, v| m.max(*v));
    let eps = if peak > 0.0 { 1e-12 * peak } else { f64::MIN_POSITIVE };
    num.iter().zip(den).map(|(a, b)| a / (b + eps)).collect()
}

/// Mean `|C|^2` over the scales inside the band.
pub fn band_energy(x: &[f64], params: &MorletParams, band_hz: (f64, f64)) -> Result<Vec<f64>> {
    let scales = params.scales_in_band(band_hz);
    if scales.is_empty() {
        return Err(invalid(format!("no Morlet scale falls inside {band_hz:?} Hz")));
    }
    let in_band = MorletParams { scales, ..params.clone() };
    let rows = morlet_transform(x, &in_band)?;
    Ok(mean_power(&rows))
}

pub(crate) fn mean_power(rows: &[Vec<Complex64>]) -> Vec<f64> {
    let n = rows.first().map_or(0, Vec::len);
    let inv = 1.0 / rows.len() as f64;
    (0..n)
        .map(|i| rows.iter().map(|r| r[i].norm_sqr()).sum::<f64>() * inv)
        .collect()
}

/// One map row: band-pass, Morlet energy, smoothing, low-band normalisation
/// against `reference`.
pub fn map_row(x: &[f64], reference: &[f64], band_hz: (f64, f64), params: &MorletParams) -> Result<Vec<f64>> {
    let filtered = bandpass(x, band_hz, params.sample_rate_hz)?;
    let energy = band_energy(&filtered, params, band_hz)?;
    let smoothed = envelope_smooth(&energy, SMOOTHING_WIDTH)?;
    normalize_by_low_band(&smoothed, reference, params.sample_rate_hz)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatioTemporalMap {
    pub values: Vec<Vec<f64>>,
    pub band_hz: (f64, f64),
    pub channel_labels: Vec<String>,
    pub sample_rate_hz: f64,
}

impl SpatioTemporalMap {
    pub fn n_channels(&self) -> usize {
        self.values.len()
    }

    pub fn n_samples(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().fold(0.0_f64, |m, v| m.max(*v))
    }
}

/// Map of `signal`, each row normalised by its own low band.
pub fn spatiotemporal_map(signal: &MultiChannelSignal, band_hz: (f64, f64), params: &MorletParams) -> Result<SpatioTemporalMap> {
    spatiotemporal_map_with_reference(signal, signal, band_hz, params)
}

/// Map of `signal` with each row normalised by the low band of the matching
/// `reference` channel (e.g. despiked data normalised by the raw recording).
pub fn spatiotemporal_map_with_reference(
    signal: &MultiChannelSignal,
    reference: &MultiChannelSignal,
    band_hz: (f64, f64),
    params: &MorletParams,
) -> Result<SpatioTemporalMap> {
    if signal.n_channels() != reference.n_channels() || signal.n_samples() != reference.n_samples() {
        return Err(invalid("signal and normalisation reference differ in shape"));
    }
    if (params.sample_rate_hz - signal.sample_rate_hz()).abs() > 1e-9 {
        return Err(invalid("Morlet parameters use a different sample rate than the signal"));
    }
    let values = signal
        .data()
        .par_iter()
        .zip(reference.data().par_iter())
        .map(|(x, r)| map_row(x, r, band_hz, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpatioTemporalMap {
        values,
        band_hz,
        channel_labels: signal.channel_labels().to_vec(),
        sample_rate_hz: signal.sample_rate_hz(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildupDetection {
    pub channel_indices: BTreeSet<usize>,
    pub onset_sample: Option<usize>,
    pub peak_energy: f64,
    pub threshold: f64,
}

impl BuildupDetection {
    pub fn is_detected(&self) -> bool {
        !self.channel_indices.is_empty()
    }
}

/// Threshold at `median + k_sigma * MAD` over the whole map. The onset is the
/// earliest start of a run of at least [`MIN_RUN_SAMPLES`] samples above it on
/// any channel; every channel above threshold in the following
/// [`FOLLOW_WINDOW_MS`] is reported.
pub fn detect_buildup(map: &SpatioTemporalMap, k_sigma: f64) -> Result<BuildupDetection> {
    if map.n_channels() == 0 || map.n_samples() == 0 {
        return Err(invalid("empty map"));
    }
    if !k_sigma.is_finite() {
        return Err(invalid("k_sigma must be finite"));
    }
    let all: Vec<f64> = map.values.iter().flatten().copied().collect();
    let med = median(&all);
    let deviations: Vec<f64> = all.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&deviations);
    let threshold = med + k_sigma * mad;

    let onset = map
        .values
        .iter()
        .filter_map(|row| first_run(row, threshold, MIN_RUN_SAMPLES))
        .min();
    let Some(onset) = onset else {
        return Ok(BuildupDetection {
            channel_indices: BTreeSet::new(),
            onset_sample: None,
            peak_energy: 0.0,
            threshold,
        });
    };
    let follow = ms_to_samples(FOLLOW_WINDOW_MS, map.sample_rate_hz)?;
    let end = (onset + follow).min(map.n_samples());
    let mut channels = BTreeSet::new();
    let mut peak = 0.0_f64;
    for (c, row) in map.values.iter().enumerate() {
        let seg = &row[onset..end];
        if seg.iter().any(|v| *v > threshold) {
            channels.insert(c);
            peak = seg.iter().fold(peak, |m, v| m.max(*v));
        }
    }
    Ok(BuildupDetection { channel_indices: channels, onset_sample: Some(onset), peak_energy: peak, threshold })
}

fn first_run(row: &[f64], threshold: f64, min_len: usize) -> Option<usize> {
    let mut run = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > threshold {
            run += 1;
            if run >= min_len {
                return Some(i + 1 - run);
            }
        } else {
            run = 0;
        }
    }
    None
}
