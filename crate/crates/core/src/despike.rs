//! Oscillation/transient separation by masking SWT coefficients with a
//! time-window x scale-set rectangle and reconstructing both parts.
//!
//! The oscillatory branch keeps the detail coefficients of the selected
//! levels and the approximations inside the window; the transient branch is
//! the exact complement, so the two reconstructions always add back to the
//! input.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::{ms_to_samples, TimeWindow};
use crate::swt::{
    coefficient_lag, iswt_reconstruct, level_for_frequency, swt_decompose, FilterPair,
    WaveletCoefficients,
};

/// Default decomposition depth at 512 Hz (deepest detail band 8-16 Hz).
pub const DEFAULT_LEVELS: usize = 5;

/// Mask duration and number of scales for a target oscillation frequency.
///
/// 45, 55 and 85 Hz use the tabulated geometry; any other frequency gets
/// nine cycles and two scales.
pub fn mask_geometry(target_freq_hz: f64) -> Result<(f64, usize)> {
    if !(target_freq_hz > 0.0) || !target_freq_hz.is_finite() {
        return Err(invalid(format!("target frequency must be positive, got {target_freq_hz}")));
    }
    const TABLE: [(f64, f64, usize); 3] = [(45.0, 200.0, 3), (55.0, 180.0, 2), (85.0, 150.0, 2)];
    if let Some((_, ms, scales)) = TABLE.iter().find(|(f, _, _)| (f - target_freq_hz).abs() < 1e-9) {
        return Ok((*ms, *scales));
    }
    Ok((9.0 * 1000.0 / target_freq_hz, 2))
}

/// Levels selected for a target frequency: the level whose nominal band
/// holds the target, then successively finer levels, then coarser ones if the
/// finer side runs out. Sorted ascending.
///
/// Growing the set toward finer levels keeps the upper sidebands of a short
/// burst while leaving the coarse levels, where a spike puts most of its
/// energy, to the transient branch.
pub fn mask_scales(target_freq_hz: f64, sample_rate_hz: f64, n_scales: usize, levels: usize) -> Result<Vec<usize>> {
    let home = level_for_frequency(target_freq_hz, sample_rate_hz)?;
    if home > levels {
        return Err(invalid(format!(
            "{target_freq_hz} Hz falls in level {home}, deeper than the {levels} decomposed levels"
        )));
    }
    if n_scales == 0 || n_scales > levels {
        return Err(invalid(format!("cannot pick {n_scales} scales out of {levels} levels")));
    }
    let mut scales: Vec<usize> = (1..=home).rev().chain(home + 1..=levels).take(n_scales).collect();
    scales.sort_unstable();
    Ok(scales)
}

/// Rectangular time x scale selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectMask {
    window: TimeWindow,
    scales: Vec<usize>,
    target_freq_hz: f64,
}

impl RectMask {
    pub fn new(window: TimeWindow, mut scales: Vec<usize>, target_freq_hz: f64) -> Result<Self> {
        scales.sort_unstable();
        scales.dedup();
        if scales.is_empty() || scales[0] == 0 {
            return Err(invalid("mask scales must be non-empty 1-based levels"));
        }
        Ok(Self { window, scales, target_freq_hz })
    }

    /// Mask with the tabulated geometry for `target_freq_hz`, centred on `center`.
    pub fn for_target(
        target_freq_hz: f64,
        sample_rate_hz: f64,
        levels: usize,
        center: usize,
        n_samples: usize,
    ) -> Result<Self> {
        let (duration_ms, n_scales) = mask_geometry(target_freq_hz)?;
        let len = ms_to_samples(duration_ms, sample_rate_hz)?;
        let window = TimeWindow::centered_within(center, len, n_samples)?;
        let scales = mask_scales(target_freq_hz, sample_rate_hz, n_scales, levels)?;
        Self::new(window, scales, target_freq_hz)
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn target_freq_hz(&self) -> f64 {
        self.target_freq_hz
    }

    pub fn with_window(&self, window: TimeWindow) -> Self {
        Self { window, ..self.clone() }
    }

    fn check(&self, coeffs: &WaveletCoefficients) -> Result<()> {
        if !self.window.fits(coeffs.len()) {
            return Err(invalid(format!(
                "mask window [{}, {}) exceeds {} samples",
                self.window.start(),
                self.window.end(),
                coeffs.len()
            )));
        }
        if self.scales.iter().any(|j| *j > coeffs.levels()) {
            return Err(invalid(format!(
                "mask scales {:?} exceed {} levels",
                self.scales,
                coeffs.levels()
            )));
        }
        Ok(())
    }
}

/// Centred moving average with circular wrap-around, summed in window order
/// so circularly shifted inputs give exactly shifted outputs.
pub(crate) fn circular_moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let back = width / 2;
    let inv = 1.0 / width as f64;
    (0..n)
        .map(|i| {
            let start = i + n * (1 + back / n.max(1)) - back;
            (0..width).map(|k| x[(start + k) % n]).sum::<f64>() * inv
        })
        .collect()
}

/// Sample maximising the smoothed squared detail energy over the target
/// scales; the earliest maximiser wins ties.
///
/// Each level is read back by its filter lag first, so the energies of
/// different levels line up with the signal and the returned sample is in
/// signal time.
pub fn detect_oscillation_center(
    coeffs: &WaveletCoefficients,
    filters: &FilterPair,
    target_freq_hz: f64,
    sample_rate_hz: f64,
) -> Result<usize> {
    coeffs.validate()?;
    let (duration_ms, n_scales) = mask_geometry(target_freq_hz)?;
    let scales = mask_scales(target_freq_hz, sample_rate_hz, n_scales, coeffs.levels())?;
    let n = coeffs.len();
    let mut energy = vec![0.0; n];
    for &j in &scales {
        let lag = coefficient_lag(filters, j).1;
        let detail = coeffs.detail(j);
        for (t, e) in energy.iter_mut().enumerate() {
            let w = detail[(t + lag) % n];
            *e += w * w;
        }
    }
    let width = ms_to_samples(duration_ms, sample_rate_hz)?.clamp(1, n);
    let smoothed = circular_moving_average(&energy, width);
    let (best, peak) = smoothed
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) });
    if !(peak > 0.0) {
        return Err(Error::NoDetection(format!(
            "no energy at levels {scales:?} for {target_freq_hz} Hz"
        )));
    }
    Ok(best)
}

/// Splits coefficients into the masked (oscillatory) part and its complement.
///
/// The mask window is in signal time; on each level it is moved forward by
/// that branch's filter lag (wrapping around the end) before it is applied.
pub fn threshold_coeffs(
    coeffs: &WaveletCoefficients,
    mask: &RectMask,
    filters: &FilterPair,
) -> Result<(WaveletCoefficients, WaveletCoefficients)> {
    coeffs.validate()?;
    mask.check(coeffs)?;
    let window = mask.window();
    let n = coeffs.len();
    let split = |seq: &[f64], keep_level: bool, lag: usize| -> (Vec<f64>, Vec<f64>) {
        seq.iter()
            .enumerate()
            .map(|(i, v)| {
                let t = (i + n - lag % n) % n;
                if keep_level && window.contains(t) {
                    (*v, 0.0)
                } else {
                    (0.0, *v)
                }
            })
            .unzip()
    };
    let mut osc = WaveletCoefficients { approximations: Vec::new(), details: Vec::new() };
    let mut trans = osc.clone();
    for (idx, (a, d)) in coeffs.approximations.iter().zip(&coeffs.details).enumerate() {
        let (lag_a, lag_d) = coefficient_lag(filters, idx + 1);
        let (ao, at) = split(a, true, lag_a);
        let (dod, dt) = split(d, mask.scales().contains(&(idx + 1)), lag_d);
        osc.approximations.push(ao);
        osc.details.push(dod);
        trans.approximations.push(at);
        trans.details.push(dt);
    }
    Ok((osc, trans))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub oscillatory: Vec<f64>,
    pub transient: Vec<f64>,
    pub mask_used: RectMask,
    pub detection_center_sample: usize,
}

/// SWT-based separator: decompose, place the mask, split, reconstruct.
#[derive(Debug, Clone, PartialEq)]
pub struct Despiker {
    pub filters: FilterPair,
    pub levels: usize,
}

impl Default for Despiker {
    fn default() -> Self {
        Self { filters: FilterPair::default(), levels: DEFAULT_LEVELS }
    }
}

impl Despiker {
    pub fn new(filters: FilterPair, levels: usize) -> Result<Self> {
        if levels < 1 {
            return Err(invalid("need at least one decomposition level"));
        }
        Ok(Self { filters, levels })
    }

    /// Mask the detector would place on `signal` for `target_freq_hz`.
    pub fn locate(&self, signal: &[f64], target_freq_hz: f64, sample_rate_hz: f64) -> Result<(WaveletCoefficients, RectMask, usize)> {
        let coeffs = swt_decompose(signal, &self.filters, self.levels)?;
        let center = detect_oscillation_center(&coeffs, &self.filters, target_freq_hz, sample_rate_hz)?;
        let mask = RectMask::for_target(target_freq_hz, sample_rate_hz, self.levels, center, signal.len())?;
        Ok((coeffs, mask, center))
    }

    pub fn separate(&self, signal: &[f64], target_freq_hz: f64, sample_rate_hz: f64) -> Result<SeparationResult> {
        let (coeffs, mask, center) = self.locate(signal, target_freq_hz, sample_rate_hz)?;
        let (osc, trans) = threshold_coeffs(&coeffs, &mask, &self.filters)?;
        let (oscillatory, transient) = rayon::join(
            || iswt_reconstruct(&osc, &self.filters),
            || iswt_reconstruct(&trans, &self.filters),
        );
        Ok(SeparationResult {
            oscillatory: oscillatory?,
            transient: transient?,
            mask_used: mask,
            detection_center_sample: center,
        })
    }

    /// Separation with a caller-supplied mask (no detection step).
    pub fn separate_with_mask(&self, signal: &[f64], mask: &RectMask) -> Result<(Vec<f64>, Vec<f64>)> {
        let coeffs = swt_decompose(signal, &self.filters, self.levels)?;
        let (osc, trans) = threshold_coeffs(&coeffs, mask, &self.filters)?;
        Ok((iswt_reconstruct(&osc, &self.filters)?, iswt_reconstruct(&trans, &self.filters)?))
    }
}

/// Convenience wrapper with an explicit filter pair and the default depth.
pub fn separate(
    signal: &[f64],
    target_freq_hz: f64,
    sample_rate_hz: f64,
    filters: &FilterPair,
) -> Result<SeparationResult> {
    Despiker::new(filters.clone(), DEFAULT_LEVELS)?.separate(signal, target_freq_hz, sample_rate_hz)
}
