//! Signal containers and small numeric helpers shared by the other modules.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Uniformly sampled multichannel recording, one row per channel (microvolts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiChannelSignal {
    sample_rate_hz: f64,
    channel_labels: Vec<String>,
    data: Vec<Vec<f64>>,
}

impl MultiChannelSignal {
    pub fn new(sample_rate_hz: f64, channel_labels: Vec<String>, data: Vec<Vec<f64>>) -> Result<Self> {
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(invalid(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        if channel_labels.len() != data.len() {
            return Err(invalid(format!(
                "{} labels for {} channels",
                channel_labels.len(),
                data.len()
            )));
        }
        if let Some(first) = data.first() {
            let n = first.len();
            if let Some((i, row)) = data.iter().enumerate().find(|(_, r)| r.len() != n) {
                return Err(invalid(format!(
                    "channel {i} has {} samples, expected {n}",
                    row.len()
                )));
            }
        }
        Ok(Self { sample_rate_hz, channel_labels, data })
    }

    /// Builds a signal with labels `ch1..chN`.
    pub fn with_default_labels(sample_rate_hz: f64, data: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (1..=data.len()).map(|i| format!("ch{i}")).collect();
        Self::new(sample_rate_hz, labels, data)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channel_labels(&self) -> &[String] {
        &self.channel_labels
    }

    pub fn n_channels(&self) -> usize {
        self.data.len()
    }

    pub fn n_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Vec<f64>> {
        self.data
    }

    pub fn channel(&self, index: usize) -> Result<&[f64]> {
        self.data
            .get(index)
            .map(Vec::as_slice)
            .ok_or(Error::Index { index, len: self.data.len() })
    }

    /// Same labels and rate, new samples.
    pub fn with_data(&self, data: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(self.sample_rate_hz, self.channel_labels.clone(), data)
    }

    /// Every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let data = self
            .data
            .iter()
            .map(|row| row.iter().map(|v| v * factor).collect())
            .collect();
        Self { sample_rate_hz: self.sample_rate_hz, channel_labels: self.channel_labels.clone(), data }
    }
}

/// Half-open sample interval `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeWindow {
    start: usize,
    len: usize,
}

impl TimeWindow {
    pub fn new(start: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(invalid("time window must have positive length"));
        }
        Ok(Self { start, len })
    }

    /// Window of `len` samples centred on `center`, shifted as needed to fit in `[0, n)`.
    pub fn centered_within(center: usize, len: usize, n: usize) -> Result<Self> {
        if len == 0 || len > n {
            return Err(invalid(format!("window of {len} samples does not fit a signal of {n}")));
        }
        let start = center.saturating_sub(len / 2).min(n - len);
        Self::new(start, len)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// One past the last sample.
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    /// Centre sample, rounded down.
    pub fn center(&self) -> usize {
        self.start + (self.len - 1) / 2
    }

    pub fn contains(&self, i: usize) -> bool {
        i >= self.start && i < self.end()
    }

    pub fn fits(&self, n: usize) -> bool {
        self.end() <= n
    }

    pub fn intersection_len(&self, other: &TimeWindow) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end().min(other.end());
        hi.saturating_sub(lo)
    }
}

/// Converts a duration to a sample count, rounding to nearest.
pub fn ms_to_samples(duration_ms: f64, sample_rate_hz: f64) -> Result<usize> {
    if !(duration_ms > 0.0) || !(sample_rate_hz > 0.0) {
        return Err(invalid(format!(
            "duration and sample rate must be positive, got {duration_ms} ms at {sample_rate_hz} Hz"
        )));
    }
    Ok((duration_ms * sample_rate_hz / 1000.0).round() as usize)
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Pearson correlation; zero when either input has no variance.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "correlation of unequal lengths");
    let n = a.len() as f64;
    if a.is_empty() {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Circular shift to the right: `out[(i + shift) % n] = x[i]`.
pub fn circular_shift(x: &[f64], shift: usize) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut out = vec![0.0; n];
    for (i, v) in x.iter().enumerate() {
        out[(i + shift) % n] = *v;
    }
    out
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Median of a slice (mean of the two middle values for even lengths).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}
