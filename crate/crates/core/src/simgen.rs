//! Simulated recordings: gamma bursts, biphasic spikes and colored noise on
//! three channels with separated, partially overlapped and fully overlapped
//! placements.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::despike::mask_geometry;
use crate::error::{invalid, Result};
use crate::signal::{ms_to_samples, MultiChannelSignal, TimeWindow};

/// Placement of the spike relative to the burst on one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapRegime {
    Separated,
    Overlapped,
    FullyOverlapped,
}

impl OverlapRegime {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "separated" => Ok(OverlapRegime::Separated),
            "overlapped" => Ok(OverlapRegime::Overlapped),
            "fully_overlapped" => Ok(OverlapRegime::FullyOverlapped),
            other => Err(invalid(format!("unknown overlap regime {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OverlapRegime::Separated => "separated",
            OverlapRegime::Overlapped => "overlapped",
            OverlapRegime::FullyOverlapped => "fully_overlapped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    /// One burst frequency per channel.
    pub burst_freqs_hz: Vec<f64>,
    /// One regime per channel.
    pub regimes: Vec<OverlapRegime>,
    /// Burst-to-noise power ratio over the burst window; `inf` disables noise.
    pub snr_db: f64,
    pub n_realizations: usize,
    pub rng_seed: u64,
    pub noise_exponent: f64,
    pub burst_amplitude_uv: f64,
    pub spike_amplitude_uv: f64,
    pub spike_width_ms: f64,
    /// Burst centre; defaults to the middle of the trace.
    pub burst_center_sample: Option<usize>,
    /// Gap between the end of the spike and the start of the burst for
    /// [`OverlapRegime::Separated`].
    pub separation_gap_ms: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: 512.0,
            n_samples: 5000,
            burst_freqs_hz: vec![45.0, 55.0, 85.0],
            regimes: vec![
                OverlapRegime::Separated,
                OverlapRegime::Overlapped,
                OverlapRegime::FullyOverlapped,
            ],
            snr_db: 5.0,
            n_realizations: 200,
            rng_seed: 0x5eed,
            noise_exponent: 1.0,
            burst_amplitude_uv: 50.0,
            spike_amplitude_uv: 150.0,
            spike_width_ms: 70.0,
            burst_center_sample: None,
            separation_gap_ms: 150.0,
        }
    }
}

impl SimConfig {
    /// Same configuration with every channel in `regime`.
    pub fn with_regime(mut self, regime: OverlapRegime) -> Self {
        self.regimes = vec![regime; self.burst_freqs_hz.len()];
        self
    }

    pub fn burst_center(&self) -> usize {
        self.burst_center_sample.unwrap_or(self.n_samples / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(invalid("sample rate must be positive"));
        }
        if self.n_realizations < 1 {
            return Err(invalid("need at least one realization"));
        }
        if self.burst_freqs_hz.is_empty() {
            return Err(invalid("need at least one channel"));
        }
        if self.regimes.len() != self.burst_freqs_hz.len() {
            return Err(invalid(format!(
                "{} regimes for {} burst frequencies",
                self.regimes.len(),
                self.burst_freqs_hz.len()
            )));
        }
        let nyquist = self.sample_rate_hz / 2.0;
        if let Some(f) = self.burst_freqs_hz.iter().find(|f| !(**f > 0.0 && **f < nyquist)) {
            return Err(invalid(format!("burst frequency {f} Hz must lie in (0, {nyquist})")));
        }
        if self.snr_db.is_nan() {
            return Err(invalid("snr_db is NaN"));
        }
        if !(self.spike_width_ms > 0.0) {
            return Err(invalid("spike width must be positive"));
        }
        for ch in 0..self.burst_freqs_hz.len() {
            self.channel_layout(ch, 0)?;
        }
        Ok(())
    }

    /// Burst window, spike window and sweep fraction for one channel.
    fn channel_layout(&self, ch: usize, realization: usize) -> Result<(TimeWindow, TimeWindow, f64)> {
        let fs = self.sample_rate_hz;
        let n = self.n_samples;
        let burst_len = burst_length(self.burst_freqs_hz[ch], fs)?;
        let spike_len = spike_length(self.spike_width_ms, fs)?;
        let center = self.burst_center();
        let burst_start = center
            .checked_sub((burst_len - 1) / 2)
            .ok_or_else(|| invalid("burst does not fit before the trace start"))?;
        let burst = TimeWindow::new(burst_start, burst_len)?;
        let half = (spike_len - 1) / 2;

        let (spike_center, fraction) = match self.regimes[ch] {
            OverlapRegime::Separated => {
                let gap = (self.separation_gap_ms * fs / 1000.0).round() as usize;
                let end = burst_start
                    .checked_sub(gap)
                    .filter(|e| *e >= spike_len)
                    .ok_or_else(|| invalid("separated spike does not fit before the burst"))?;
                (end - spike_len + half, 0.0)
            }
            OverlapRegime::Overlapped => {
                let fraction = if self.n_realizations > 1 {
                    realization as f64 / (self.n_realizations - 1) as f64
                } else {
                    0.5
                };
                // from "spike ends where the burst starts" to "spike centred on the burst"
                let lead = burst_start as f64 - (half + 1) as f64;
                if lead < half as f64 {
                    return Err(invalid("overlapped spike does not fit before the trace start"));
                }
                let c = lead + fraction * (burst.center() as f64 - lead);
                (c.round() as usize, fraction)
            }
            OverlapRegime::FullyOverlapped => (burst.center(), 1.0),
        };
        let spike = TimeWindow::new(spike_center - half, spike_len)?;
        if !burst.fits(n) || !spike.fits(n) {
            return Err(invalid(format!("channel {ch} events do not fit in {n} samples")));
        }
        Ok((burst, spike, fraction))
    }
}

/// Burst length: the oscillation length used for the separating mask.
pub fn burst_length(freq_hz: f64, sample_rate_hz: f64) -> Result<usize> {
    let (duration_ms, _) = mask_geometry(freq_hz)?;
    let len = ms_to_samples(duration_ms, sample_rate_hz)?;
    if len == 0 {
        return Err(invalid("burst shorter than one sample"));
    }
    Ok(len)
}

/// Spike support in samples, forced odd so the template is centred on a sample.
pub fn spike_length(width_ms: f64, sample_rate_hz: f64) -> Result<usize> {
    let n = ms_to_samples(width_ms, sample_rate_hz)?.max(3);
    Ok(n | 1)
}

/// Hann-tapered cosine at `freq_hz` with peak magnitude `amplitude_uv`.
pub fn gen_gamma_burst(freq_hz: f64, duration_ms: f64, amplitude_uv: f64, sample_rate_hz: f64) -> Result<Vec<f64>> {
    if !(freq_hz > 0.0) || freq_hz >= sample_rate_hz / 2.0 {
        return Err(invalid(format!(
            "burst frequency {freq_hz} Hz must lie below Nyquist ({} Hz)",
            sample_rate_hz / 2.0
        )));
    }
    let n = ms_to_samples(duration_ms, sample_rate_hz)?;
    if n == 0 {
        return Err(invalid("burst duration rounds to zero samples"));
    }
    let mid = (n as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let taper = 0.5 * (1.0 - (2.0 * PI * (i as f64 + 0.5) / n as f64).cos());
            taper * (2.0 * PI * freq_hz * (i as f64 - mid) / sample_rate_hz).cos()
        })
        .collect();
    Ok(scale_to_peak(raw, amplitude_uv))
}

/// Biphasic spike: first derivative of a Gaussian with support of about
/// `width_ms` (plus or minus three standard deviations).
pub fn gen_transient(width_ms: f64, amplitude_uv: f64, sample_rate_hz: f64) -> Result<Vec<f64>> {
    if !(width_ms > 0.0) {
        return Err(invalid(format!("spike width must be positive, got {width_ms}")));
    }
    let n = spike_length(width_ms, sample_rate_hz)?;
    let mid = ((n - 1) / 2) as f64;
    let sigma = n as f64 / 6.0;
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 - mid) / sigma;
            -t * (-0.5 * t * t).exp()
        })
        .collect();
    Ok(scale_to_peak(raw, amplitude_uv))
}

fn scale_to_peak(raw: Vec<f64>, amplitude: f64) -> Vec<f64> {
    let peak = crate::signal::max_abs(&raw);
    if peak == 0.0 || amplitude == 0.0 {
        return vec![0.0; raw.len()];
    }
    let k = amplitude / peak;
    raw.into_iter().map(|v| v * k).collect()
}

/// Zero-mean, unit-variance noise with power spectrum proportional to
/// `1/f^exponent`, obtained by shaping the spectrum of white Gaussian noise.
pub fn gen_colored_noise(n: usize, exponent: f64, rng_seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("noise length must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k);
        *c = if f == 0 { Complex64::new(0.0, 0.0) } else { *c * (f as f64).powf(-exponent / 2.0) };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let x: Vec<f64> = buf.iter().map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let sd = var.sqrt();
    Ok(x.into_iter().map(|v| (v - mean) / sd).collect())
}

/// Ground truth for one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTruth {
    pub regime: OverlapRegime,
    pub burst_window: TimeWindow,
    pub burst_freq_hz: f64,
    pub transient_window: TimeWindow,
    /// Fraction of the spike window lying inside the burst window.
    pub overlap_fraction: f64,
    /// Position of the spike along the overlap sweep (0 = touching, 1 = centred).
    pub sweep_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub realization_index: usize,
    pub seed: u64,
    pub channels: Vec<ChannelTruth>,
}

/// Clean components used to build one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelComponents {
    pub burst: Vec<f64>,
    pub transient: Vec<f64>,
    pub noise: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub signal: MultiChannelSignal,
    pub truth: GroundTruth,
    pub components: Vec<ChannelComponents>,
}

/// Seed of one realization; realizations are seeded independently.
pub fn realization_seed(rng_seed: u64, realization_index: usize) -> u64 {
    rng_seed ^ realization_index as u64
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Noise seed of one channel. The realization seed is mixed before the
/// channel index is added, so no two (realization, channel) pairs share noise.
pub fn channel_seed(realization_seed: u64, channel: usize) -> u64 {
    splitmix64(splitmix64(realization_seed).wrapping_add(channel as u64))
}

pub fn build_realization(config: &SimConfig, realization_index: usize) -> Result<Realization> {
    config.validate()?;
    if realization_index >= config.n_realizations {
        return Err(invalid(format!(
            "realization {realization_index} out of range ({} realizations)",
            config.n_realizations
        )));
    }
    let fs = config.sample_rate_hz;
    let n = config.n_samples;
    let seed = realization_seed(config.rng_seed, realization_index);
    let spike = gen_transient(config.spike_width_ms, config.spike_amplitude_uv, fs)?;

    let mut data = Vec::with_capacity(config.burst_freqs_hz.len());
    let mut channels = Vec::new();
    let mut components = Vec::new();
    for (ch, &freq) in config.burst_freqs_hz.iter().enumerate() {
        let (burst_win, spike_win, sweep) = config.channel_layout(ch, realization_index)?;
        let (duration_ms, _) = mask_geometry(freq)?;
        let template = gen_gamma_burst(freq, duration_ms, config.burst_amplitude_uv, fs)?;

        let mut burst = vec![0.0; n];
        burst[burst_win.start()..burst_win.end()].copy_from_slice(&template);
        let mut transient = vec![0.0; n];
        transient[spike_win.start()..spike_win.end()].copy_from_slice(&spike);

        let noise = if config.snr_db.is_infinite() && config.snr_db > 0.0 {
            vec![0.0; n]
        } else {
            let unit = gen_colored_noise(n, config.noise_exponent, channel_seed(seed, ch))?;
            let window = burst_win.start()..burst_win.end();
            let burst_power = mean_power(&burst[window.clone()]);
            let noise_power = mean_power(&unit[window]);
            let target = burst_power / 10f64.powf(config.snr_db / 10.0);
            let k = if noise_power > 0.0 { (target / noise_power).sqrt() } else { 0.0 };
            unit.into_iter().map(|v| v * k).collect()
        };

        data.push((0..n).map(|i| burst[i] + transient[i] + noise[i]).collect());
        channels.push(ChannelTruth {
            regime: config.regimes[ch],
            burst_window: burst_win,
            burst_freq_hz: freq,
            transient_window: spike_win,
            overlap_fraction: spike_win.intersection_len(&burst_win) as f64 / spike_win.len() as f64,
            sweep_fraction: sweep,
        });
        components.push(ChannelComponents { burst, transient, noise });
    }
    let labels = (1..=data.len()).map(|i| format!("ch{i}")).collect();
    Ok(Realization {
        signal: MultiChannelSignal::new(fs, labels, data)?,
        truth: GroundTruth { realization_index, seed, channels },
        components,
    })
}

fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        crate::signal::energy(x) / x.len() as f64
    }
}
