use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spikesep::simgen::SimConfig;
use spikesep::swt::max_levels;
use spikesep::{FilterPair, MorletParams, Wavelet};

use crate::error::{CliError, CliResult};

/// Optional replacements for the detector-chosen mask.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskOverrides {
    pub duration_ms: Option<f64>,
    pub scales: Option<Vec<usize>>,
    pub center_sample: Option<usize>,
}

/// Everything a command can be tuned with; loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub simulation: SimConfig,
    pub wavelet: String,
    pub levels: usize,
    pub morlet_w0: f64,
    pub morlet_s: f64,
    pub band_hz: (f64, f64),
    /// Despiking target per channel; defaults to the simulated burst frequencies.
    pub target_freqs_hz: Option<Vec<f64>>,
    pub mask: MaskOverrides,
    pub k_sigma: f64,
    /// Restricts the benchmark to one accelerator setting.
    pub accelerators: Option<usize>,
    pub bench_repetitions: usize,
    pub quantize_input: bool,
    pub output_dir: PathBuf,
    /// Overrides `simulation.rng_seed`.
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            simulation: SimConfig::default(),
            wavelet: Wavelet::default().name().to_string(),
            levels: spikesep::despike::DEFAULT_LEVELS,
            morlet_w0: 6.0,
            morlet_s: 1.0,
            band_hz: (80.0, 90.0),
            target_freqs_hz: None,
            mask: MaskOverrides::default(),
            k_sigma: 3.0,
            accelerators: None,
            bench_repetitions: spikesep::dataflow::DEFAULT_REPETITIONS,
            quantize_input: false,
            output_dir: PathBuf::from("out"),
            seed: None,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            CliError::Parse { path: path.to_path_buf(), line, message: e.message().to_string() }
        })?;
        Ok(cfg)
    }

    /// Simulation settings with the seed override applied.
    pub fn sim(&self) -> SimConfig {
        let mut sim = self.simulation.clone();
        if let Some(seed) = self.seed {
            sim.rng_seed = seed;
        }
        sim
    }

    pub fn filters(&self) -> CliResult<FilterPair> {
        Ok(Wavelet::from_name(&self.wavelet)?.filters())
    }

    pub fn morlet(&self, band_hz: (f64, f64), sample_rate_hz: f64) -> CliResult<MorletParams> {
        Ok(MorletParams::for_band_with(self.morlet_w0, self.morlet_s, band_hz, sample_rate_hz)?)
    }

    /// Target frequency for each of `n_channels` channels.
    pub fn targets(&self, n_channels: usize) -> CliResult<Vec<f64>> {
        let list = self.target_freqs_hz.clone().unwrap_or_else(|| self.simulation.burst_freqs_hz.clone());
        match list.len() {
            1 => Ok(vec![list[0]; n_channels]),
            k if k == n_channels => Ok(list),
            k => Err(bad(format!("{k} target frequencies for {n_channels} channels"))),
        }
    }

    /// Checks every field against the preconditions of the modules it feeds.
    pub fn validate(&self) -> CliResult<()> {
        let sim = self.sim();
        sim.validate()?;
        self.filters()?;
        if self.levels == 0 || self.levels > max_levels(sim.n_samples) {
            return Err(bad(format!("levels must be in 1..={}", max_levels(sim.n_samples))));
        }
        self.morlet(self.band_hz, sim.sample_rate_hz)?;
        spikesep::fir::design_bandpass(self.band_hz, sim.sample_rate_hz)?;
        if !self.k_sigma.is_finite() || self.k_sigma < 0.0 {
            return Err(bad("k_sigma must be finite and non-negative"));
        }
        if let Some(a) = self.accelerators {
            if a != 0 && a != 2 {
                return Err(bad(format!("accelerators must be 0 or 2, got {a}")));
            }
        }
        if self.bench_repetitions == 0 {
            return Err(bad("bench_repetitions must be positive"));
        }
        if let Some(list) = &self.target_freqs_hz {
            let nyquist = sim.sample_rate_hz / 2.0;
            if list.is_empty() || list.iter().any(|f| !(*f > 0.0 && *f < nyquist)) {
                return Err(bad(format!("target frequencies must lie in (0, {nyquist}) Hz")));
            }
        }
        if let Some(ms) = self.mask.duration_ms {
            if !(ms > 0.0) {
                return Err(bad("mask duration must be positive"));
            }
        }
        if let Some(scales) = &self.mask.scales {
            if scales.is_empty() || scales.iter().any(|j| *j == 0 || *j > self.levels) {
                return Err(bad(format!("mask scales must lie in 1..={}", self.levels)));
            }
        }
        Ok(())
    }
}

/// Parses `lo:hi`.
pub fn parse_band(text: &str) -> CliResult<(f64, f64)> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| bad(format!("band {text:?} is not lo:hi")))?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad(format!("bad band low edge {lo:?}")))?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad(format!("bad band high edge {hi:?}")))?;
    Ok((lo, hi))
}

/// Parses a comma-separated frequency list.
pub fn parse_freqs(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|_| bad(format!("bad frequency {f:?}"))))
        .collect()
}
