//! Tick-cost model of the streaming hardware pipeline.
//!
//! A pipeline is an ordered list of convolution stages. A stage producing
//! `len` outputs from a `taps`-tap kernel costs `len * taps` ticks (one
//! multiply-accumulate per tick on a single unit). Consecutive stages that
//! share a parallel group may run side by side once accelerators are
//! present: the main unit plus each accelerator is one lane, and a group
//! costs the makespan of a longest-first assignment of its stages to the
//! lanes. Without accelerators every stage runs back to back.
//!
//! Costs are structural. The numeric output is produced by the same kernels
//! as [`crate::despike`] and [`crate::tfmap`], so it never depends on the
//! schedule.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::despike::{threshold_coeffs, Despiker, RectMask};
use crate::error::{invalid, Result};
use crate::fir::bandpass_length;
use crate::signal::MultiChannelSignal;
use crate::swt::{iswt_reconstruct, swt_decompose, FilterPair};
use crate::tfmap::{map_row, morlet_kernel, MorletParams, SMOOTHING_WIDTH};

/// Data-vector capacity of the modelled board.
pub const DEFAULT_CAPACITY: usize = 5000;
pub const QUANT_MIN_UV: f64 = -100.0;
pub const QUANT_MAX_UV: f64 = 150.0;
pub const QUANT_LEVELS: usize = 250;
/// Repetitions of the simulated sweep in the default benchmark.
pub const DEFAULT_REPETITIONS: usize = 600;

/// Amplitude step of the input quantiser.
pub fn quant_step() -> f64 {
    (QUANT_MAX_UV - QUANT_MIN_UV) / QUANT_LEVELS as f64
}

/// Rounds to the nearest quantiser level and clamps to the stored range.
pub fn quantize(x: &[f64]) -> Vec<f64> {
    let step = quant_step();
    x.iter()
        .map(|v| ((v / step).round() * step).clamp(QUANT_MIN_UV, QUANT_MAX_UV))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PipelineKind {
    Separation,
    Mapping,
}

impl PipelineKind {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineKind::Separation => "separation",
            PipelineKind::Mapping => "mapping",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSpec {
    pub name: String,
    pub taps: usize,
    /// Outputs produced; `None` means one per input sample.
    pub len: Option<usize>,
    /// Consecutive stages with the same group may run concurrently.
    pub group: Option<u32>,
    /// Memory the stage writes its outputs to.
    pub memory: String,
}

impl StageSpec {
    pub fn new(name: impl Into<String>, taps: usize, memory: impl Into<String>) -> Self {
        Self { name: name.into(), taps, len: None, group: None, memory: memory.into() }
    }

    pub fn in_group(mut self, group: u32) -> Self {
        self.group = Some(group);
        self
    }

    pub fn with_len(mut self, len: usize) -> Self {
        self.len = Some(len);
        self
    }

    pub fn outputs(&self, n: usize) -> usize {
        self.len.unwrap_or(n)
    }

    pub fn ticks(&self, n: usize) -> u64 {
        self.outputs(n) as u64 * self.taps as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub kind: PipelineKind,
    /// 0 or 2.
    pub accelerators: usize,
    pub quantize_input: bool,
    /// Samples per data vector.
    pub capacity: usize,
    /// Decomposition depth of the separation pipeline.
    pub levels: usize,
    /// Analysis band of the mapping pipeline.
    pub band_hz: Option<(f64, f64)>,
    pub stages: Vec<StageSpec>,
    pub memories: Vec<String>,
}

impl PipelineConfig {
    /// Stage list of the separation chain for `filters` and `levels`, ending
    /// with the oscillatory reconstruction.
    pub fn separation(accelerators: usize, filters: &FilterPair, levels: usize, capacity: usize) -> Result<Self> {
        let taps = filters.len();
        let mut stages = Vec::new();
        let mut group = 0u32;
        let mut next = || {
            group += 1;
            group
        };
        for j in 1..=levels {
            let up = (taps - 1) * (1 << (j - 1)) + 1;
            let g = next();
            stages.push(StageSpec::new(format!("upsample_low_{j}"), 1, "Msa").with_len(up).in_group(g));
            stages.push(StageSpec::new(format!("upsample_high_{j}"), 1, "Msd").with_len(up).in_group(g));
            let g = next();
            stages.push(StageSpec::new(format!("analysis_low_{j}"), taps, "Ma").in_group(g));
            stages.push(StageSpec::new(format!("analysis_high_{j}"), taps, "Md").in_group(g));
        }
        let g = next();
        for j in 1..=levels {
            stages.push(StageSpec::new(format!("threshold_detail_{j}"), 1, "Mdt").in_group(g));
        }
        stages.push(StageSpec::new("threshold_approx", 1, "Mat").in_group(g));
        for j in (1..=levels).rev() {
            let g = next();
            stages.push(StageSpec::new(format!("synthesis_low_{j}"), taps, "External").in_group(g));
            stages.push(StageSpec::new(format!("synthesis_high_{j}"), taps, "External").in_group(g));
            stages.push(StageSpec::new(format!("add_{j}"), 1, "External"));
        }
        Self::new(PipelineKind::Separation, accelerators, false, capacity, levels, stages)
    }

    /// Stage list of the map-row chain for `params` over `band_hz`.
    pub fn mapping(accelerators: usize, params: &MorletParams, band_hz: (f64, f64), capacity: usize) -> Result<Self> {
        let scales = params.scales_in_band(band_hz);
        if scales.is_empty() {
            return Err(invalid(format!("no Morlet scale inside {band_hz:?} Hz")));
        }
        let bp = bandpass_length(params.sample_rate_hz);
        let mut stages = vec![
            StageSpec::new("bandpass_signal", bp, "Mh").in_group(1),
            StageSpec::new("bandpass_reference", bp, "Mh").in_group(1),
        ];
        for (i, a) in scales.iter().enumerate() {
            let k = morlet_kernel(params, *a)?.len();
            stages.push(StageSpec::new(format!("morlet_{i}"), k, "Mw").in_group(2));
        }
        stages.push(StageSpec::new("scale_energy", scales.len(), "Me").in_group(3));
        stages.push(StageSpec::new("reference_square", 1, "Me").in_group(3));
        stages.push(StageSpec::new("smooth_signal", SMOOTHING_WIDTH, "Ms").in_group(4));
        stages.push(StageSpec::new("smooth_reference", SMOOTHING_WIDTH, "Ms").in_group(4));
        stages.push(StageSpec::new("normalize", 1, "Mn"));
        let mut cfg = Self::new(PipelineKind::Mapping, accelerators, false, capacity, 0, stages)?;
        cfg.band_hz = Some(band_hz);
        Ok(cfg)
    }

    pub fn new(
        kind: PipelineKind,
        accelerators: usize,
        quantize_input: bool,
        capacity: usize,
        levels: usize,
        stages: Vec<StageSpec>,
    ) -> Result<Self> {
        let mut memories: Vec<String> = Vec::new();
        for s in &stages {
            if !memories.contains(&s.memory) {
                memories.push(s.memory.clone());
            }
        }
        let cfg = Self { kind, accelerators, quantize_input, capacity, levels, band_hz: None, stages, memories };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_accelerators(&self, accelerators: usize) -> Result<Self> {
        let cfg = Self { accelerators, ..self.clone() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_quantization(mut self, on: bool) -> Self {
        self.quantize_input = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.accelerators != 0 && self.accelerators != 2 {
            return Err(invalid(format!("accelerators must be 0 or 2, got {}", self.accelerators)));
        }
        if self.stages.is_empty() {
            return Err(invalid("pipeline needs at least one stage"));
        }
        if self.capacity == 0 {
            return Err(invalid("data-vector capacity must be positive"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.stages {
            if !seen.insert(&s.name) {
                return Err(invalid(format!("duplicate stage name {}", s.name)));
            }
            if !self.memories.contains(&s.memory) {
                return Err(invalid(format!("stage {} writes unknown memory {}", s.name, s.memory)));
            }
        }
        if self.kind == PipelineKind::Separation && self.levels == 0 {
            return Err(invalid("separation pipeline needs at least one level"));
        }
        Ok(())
    }

    /// Execution lanes: the main unit plus the accelerators.
    pub fn lanes(&self) -> usize {
        self.accelerators + 1
    }

    /// Ticks for one data vector of `n` samples.
    pub fn tick_report(&self, n: usize) -> TickReport {
        let mut per_stage = BTreeMap::new();
        let mut per_memory: BTreeMap<String, u64> = self.memories.iter().map(|m| (m.clone(), 0)).collect();
        for s in &self.stages {
            per_stage.insert(s.name.clone(), s.ticks(n));
            *per_memory.entry(s.memory.clone()).or_default() += s.outputs(n) as u64;
        }
        let mut total = 0;
        let mut i = 0;
        while i < self.stages.len() {
            let mut j = i + 1;
            if let Some(g) = self.stages[i].group {
                while j < self.stages.len() && self.stages[j].group == Some(g) {
                    j += 1;
                }
            }
            let costs: Vec<u64> = self.stages[i..j].iter().map(|s| s.ticks(n)).collect();
            total += if self.accelerators == 0 { costs.iter().sum() } else { makespan(costs, self.lanes()) };
            i = j;
        }
        TickReport { total_ticks: total, per_stage_ticks: per_stage, per_memory_writes: per_memory, output_checksum: 0 }
    }
}

/// Longest-first list scheduling onto `lanes` identical units.
fn makespan(mut costs: Vec<u64>, lanes: usize) -> u64 {
    costs.sort_unstable_by(|a, b| b.cmp(a));
    let mut load = vec![0u64; lanes.max(1)];
    for c in costs {
        let slot = load.iter_mut().min().expect("at least one lane");
        *slot += c;
    }
    load.into_iter().max().unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickReport {
    pub total_ticks: u64,
    pub per_stage_ticks: BTreeMap<String, u64>,
    pub per_memory_writes: BTreeMap<String, u64>,
    pub output_checksum: u64,
}

fn fnv1a(bytes: impl Iterator<Item = u8>) -> u64 {
    bytes.fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// FNV-1a over the IEEE bit patterns of `values`.
pub fn checksum(values: &[f64]) -> u64 {
    fnv1a(values.iter().flat_map(|v| v.to_bits().to_le_bytes()))
}

fn prepare_input(x: &[f64], config: &PipelineConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if x.len() != config.capacity {
        return Err(invalid(format!(
            "input has {} samples, the data vector holds {}",
            x.len(),
            config.capacity
        )));
    }
    Ok(if config.quantize_input { quantize(x) } else { x.to_vec() })
}

/// Oscillatory branch of the separation chain with its tick accounting.
pub fn run_pipeline(x: &[f64], config: &PipelineConfig, filters: &FilterPair, mask: &RectMask) -> Result<(Vec<f64>, TickReport)> {
    let input = prepare_input(x, config)?;
    let coeffs = swt_decompose(&input, filters, config.levels)?;
    let (osc, _) = threshold_coeffs(&coeffs, mask, filters)?;
    let out = iswt_reconstruct(&osc, filters)?;
    let mut report = config.tick_report(input.len());
    report.output_checksum = checksum(&out);
    Ok((out, report))
}

/// One normalised map row with its tick accounting. The band is the
/// config's, or else the span of the pseudo-frequencies of `params.scales`.
pub fn run_mapping_pipeline(x: &[f64], config: &PipelineConfig, params: &MorletParams) -> Result<(Vec<f64>, TickReport)> {
    let input = prepare_input(x, config)?;
    let band = config.band_hz.unwrap_or_else(|| params_band(params));
    let out = map_row(&input, &input, band, params)?;
    let mut report = config.tick_report(input.len());
    report.output_checksum = checksum(&out);
    Ok((out, report))
}

pub fn params_band(params: &MorletParams) -> (f64, f64) {
    params.scales.iter().map(|a| params.pseudo_frequency(*a)).fold((f64::INFINITY, 0.0), |(lo, hi), f| {
        (lo.min(f), hi.max(f))
    })
}

/// What the benchmark runs on each channel of the workload.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchTask {
    pub filters: FilterPair,
    /// Target oscillation per channel.
    pub target_freqs_hz: Vec<f64>,
    pub morlet: MorletParams,
    /// Repetitions of the workload that tick totals are scaled to.
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub kind: PipelineKind,
    pub accelerators: usize,
    pub quantize_input: bool,
    /// Ticks for one data vector.
    pub ticks_per_vector: u64,
    /// Ticks over every channel and repetition.
    pub total_ticks: u64,
    /// Combined checksum of the outputs of one pass over the workload.
    pub output_checksum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub repetitions: usize,
    pub channels: usize,
    /// Wall-clock of one pass of the plain software separation over the workload.
    pub software_wall_clock: Duration,
}

impl BenchReport {
    /// `(kind, ticks without accelerators / ticks with two)` when both are present.
    pub fn ratios(&self) -> Vec<(PipelineKind, f64)> {
        [PipelineKind::Separation, PipelineKind::Mapping]
            .into_iter()
            .filter_map(|k| {
                let find = |a| self.rows.iter().find(|r| r.kind == k && r.accelerators == a);
                let (slow, fast) = (find(0)?, find(2)?);
                Some((k, slow.total_ticks as f64 / fast.total_ticks as f64))
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("pipeline,accelerators,quantize_input,ticks_per_vector,total_ticks,output_checksum\n");
        for r in &self.rows {
            s += &format!(
                "{},{},{},{},{},{:016x}\n",
                r.kind.name(),
                r.accelerators,
                r.quantize_input,
                r.ticks_per_vector,
                r.total_ticks,
                r.output_checksum
            );
        }
        s
    }

    /// Human-readable summary; wall-clock is left out unless asked for so the
    /// text is reproducible.
    pub fn to_text(&self, include_timing: bool) -> String {
        let mut s = format!(
            "workload: {} channels x {} repetitions\n",
            self.channels, self.repetitions
        );
        for r in &self.rows {
            s += &format!(
                "{:<10} accelerators={} quantized={} ticks/vector={} total={}\n",
                r.kind.name(),
                r.accelerators,
                r.quantize_input,
                r.ticks_per_vector,
                r.total_ticks
            );
        }
        let ratios = self.ratios();
        if !ratios.is_empty() {
            s += "ratios (no accelerator / 2 accelerators):\n";
            for (k, v) in ratios {
                s += &format!("  {}: {:.3}\n", k.name(), v);
            }
        }
        if include_timing {
            s += &format!(
                "software separation wall-clock per pass: {:.3} ms\n",
                self.software_wall_clock.as_secs_f64() * 1e3
            );
        }
        s
    }
}

/// Runs every config over every channel of `workload`; tick totals are
/// scaled to `task.repetitions` passes (the cost model is data-independent).
pub fn benchmark_report(configs: &[PipelineConfig], workload: &MultiChannelSignal, task: &BenchTask) -> Result<BenchReport> {
    if configs.is_empty() {
        return Err(invalid("benchmark needs at least one configuration"));
    }
    if task.target_freqs_hz.len() != workload.n_channels() {
        return Err(invalid(format!(
            "{} target frequencies for {} channels",
            task.target_freqs_hz.len(),
            workload.n_channels()
        )));
    }
    let fs = workload.sample_rate_hz();
    let levels = configs.iter().find(|c| c.kind == PipelineKind::Separation).map_or(1, |c| c.levels);
    let despiker = Despiker::new(task.filters.clone(), levels)?;

    let started = Instant::now();
    let mut masks = Vec::with_capacity(workload.n_channels());
    for (x, f) in workload.data().iter().zip(&task.target_freqs_hz) {
        masks.push(despiker.separate(x, *f, fs)?.mask_used);
    }
    let software_wall_clock = started.elapsed();

    let mut rows = Vec::new();
    for cfg in configs {
        let mut digest = Vec::new();
        let mut per_vector = 0;
        for (x, mask) in workload.data().iter().zip(&masks) {
            let (_, report) = match cfg.kind {
                PipelineKind::Separation => run_pipeline(x, cfg, &task.filters, mask)?,
                PipelineKind::Mapping => run_mapping_pipeline(x, cfg, &task.morlet)?,
            };
            per_vector = report.total_ticks;
            digest.push(report.output_checksum);
        }
        rows.push(BenchRow {
            kind: cfg.kind,
            accelerators: cfg.accelerators,
            quantize_input: cfg.quantize_input,
            ticks_per_vector: per_vector,
            total_ticks: per_vector * (workload.n_channels() * task.repetitions) as u64,
            output_checksum: fnv1a(digest.iter().flat_map(|c| c.to_le_bytes())),
        });
    }
    Ok(BenchReport { rows, repetitions: task.repetitions, channels: workload.n_channels(), software_wall_clock })
}
