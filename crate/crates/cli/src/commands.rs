use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use spikesep::dataflow::{benchmark_report, BenchReport, BenchTask, PipelineConfig};
use spikesep::despike::Despiker;
use spikesep::signal::{ms_to_samples, TimeWindow};
use spikesep::simgen::build_realization;
use spikesep::tfmap::{detect_buildup, spatiotemporal_map_with_reference};
use spikesep::{BuildupDetection, MultiChannelSignal, RectMask};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{map_to_csv, map_to_pgm, read_signal, truth_manifest, write_file, write_signal};

/// Widest map image, in pixels.
pub const IMAGE_MAX_WIDTH: usize = 1000;
/// Largest `|oscillatory + transient - input|` accepted by `despike`.
pub const SPLIT_TOLERANCE: f64 = 1e-9;

pub fn realization_stem(index: usize) -> String {
    format!("realization_{index:03}")
}

/// Writes `realization_NNN.csv` and `realization_NNN.truth.txt` for each
/// realization; returns the signal paths in index order.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    cfg.validate()?;
    let sim = cfg.sim();
    (0..sim.n_realizations)
        .into_par_iter()
        .map(|i| {
            let r = build_realization(&sim, i)?;
            let csv = out.join(format!("{}.csv", realization_stem(i)));
            write_signal(&csv, &r.signal)?;
            write_file(&out.join(format!("{}.truth.txt", realization_stem(i))), truth_manifest(&r.truth))?;
            Ok(csv)
        })
        .collect()
}

/// Outcome of despiking one file.
#[derive(Debug, Clone)]
pub struct DespikeOutput {
    pub oscillatory: MultiChannelSignal,
    pub transient: MultiChannelSignal,
    pub masks: Vec<RectMask>,
    pub centers: Vec<usize>,
    pub max_split_error: Vec<f64>,
}

fn apply_overrides(cfg: &RunConfig, mask: RectMask, center: usize, n: usize, fs: f64) -> CliResult<RectMask> {
    let o = &cfg.mask;
    let mut mask = mask;
    if o.duration_ms.is_some() || o.center_sample.is_some() {
        let len = match o.duration_ms {
            Some(ms) => ms_to_samples(ms, fs)?,
            None => mask.window().len(),
        };
        let c = o.center_sample.unwrap_or(center);
        mask = mask.with_window(TimeWindow::centered_within(c, len, n)?);
    }
    if let Some(scales) = &o.scales {
        mask = RectMask::new(mask.window(), scales.clone(), mask.target_freq_hz())?;
    }
    Ok(mask)
}

/// Separates every channel of `input` at its target frequency and writes
/// `oscillatory.csv`, `transient.csv` and `mask.txt`.
pub fn cmd_despike(cfg: &RunConfig, input: &Path, out: &Path) -> CliResult<DespikeOutput> {
    cfg.validate()?;
    let signal = read_signal(input)?;
    let fs = signal.sample_rate_hz();
    let n = signal.n_samples();
    let targets = cfg.targets(signal.n_channels())?;
    let despiker = Despiker::new(cfg.filters()?, cfg.levels)?;

    let per_channel: Vec<(Vec<f64>, Vec<f64>, RectMask, usize)> = signal
        .data()
        .par_iter()
        .zip(&targets)
        .map(|(x, f)| {
            let res = despiker.separate(x, *f, fs)?;
            let mask = apply_overrides(cfg, res.mask_used.clone(), res.detection_center_sample, n, fs)?;
            if mask == res.mask_used {
                Ok((res.oscillatory, res.transient, mask, res.detection_center_sample))
            } else {
                let (osc, trans) = despiker.separate_with_mask(x, &mask)?;
                Ok((osc, trans, mask, res.detection_center_sample))
            }
        })
        .collect::<CliResult<_>>()?;

    let mut osc = Vec::new();
    let mut trans = Vec::new();
    let mut masks = Vec::new();
    let mut centers = Vec::new();
    let mut errors = Vec::new();
    for ((o, t, m, c), x) in per_channel.into_iter().zip(signal.data()) {
        let err = o.iter().zip(&t).zip(x).fold(0.0_f64, |e, ((a, b), v)| e.max((a + b - v).abs()));
        errors.push(err);
        osc.push(o);
        trans.push(t);
        masks.push(m);
        centers.push(c);
    }
    let output = DespikeOutput {
        oscillatory: signal.with_data(osc)?,
        transient: signal.with_data(trans)?,
        masks,
        centers,
        max_split_error: errors,
    };
    write_signal(&out.join("oscillatory.csv"), &output.oscillatory)?;
    write_signal(&out.join("transient.csv"), &output.transient)?;
    write_file(&out.join("mask.txt"), mask_report(&signal, &output))?;
    if let Some((i, e)) = output.max_split_error.iter().enumerate().find(|(_, e)| **e > SPLIT_TOLERANCE) {
        return Err(CliError::Validation(format!(
            "channel {} split error {e} exceeds {SPLIT_TOLERANCE}",
            signal.channel_labels()[i]
        )));
    }
    Ok(output)
}

fn mask_report(signal: &MultiChannelSignal, d: &DespikeOutput) -> String {
    let mut s = String::new();
    for (i, label) in signal.channel_labels().iter().enumerate() {
        let m = &d.masks[i];
        let scales: Vec<String> = m.scales().iter().map(usize::to_string).collect();
        let _ = writeln!(s, "{label}.target_freq_hz={}", m.target_freq_hz());
        let _ = writeln!(s, "{label}.detection_center_sample={}", d.centers[i]);
        let _ = writeln!(s, "{label}.window_start={}", m.window().start());
        let _ = writeln!(s, "{label}.window_len={}", m.window().len());
        let _ = writeln!(s, "{label}.scales={}", scales.join(","));
        let _ = writeln!(s, "{label}.max_split_error={:e}", d.max_split_error[i]);
        let _ = writeln!(s, "{label}.split_ok={}", d.max_split_error[i] <= SPLIT_TOLERANCE);
    }
    s
}

fn detection_report(det: &BuildupDetection, labels: &[String]) -> String {
    let names: Vec<&str> = det.channel_indices.iter().map(|i| labels[*i].as_str()).collect();
    let indices: Vec<String> = det.channel_indices.iter().map(|i| (i + 1).to_string()).collect();
    let mut s = String::new();
    let _ = writeln!(s, "detected={}", det.is_detected());
    let _ = writeln!(s, "channels={}", indices.join(","));
    let _ = writeln!(s, "channel_labels={}", names.join(","));
    let _ = writeln!(s, "onset_sample={}", det.onset_sample.map_or_else(|| "none".to_string(), |v| v.to_string()));
    let _ = writeln!(s, "peak_energy={}", det.peak_energy);
    let _ = writeln!(s, "threshold={}", det.threshold);
    s
}

/// Builds the band map of `input` (normalised by `reference` when given),
/// writes `map.csv`, `detection.txt` and `map.pgm`, and reports
/// [`CliError::NoDetection`] after writing when nothing crosses threshold.
pub fn cmd_map(cfg: &RunConfig, input: &Path, reference: Option<&Path>, out: &Path) -> CliResult<BuildupDetection> {
    cfg.validate()?;
    let signal = read_signal(input)?;
    let reference = match reference {
        Some(p) => read_signal(p)?,
        None => signal.clone(),
    };
    let params = cfg.morlet(cfg.band_hz, signal.sample_rate_hz())?;
    let map = spatiotemporal_map_with_reference(&signal, &reference, cfg.band_hz, &params)?;
    let det = detect_buildup(&map, cfg.k_sigma)?;
    write_file(&out.join("map.csv"), map_to_csv(&map))?;
    write_file(&out.join("detection.txt"), detection_report(&det, signal.channel_labels()))?;
    write_file(&out.join("map.pgm"), map_to_pgm(&map, IMAGE_MAX_WIDTH))?;
    if !det.is_detected() {
        return Err(CliError::NoDetection(format!(
            "no channel exceeds {} in {:?} Hz",
            det.threshold, cfg.band_hz
        )));
    }
    Ok(det)
}

/// Tick benchmark over realization 0 of the configured simulation; writes
/// `bench.csv` and `bench.txt` (without wall-clock).
pub fn cmd_bench(cfg: &RunConfig, out: &Path) -> CliResult<BenchReport> {
    cfg.validate()?;
    let sim = cfg.sim();
    let workload = build_realization(&sim, 0)?.signal;
    let filters = cfg.filters()?;
    let morlet = cfg.morlet(cfg.band_hz, sim.sample_rate_hz)?;
    let accels: Vec<usize> = cfg.accelerators.map_or_else(|| vec![0, 2], |a| vec![a]);
    let mut configs = Vec::new();
    for &a in &accels {
        configs.push(
            PipelineConfig::separation(a, &filters, cfg.levels, sim.n_samples)?.with_quantization(cfg.quantize_input),
        );
    }
    for &a in &accels {
        configs.push(
            PipelineConfig::mapping(a, &morlet, cfg.band_hz, sim.n_samples)?.with_quantization(cfg.quantize_input),
        );
    }
    let task = BenchTask {
        filters,
        target_freqs_hz: cfg.targets(workload.n_channels())?,
        morlet,
        repetitions: cfg.bench_repetitions,
    };
    let report = benchmark_report(&configs, &workload, &task)?;
    write_file(&out.join("bench.csv"), report.to_csv())?;
    write_file(&out.join("bench.txt"), report.to_text(false))?;
    Ok(report)
}
