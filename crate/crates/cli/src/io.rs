//! File formats: signal CSV, ground-truth manifests, map CSV and PGM images.
//!
//! Signal CSV: a `# rate=<Hz>` line, a line of channel labels, then one row
//! per sample. Values are written in Rust's shortest round-trip form, so a
//! write/read cycle is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use spikesep::simgen::{GroundTruth, OverlapRegime};
use spikesep::{MultiChannelSignal, SpatioTemporalMap};

use crate::error::{CliError, CliResult};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn signal_to_csv(signal: &MultiChannelSignal) -> String {
    let mut out = format!("# rate={}\n", signal.sample_rate_hz());
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(signal.channel_labels()).expect("in-memory write");
    for i in 0..signal.n_samples() {
        w.write_record(signal.data().iter().map(|row| row[i].to_string()))
            .expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8"));
    out
}

pub fn write_signal(path: &Path, signal: &MultiChannelSignal) -> CliResult<()> {
    write_file(path, signal_to_csv(signal))
}

pub fn read_signal(path: &Path) -> CliResult<MultiChannelSignal> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_signal(path, &text)
}

/// Parses the signal CSV format; errors carry 1-based line numbers.
pub fn parse_signal(path: &Path, text: &str) -> CliResult<MultiChannelSignal> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let rate: f64 = first
        .trim()
        .strip_prefix("# rate=")
        .ok_or_else(|| parse_err(path, 1, "expected `# rate=<Hz>`"))?
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad sample rate in {first:?}")))?;

    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(rest.as_bytes());
    let labels: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(path, 2, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if labels.is_empty() || labels.iter().all(String::is_empty) {
        return Err(parse_err(path, 2, "missing channel labels"));
    }
    let mut data = vec![Vec::new(); labels.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize + 1);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize + 1);
        if record.len() != labels.len() {
            return Err(parse_err(path, line, format!("{} fields, expected {}", record.len(), labels.len())));
        }
        for (col, field) in data.iter_mut().zip(record.iter()) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, line, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("non-finite value {field:?}")));
            }
            col.push(v);
        }
    }
    Ok(MultiChannelSignal::new(rate, labels, data)?)
}

/// Flat `key=value` manifest of one realization.
pub fn truth_manifest(truth: &GroundTruth) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "realization={}", truth.realization_index);
    let _ = writeln!(s, "seed={}", truth.seed);
    let _ = writeln!(s, "channels={}", truth.channels.len());
    for (i, c) in truth.channels.iter().enumerate() {
        let p = format!("ch{}", i + 1);
        let _ = writeln!(s, "{p}.regime={}", c.regime.name());
        let _ = writeln!(s, "{p}.burst_freq_hz={}", c.burst_freq_hz);
        let _ = writeln!(s, "{p}.burst_start={}", c.burst_window.start());
        let _ = writeln!(s, "{p}.burst_len={}", c.burst_window.len());
        let _ = writeln!(s, "{p}.transient_start={}", c.transient_window.start());
        let _ = writeln!(s, "{p}.transient_len={}", c.transient_window.len());
        let _ = writeln!(s, "{p}.overlap_fraction={}", c.overlap_fraction);
        let _ = writeln!(s, "{p}.sweep_fraction={}", c.sweep_fraction);
    }
    s
}

/// Reads any flat `key=value` file; blank lines and `#` comments are skipped.
pub fn read_key_values(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| parse_err(path, i + 1, "expected key=value"))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Regime names accepted in manifests.
pub fn parse_regime(name: &str) -> CliResult<OverlapRegime> {
    Ok(OverlapRegime::from_name(name)?)
}

/// One line per channel: label followed by its map values.
pub fn map_to_csv(map: &SpatioTemporalMap) -> String {
    let mut out = format!(
        "# rate={} band={}:{}\n",
        map.sample_rate_hz, map.band_hz.0, map.band_hz.1
    );
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    for (label, row) in map.channel_labels.iter().zip(&map.values) {
        let fields = std::iter::once(label.clone()).chain(row.iter().map(f64::to_string));
        w.write_record(fields).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8"));
    out
}

/// Time cells averaged per image column so the image is at most `max_width` wide.
pub fn downsample_factor(n_samples: usize, max_width: usize) -> usize {
    n_samples.div_ceil(max_width.max(1)).max(1)
}

/// Binary PGM (P5): one row per channel, linear gray ramp over `[0, max]`.
pub fn map_to_pgm(map: &SpatioTemporalMap, max_width: usize) -> Vec<u8> {
    let n = map.n_samples();
    let factor = downsample_factor(n, max_width);
    let width = n.div_ceil(factor).max(1);
    let height = map.n_channels();
    let peak = map.max();
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for row in &map.values {
        if row.is_empty() {
            out.push(0);
            continue;
        }
        for cell in row.chunks(factor) {
            let mean = cell.iter().sum::<f64>() / cell.len() as f64;
            let level = if peak > 0.0 { (255.0 * mean / peak).round().clamp(0.0, 255.0) } else { 0.0 };
            out.push(level as u8);
        }
    }
    out
}
