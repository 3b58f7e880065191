//! Stationary (undecimated) wavelet transform with periodic boundaries.
//!
//! Level `j` filters are the level-1 filters with `2^(j-1) - 1` zeros inserted
//! between taps, so every level keeps the full input length:
//!
//! ```text
//! C_j[n] = sum_k h[k] C_{j-1}[n - k 2^(j-1)]      (C_0 = x)
//! W_j[n] = sum_k g[k] C_{j-1}[n - k 2^(j-1)]
//! ```
//!
//! Reconstruction inverts one level at a time with the matched synthesis
//! filters, `C_{j-1} = (H_j^T C_j + G_j^T W_j) / 2`, which is exact for
//! orthonormal pairs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Supported orthogonal wavelet families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Wavelet {
    Haar,
    Db2,
    Db3,
    #[default]
    Db4,
    Db5,
    Db6,
    Db7,
    Db8,
}

impl Wavelet {
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Wavelet::Haar,
            "db2" => Wavelet::Db2,
            "db3" => Wavelet::Db3,
            "db4" => Wavelet::Db4,
            "db5" => Wavelet::Db5,
            "db6" => Wavelet::Db6,
            "db7" => Wavelet::Db7,
            "db8" => Wavelet::Db8,
            other => return Err(invalid(format!("unknown wavelet '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Wavelet::Haar => "haar",
            Wavelet::Db2 => "db2",
            Wavelet::Db3 => "db3",
            Wavelet::Db4 => "db4",
            Wavelet::Db5 => "db5",
            Wavelet::Db6 => "db6",
            Wavelet::Db7 => "db7",
            Wavelet::Db8 => "db8",
        }
    }

    /// Scaling (low-pass) filter, normalised so the taps sum to sqrt(2).
    pub fn scaling_filter(&self) -> &'static [f64] {
        match self {
            Wavelet::Haar => &HAAR,
            Wavelet::Db2 => &DB2,
            Wavelet::Db3 => &DB3,
            Wavelet::Db4 => &DB4,
            Wavelet::Db5 => &DB5,
            Wavelet::Db6 => &DB6,
            Wavelet::Db7 => &DB7,
            Wavelet::Db8 => &DB8,
        }
    }

    pub fn filters(&self) -> FilterPair {
        FilterPair::orthogonal(self.scaling_filter().to_vec())
            .expect("built-in scaling filters are well formed")
    }
}

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB2: [f64; 4] = [
    0.482_962_913_144_534_14,
    0.836_516_303_737_807_9,
    0.224_143_868_042_013_4,
    -0.129_409_522_551_260_38,
];

const DB3: [f64; 6] = [
    0.332_670_552_950_082_6,
    0.806_891_509_311_092_6,
    0.459_877_502_118_491_57,
    -0.135_011_020_010_254_59,
    -0.085_441_273_882_026_66,
    0.035_226_291_885_709_54,
];

const DB4: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_6,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_08,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

const DB5: [f64; 10] = [
    0.160_102_397_974_192_9,
    0.603_829_269_797_189_7,
    0.724_308_528_437_772_9,
    0.138_428_145_901_320_73,
    -0.242_294_887_066_382_03,
    -0.032_244_869_584_638_375,
    0.077_571_493_840_045_7,
    -0.006_241_490_212_798_274,
    -0.012_580_751_999_082,
    0.003_335_725_285_473_771,
];

const DB6: [f64; 12] = [
    0.111_540_743_350_109_46,
    0.494_623_890_398_453_1,
    0.751_133_908_021_095_4,
    0.315_250_351_709_197_6,
    -0.226_264_693_965_439_82,
    -0.129_766_867_567_261_94,
    0.097_501_605_587_323_05,
    0.027_522_865_530_305_73,
    -0.031_582_039_317_486_03,
    0.000_553_842_201_161_496_1,
    0.004_777_257_510_945_511,
    -0.001_077_301_085_308_479_6,
];

const DB7: [f64; 14] = [
    0.077_852_054_085_009_18,
    0.396_539_319_481_917_3,
    0.729_132_090_846_235_1,
    0.469_782_287_405_193_1,
    -0.143_906_003_928_564_98,
    -0.224_036_184_993_874_98,
    0.071_309_219_266_830_26,
    0.080_612_609_151_083_07,
    -0.038_029_936_935_014_41,
    -0.016_574_541_630_666_88,
    0.012_550_998_556_099_84,
    0.000_429_577_972_921_366_5,
    -0.001_801_640_704_047_491,
    0.000_353_713_799_974_520_25,
];

const DB8: [f64; 16] = [
    0.054_415_842_243_104_01,
    0.312_871_590_914_3,
    0.675_630_736_297_289_8,
    0.585_354_683_654_206_7,
    -0.015_829_105_256_349_306,
    -0.284_015_542_961_546_9,
    0.000_472_484_573_913_282_8,
    0.128_747_426_620_478_46,
    -0.017_369_301_001_807_546,
    -0.044_088_253_930_794_75,
    0.013_981_027_917_398_282,
    0.008_746_094_047_405_777,
    -0.004_870_352_993_451_574,
    -0.000_391_740_373_376_947,
    0.000_675_449_406_450_569_4,
    -0.000_117_476_784_124_769_53,
];

/// Analysis filters plus the matched synthesis pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub low_pass: Vec<f64>,
    pub high_pass: Vec<f64>,
    pub rec_low_pass: Vec<f64>,
    pub rec_high_pass: Vec<f64>,
}

impl FilterPair {
    /// Orthogonal pair from a scaling filter: `g[k] = (-1)^k h[L-1-k]`,
    /// synthesis filters are the time-reversed analysis filters.
    pub fn orthogonal(low_pass: Vec<f64>) -> Result<Self> {
        let len = low_pass.len();
        let high_pass: Vec<f64> = (0..len)
            .map(|k| {
                let v = low_pass[len - 1 - k];
                if k % 2 == 0 { v } else { -v }
            })
            .collect();
        let rec_low_pass = low_pass.iter().rev().copied().collect();
        let rec_high_pass = high_pass.iter().rev().copied().collect();
        Self::new(low_pass, high_pass, rec_low_pass, rec_high_pass)
    }

    pub fn new(
        low_pass: Vec<f64>,
        high_pass: Vec<f64>,
        rec_low_pass: Vec<f64>,
        rec_high_pass: Vec<f64>,
    ) -> Result<Self> {
        let len = low_pass.len();
        if len == 0 {
            return Err(invalid("filter taps must be non-empty"));
        }
        for taps in [&low_pass, &high_pass, &rec_low_pass, &rec_high_pass] {
            if taps.len() != len {
                return Err(invalid("all four filters must have the same length"));
            }
            if taps.iter().any(|t| !t.is_finite()) {
                return Err(invalid("filter taps must be finite"));
            }
        }
        Ok(Self { low_pass, high_pass, rec_low_pass, rec_high_pass })
    }

    pub fn len(&self) -> usize {
        self.low_pass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low_pass.is_empty()
    }
}

impl Default for FilterPair {
    fn default() -> Self {
        Wavelet::default().filters()
    }
}

/// Approximation and detail sequences for levels `1..=J`, index 0 is level 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoefficients {
    pub approximations: Vec<Vec<f64>>,
    pub details: Vec<Vec<f64>>,
}

impl WaveletCoefficients {
    pub fn zeros(levels: usize, n: usize) -> Self {
        Self {
            approximations: vec![vec![0.0; n]; levels],
            details: vec![vec![0.0; n]; levels],
        }
    }

    pub fn levels(&self) -> usize {
        self.details.len()
    }

    /// Source signal length.
    pub fn len(&self) -> usize {
        self.details.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Detail sequence for 1-based `level`.
    pub fn detail(&self, level: usize) -> &[f64] {
        &self.details[level - 1]
    }

    pub fn approximation(&self, level: usize) -> &[f64] {
        &self.approximations[level - 1]
    }

    pub fn deepest_approximation(&self) -> &[f64] {
        self.approximations.last().map_or(&[], Vec::as_slice)
    }

    pub fn validate(&self) -> Result<()> {
        if self.details.is_empty() {
            return Err(Error::InvalidStructure("coefficients need at least one level".into()));
        }
        if self.approximations.len() != self.details.len() {
            return Err(Error::InvalidStructure(format!(
                "{} approximation levels but {} detail levels",
                self.approximations.len(),
                self.details.len()
            )));
        }
        let n = self.len();
        let bad = self
            .approximations
            .iter()
            .chain(&self.details)
            .any(|seq| seq.len() != n);
        if bad || n == 0 {
            return Err(Error::InvalidStructure("every level must have the source length".into()));
        }
        Ok(())
    }

    /// Elementwise `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64 + Copy) -> Self {
        let zip = |xs: &[Vec<f64>], ys: &[Vec<f64>]| -> Vec<Vec<f64>> {
            xs.iter()
                .zip(ys)
                .map(|(x, y)| x.iter().zip(y).map(|(a, b)| f(*a, *b)).collect())
                .collect()
        };
        Self {
            approximations: zip(&self.approximations, &other.approximations),
            details: zip(&self.details, &other.details),
        }
    }
}

/// Inserts `2^(level-1) - 1` zeros between consecutive taps.
pub fn upsample_filter(taps: &[f64], level: usize) -> Result<Vec<f64>> {
    if level < 1 {
        return Err(invalid("level must be at least 1"));
    }
    let step = level_step(level);
    if taps.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = vec![0.0; (taps.len() - 1) * step + 1];
    for (k, t) in taps.iter().enumerate() {
        out[k * step] = *t;
    }
    Ok(out)
}

pub(crate) fn level_step(level: usize) -> usize {
    1usize << (level - 1)
}

/// `y[n] = sum_k taps[k] x[(n - k*step) mod N]`, summed in tap order.
pub fn circular_convolve(x: &[f64], taps: &[f64], step: usize) -> Vec<f64> {
    let n = x.len();
    let mut y = vec![0.0; n];
    if n == 0 {
        return y;
    }
    let offsets: Vec<usize> = (0..taps.len()).map(|k| (k * step) % n).collect();
    for (i, out) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (t, off) in taps.iter().zip(&offsets) {
            acc += t * x[(i + n - off) % n];
        }
        *out = acc;
    }
    y
}

/// One decomposition level: low- and high-pass branches computed concurrently.
fn analysis_level(prev: &[f64], filters: &FilterPair, level: usize) -> (Vec<f64>, Vec<f64>) {
    let step = level_step(level);
    rayon::join(
        || circular_convolve(prev, &filters.low_pass, step),
        || circular_convolve(prev, &filters.high_pass, step),
    )
}

pub fn max_levels(n: usize) -> usize {
    if n < 2 {
        0
    } else {
        (usize::BITS - 1 - n.leading_zeros()) as usize
    }
}

pub fn swt_decompose(x: &[f64], filters: &FilterPair, levels: usize) -> Result<WaveletCoefficients> {
    if levels < 1 {
        return Err(invalid("decomposition needs at least one level"));
    }
    if levels > max_levels(x.len()) {
        return Err(invalid(format!(
            "signal of {} samples is shorter than 2^{levels}",
            x.len()
        )));
    }
    let mut coeffs = WaveletCoefficients {
        approximations: Vec::with_capacity(levels),
        details: Vec::with_capacity(levels),
    };
    for level in 1..=levels {
        let prev = coeffs.approximations.last().map_or(x, Vec::as_slice);
        let (a, d) = analysis_level(prev, filters, level);
        coeffs.approximations.push(a);
        coeffs.details.push(d);
    }
    Ok(coeffs)
}

/// Undoes one level: `(H^T approx + G^T detail) / 2`.
pub(crate) fn synthesis_level(approx: &[f64], detail: &[f64], filters: &FilterPair, level: usize) -> Vec<f64> {
    let (lo, hi) = rayon::join(
        || synthesis_branch(approx, &filters.rec_low_pass, level),
        || synthesis_branch(detail, &filters.rec_high_pass, level),
    );
    lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
}

/// Convolution with the synthesis filter advanced by its span, i.e. the
/// transpose of the matching analysis convolution.
pub(crate) fn synthesis_branch(x: &[f64], rec_taps: &[f64], level: usize) -> Vec<f64> {
    let n = x.len();
    let step = level_step(level);
    let last = rec_taps.len().saturating_sub(1);
    let mut y = vec![0.0; n];
    if n == 0 {
        return y;
    }
    let offsets: Vec<usize> = (0..rec_taps.len()).map(|k| ((last - k) * step) % n).collect();
    for (i, out) in y.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (t, off) in rec_taps.iter().zip(&offsets) {
            acc += t * x[(i + off) % n];
        }
        *out = acc;
    }
    y
}

pub fn iswt_reconstruct(coeffs: &WaveletCoefficients, filters: &FilterPair) -> Result<Vec<f64>> {
    coeffs.validate()?;
    let mut approx = coeffs.deepest_approximation().to_vec();
    for level in (1..=coeffs.levels()).rev() {
        approx = synthesis_level(&approx, coeffs.detail(level), filters, level);
    }
    Ok(approx)
}

/// Energy centroid of a tap vector, in taps.
fn energy_centre(taps: &[f64]) -> f64 {
    let total: f64 = taps.iter().map(|t| t * t).sum();
    taps.iter().enumerate().map(|(k, t)| k as f64 * t * t).sum::<f64>() / total
}

fn full_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Single filter mapping the input to level `level`: `(approximation, detail)`.
pub fn equivalent_filters(filters: &FilterPair, level: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if level < 1 {
        return Err(invalid("level must be at least 1"));
    }
    let mut low = vec![1.0];
    for j in 1..level {
        low = full_convolution(&low, &upsample_filter(&filters.low_pass, j)?);
    }
    let detail = full_convolution(&low, &upsample_filter(&filters.high_pass, level)?);
    let approx = full_convolution(&low, &upsample_filter(&filters.low_pass, level)?);
    Ok((approx, detail))
}

/// Rounded lag, in samples, between the signal and its level-`level`
/// coefficients: `(approximation, detail)`.
///
/// The analysis filters are causal, so a feature at time `t` shows up near
/// `t + lag` in the coefficients. The lag is the energy centroid of the
/// equivalent filter of each branch.
pub fn coefficient_lag(filters: &FilterPair, level: usize) -> (usize, usize) {
    match equivalent_filters(filters, level.max(1)) {
        Ok((a, d)) => (energy_centre(&a).round() as usize, energy_centre(&d).round() as usize),
        Err(_) => (0, 0),
    }
}

/// Level whose nominal detail band `[fs/2^(j+1), fs/2^j)` contains `freq_hz`.
pub fn level_for_frequency(freq_hz: f64, sample_rate_hz: f64) -> Result<usize> {
    let nyquist = sample_rate_hz / 2.0;
    if !(freq_hz > 0.0) || !(freq_hz < nyquist) {
        return Err(invalid(format!(
            "frequency {freq_hz} Hz outside (0, {nyquist}) Hz"
        )));
    }
    let mut level = 1;
    let mut low_edge = sample_rate_hz / 4.0;
    while freq_hz < low_edge {
        level += 1;
        low_edge /= 2.0;
    }
    Ok(level)
}

/// Nominal detail band of a level, `(fs/2^(j+1), fs/2^j)`.
pub fn level_band(level: usize, sample_rate_hz: f64) -> (f64, f64) {
    let hi = sample_rate_hz / (1u64 << level) as f64;
    (hi / 2.0, hi)
}
