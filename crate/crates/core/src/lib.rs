//! Separation of transient spikes from gamma oscillations in multichannel
//! recordings, channel x time energy maps for build-up detection, and a
//! tick-cost model of the accelerated dataflow pipeline.

// `!(x > 0.0)` is used on purpose: it rejects NaN together with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataflow;
pub mod despike;
pub mod error;
pub mod fir;
pub mod signal;
pub mod simgen;
pub mod swt;
pub mod tfmap;

pub use dataflow::{PipelineConfig, StageSpec, TickReport};
pub use despike::{Despiker, RectMask, SeparationResult};
pub use error::{Error, Result};
pub use signal::{MultiChannelSignal, TimeWindow};
pub use swt::{FilterPair, Wavelet, WaveletCoefficients};
pub use tfmap::{BuildupDetection, MorletParams, SpatioTemporalMap};
