//! Pluggable rate-adaptation logics.
//!
//! Every logic implements [`AdaptationLogic`]: a stateful object that is asked
//! once per segment which representation to fetch next. The engine feeds it an
//! [`AdaptationContext`] snapshot (ladder, buffer level, download history) and
//! receives a [`Decision`] back. Logics never talk to the network themselves,
//! which is what makes them replayable and comparable.
//!
//! The registry ([`build_logic`]) knows ten logics by canonical name, listed
//! in [`LOGIC_NAMES`]. Tunable constants live in [`LogicParams`] so that a
//! parameter file can override any of them without touching code.

use std::fmt::Debug;

use crate::model::Ladder;
use crate::netsim::DownloadRecord;
use crate::{lit, Error, Result, Scalar};

mod dashjs;
mod festive;
mod instant;
mod liu;
mod miller;
mod osmf;
mod panda;
mod qdash;
mod thang;
mod tianliu;

pub use dashjs::DashJs;
pub use festive::Festive;
pub use instant::Instant;
pub use liu::Liu;
pub use miller::Miller;
pub use osmf::Osmf;
pub use panda::Panda;
pub use qdash::Qdash;
pub use thang::Thang;
pub use tianliu::TianLiu;

/// Canonical registry names, in the order reports list them.
pub const LOGIC_NAMES: [&str; 10] = [
    "dashjs", "festive", "instant", "liu", "miller", "osmf", "panda", "qdash", "thang", "tianliu",
];

/// Everything a logic may look at when deciding the next segment's quality.
#[derive(Clone, Copy, Debug)]
pub struct AdaptationContext<'a, T> {
    pub ladder: &'a Ladder<T>,
    /// Media seconds per segment.
    pub segment_duration: T,
    /// Index of the segment about to be requested (0-based).
    pub segment_index: usize,
    /// Representation of the previously downloaded segment, `None` before the
    /// first one.
    pub current_rep: Option<u32>,
    /// Buffered media in seconds at decision time.
    pub buffer_level: T,
    /// Completed segment downloads, oldest first. Does not include the MPD.
    pub history: &'a [DownloadRecord<T>],
    /// Throughput measured while fetching the MPD — the only bandwidth signal
    /// available before any segment has been downloaded.
    pub mpd_throughput: T,
    /// Wall-clock time of the decision.
    pub now: T,
}

impl<T: Scalar> AdaptationContext<'_, T> {
    /// Measured throughput of the most recent segment download, if any.
    pub fn last_throughput(&self) -> Option<T> {
        self.history.last().map(|r| r.measured_throughput)
    }
}

/// A buffer ceiling with hysteresis: once `limit` is exceeded the request is
/// held back until the buffer has drained to `drain_to`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BufferGate<T> {
    pub limit: T,
    pub drain_to: T,
}

/// What a logic wants the engine to do for the next segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision<T> {
    /// Representation id to request, always within the ladder.
    pub rep: u32,
    /// Earliest wall-clock time the request may be issued.
    pub not_before: T,
    /// Optional buffer ceiling; see [`BufferGate`].
    pub max_buffer: Option<BufferGate<T>>,
}

impl<T: Scalar> Decision<T> {
    /// Request `rep` as soon as possible.
    pub fn immediate(rep: u32, now: T) -> Self {
        Decision {
            rep,
            not_before: now,
            max_buffer: None,
        }
    }
}

/// One rate-adaptation algorithm. Implementations carry their own state; the
/// decision sequence is fully determined by the construction seed and the
/// sequence of contexts they are shown.
pub trait AdaptationLogic<T: Scalar> {
    /// Registry name of this logic.
    fn name(&self) -> &'static str;
    /// Pick the representation for the next segment.
    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T>;
}

/// EWMA used by the dash.js reference player: the new sample is weighted
/// `w2`, the running estimate `w1`, and the pair is halved.
pub fn dashjs_estimate<T: Scalar>(previous: T, sample: T, w1: T, w2: T) -> T {
    (w1 * previous + w2 * sample) / lit(2.0)
}

/// Harmonic mean; `None` for an empty slice. Suppresses outlier spikes, which
/// is why window-based logics prefer it over the arithmetic mean.
pub fn harmonic_mean<T: Scalar>(samples: &[T]) -> Option<T> {
    if samples.is_empty() {
        return None;
    }
    let inv_sum = samples
        .iter()
        .fold(T::zero(), |acc, &s| acc + T::one() / s);
    Some(T::from_usize(samples.len()).unwrap() / inv_sum)
}

/// Tunable constants for all logics, overridable from a parameter file.
///
/// | key | default | meaning |
/// |-----|---------|---------|
/// | `dashjs.w1` | 0.7 | weight of the running estimate |
/// | `dashjs.w2` | 1.3 | weight of the new throughput sample |
/// | `festive.window` | 20 | harmonic-mean window (samples) |
/// | `festive.efficiency_factor` | 0.85 | margin applied to the estimate |
/// | `festive.target_buffer_s` | 30 | buffer level the scheduler maintains |
/// | `liu.epsilon` | 0.2 | up-switch band: step up when mu > 1 + epsilon |
/// | `liu.gamma_down` | 0.67 | down-switch threshold on mu |
/// | `miller.b_low_s` | 20 | lower buffer threshold |
/// | `miller.b_max_s` | 50 | buffer ceiling (requests defer above it) |
/// | `panda.kappa_kbps_per_s` | 100 | additive probe rate |
/// | `panda.safety` | 0.9 | share of the target the pick may use |
/// | `thang.window` | 5 | sliding-average window (samples) |
/// | `thang.safety` | 0.9 | margin applied to the estimate |
/// | `thang.deviation_threshold` | 0.3 | relative deviation per weight doubling |
/// | `tianliu.target_buffer_s` | 20 | buffer level mapping to full throughput use |
/// | `tianliu.panic_ratio` | 0.5 | throughput collapse triggering a direct drop |
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogicParams<T> {
    pub dashjs_w1: T,
    pub dashjs_w2: T,
    pub festive_window: usize,
    pub festive_efficiency: T,
    pub festive_target_buffer: T,
    pub liu_epsilon: T,
    pub liu_gamma_down: T,
    pub miller_b_low: T,
    pub miller_b_max: T,
    pub panda_kappa: T,
    pub panda_safety: T,
    pub thang_window: usize,
    pub thang_safety: T,
    pub thang_deviation_threshold: T,
    pub tianliu_target_buffer: T,
    pub tianliu_panic_ratio: T,
}

impl<T: Scalar> Default for LogicParams<T> {
    fn default() -> Self {
        LogicParams {
            dashjs_w1: lit(0.7),
            dashjs_w2: lit(1.3),
            festive_window: 20,
            festive_efficiency: lit(0.85),
            festive_target_buffer: lit(30.0),
            liu_epsilon: lit(0.2),
            liu_gamma_down: lit(0.67),
            miller_b_low: lit(20.0),
            miller_b_max: lit(50.0),
            panda_kappa: lit(100.0),
            panda_safety: lit(0.9),
            thang_window: 5,
            thang_safety: lit(0.9),
            thang_deviation_threshold: lit(0.3),
            tianliu_target_buffer: lit(20.0),
            tianliu_panic_ratio: lit(0.5),
        }
    }
}

impl<T: Scalar> LogicParams<T> {
    /// Parses a `key=value` parameter file. Blank lines and `#` comments are
    /// skipped; a `version=1` entry is required; unknown keys are errors so a
    /// typo cannot silently fall back to a default.
    pub fn from_str(s: &str, origin: &str) -> Result<Self> {
        let mut params = LogicParams::default();
        let mut version_seen = false;
        for (idx, raw) in s.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(origin, line_no, format!("expected key=value, got `{line}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key == "version" {
                if value != "1" {
                    return Err(Error::parse(
                        origin,
                        line_no,
                        format!("unsupported version `{value}` (expected 1)"),
                    ));
                }
                version_seen = true;
                continue;
            }
            params.apply(key, value, origin, line_no)?;
        }
        if !version_seen {
            return Err(Error::invalid(
                "params",
                "missing `version=1` entry".to_string(),
            ));
        }
        Ok(params)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text, &path.display().to_string())
    }

    fn apply(&mut self, key: &str, value: &str, origin: &str, line: usize) -> Result<()> {
        let scalar = |v: &str| -> Result<T> {
            let f: f64 = v.parse().map_err(|_| {
                Error::parse(origin, line, format!("field {key}: invalid number `{v}`"))
            })?;
            Ok(lit(f))
        };
        let count = |v: &str| -> Result<usize> {
            v.parse().map_err(|_| {
                Error::parse(origin, line, format!("field {key}: invalid integer `{v}`"))
            })
        };
        match key {
            "dashjs.w1" => self.dashjs_w1 = scalar(value)?,
            "dashjs.w2" => self.dashjs_w2 = scalar(value)?,
            "festive.window" => self.festive_window = count(value)?,
            "festive.efficiency_factor" => self.festive_efficiency = scalar(value)?,
            "festive.target_buffer_s" => self.festive_target_buffer = scalar(value)?,
            "liu.epsilon" => self.liu_epsilon = scalar(value)?,
            "liu.gamma_down" => self.liu_gamma_down = scalar(value)?,
            "miller.b_low_s" => self.miller_b_low = scalar(value)?,
            "miller.b_max_s" => self.miller_b_max = scalar(value)?,
            "panda.kappa_kbps_per_s" => self.panda_kappa = scalar(value)?,
            "panda.safety" => self.panda_safety = scalar(value)?,
            "thang.window" => self.thang_window = count(value)?,
            "thang.safety" => self.thang_safety = scalar(value)?,
            "thang.deviation_threshold" => self.thang_deviation_threshold = scalar(value)?,
            "tianliu.target_buffer_s" => self.tianliu_target_buffer = scalar(value)?,
            "tianliu.panic_ratio" => self.tianliu_panic_ratio = scalar(value)?,
            _ => {
                return Err(Error::parse(
                    origin,
                    line,
                    format!("unknown parameter `{key}`"),
                ))
            }
        }
        Ok(())
    }
}

/// Instantiates a logic by registry name. `seed` feeds logics that randomize
/// (currently only FESTIVE's request scheduler).
pub fn build_logic<T: Scalar>(
    name: &str,
    params: &LogicParams<T>,
    seed: u64,
) -> Result<Box<dyn AdaptationLogic<T>>> {
    let logic: Box<dyn AdaptationLogic<T>> = match name {
        "dashjs" => Box::new(DashJs::new(params)),
        "festive" => Box::new(Festive::new(params, seed)),
        "instant" => Box::new(Instant::new()),
        "liu" => Box::new(Liu::new(params)),
        "miller" => Box::new(Miller::new(params)),
        "osmf" => Box::new(Osmf::new()),
        "panda" => Box::new(Panda::new(params)),
        "qdash" => Box::new(Qdash::new()),
        "thang" => Box::new(Thang::new(params)),
        "tianliu" => Box::new(TianLiu::new(params)),
        _ => {
            return Err(Error::UnknownLogic {
                name: name.to_string(),
                known: LOGIC_NAMES.join(", "),
            })
        }
    };
    Ok(logic)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// A download record whose wall-clock throughput is exactly `throughput`
    /// (zero request latency, so transfer time equals wall time).
    pub fn record(throughput: f64, size: f64) -> DownloadRecord<f64> {
        let wall = size / throughput;
        DownloadRecord {
            request_time: 0.0,
            complete_time: wall,
            size,
            transfer_time: wall,
            measured_throughput: throughput,
        }
    }

    pub struct CtxSpec {
        pub current: Option<u32>,
        pub buffer: f64,
        pub segment_duration: f64,
        pub mpd_throughput: f64,
        pub now: f64,
    }

    impl Default for CtxSpec {
        fn default() -> Self {
            CtxSpec {
                current: None,
                buffer: 10.0,
                segment_duration: 2.0,
                mpd_throughput: 58.8,
                now: 0.0,
            }
        }
    }

    pub fn ctx<'a>(
        ladder: &'a Ladder<f64>,
        history: &'a [DownloadRecord<f64>],
        spec: &CtxSpec,
    ) -> AdaptationContext<'a, f64> {
        AdaptationContext {
            ladder,
            segment_duration: spec.segment_duration,
            segment_index: history.len(),
            current_rep: spec.current,
            buffer_level: spec.buffer,
            history,
            mpd_throughput: spec.mpd_throughput,
            now: spec.now,
        }
    }
}
