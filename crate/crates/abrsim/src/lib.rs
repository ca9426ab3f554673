//! Deterministic replay harness for HTTP adaptive-streaming rate adaptation.
//!
//! The crate simulates a single DASH-style client that downloads a segmented
//! media presentation over a piecewise-constant bandwidth trace. A pluggable
//! adaptation logic picks the representation for every segment; the engine
//! tracks the playout buffer, startup and stalls; the metrics module reduces
//! a finished session to the objective QoE numbers used for comparing logics.
//!
//! The pieces line up as a pipeline:
//!
//! * [`model`] — representation ladder, bandwidth trace, session config.
//! * [`netsim`] — closed-form downloads over the trace and the `tc`/netem
//!   shaping-script emitter for live testbeds.
//! * [`adaptation`] — the ten adaptation logics behind one interface.
//! * [`engine`] — the discrete-event session loop producing a [`engine::SessionLog`].
//! * [`metrics`] — inefficiency, instability, stalls, switches, summaries.
//! * [`tracegen`] — constraint-driven generator for reference-style traces.
//!
//! ```
//! use abrsim::adaptation::{build_logic, LogicParams};
//! use abrsim::engine::run_session;
//! use abrsim::metrics::summarize;
//! use abrsim::model::{BandwidthTrace, Ladder, SessionConfig};
//!
//! let ladder: Ladder<f64> = Ladder::default_ladder();
//! let trace = BandwidthTrace::new(vec![(0.0, 2000.0), (30.0, 800.0)], 60.0).unwrap();
//! let config = SessionConfig::new(2.0, 60.0);
//! let mut logic = build_logic("dashjs", &LogicParams::default(), config.seed).unwrap();
//! let log = run_session(&config, &trace, &ladder, logic.as_mut()).unwrap();
//! let report = summarize(&log).unwrap();
//! assert_eq!(log.segments.len(), 30);
//! assert!(report.media_throughput > 0.0);
//! ```

pub mod adaptation;
pub mod engine;
mod error;
pub mod metrics;
pub mod model;
pub mod netsim;
pub mod tracegen;

pub use error::{Error, Result};

use std::fmt::{Debug, Display};

/// Scalar type the whole simulation core is generic over.
///
/// Times (seconds), bandwidths/bitrates (kbit/s), buffer levels and metric
/// values are all expressed in one floating-point scalar so the pipeline can
/// be instantiated with `f32` or `f64`. The `*64` aliases below fix the
/// default `f64` instantiation used by the CLI.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: num_traits::Float
        + num_traits::FromPrimitive
        + num_traits::ToPrimitive
        + Display
        + Debug
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the active scalar type.
pub(crate) fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("constant representable in scalar type")
}

pub type Ladder64 = model::Ladder<f64>;
pub type Trace64 = model::BandwidthTrace<f64>;
pub type SessionConfig64 = model::SessionConfig<f64>;
pub type SessionLog64 = engine::SessionLog<f64>;
pub type SummaryReport64 = metrics::SummaryReport<f64>;
