//! OSMF (Open Source Media Framework) rule: scale the current bitrate by the
//! ratio of segment duration to the time the last payload spent on the wire,
//! then map the product onto the ladder. Jumps are unrestricted in both
//! directions, which makes the behavior swing hard around level changes.

use super::{AdaptationContext, AdaptationLogic, Decision};
use crate::model::index_for_bandwidth;
use crate::Scalar;

#[derive(Default)]
pub struct Osmf;

impl Osmf {
    pub fn new() -> Self {
        Osmf
    }
}

impl<T: Scalar> AdaptationLogic<T> for Osmf {
    fn name(&self) -> &'static str {
        "osmf"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        let (current, last) = match (ctx.current_rep, ctx.history.last()) {
            (Some(c), Some(l)) => (c, l),
            _ => return Decision::immediate(1, ctx.now),
        };
        // Transfer time, not wall time: OSMF rates the link itself, so the
        // factor ignores the per-request latency.
        let f = ctx.segment_duration / last.transfer_time;
        let target = ctx.ladder.bitrate(current) * f;
        Decision::immediate(index_for_bandwidth(ctx.ladder, target), ctx.now)
    }
}
