//! Memoryless baseline: always pick the highest representation that fits
//! under the most recent throughput sample.

use super::{AdaptationContext, AdaptationLogic, Decision};
use crate::model::index_for_bandwidth;
use crate::Scalar;

#[derive(Default)]
pub struct Instant;

impl Instant {
    pub fn new() -> Self {
        Instant
    }
}

impl<T: Scalar> AdaptationLogic<T> for Instant {
    fn name(&self) -> &'static str {
        "instant"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        let w = ctx.last_throughput().unwrap_or(ctx.mpd_throughput);
        Decision::immediate(index_for_bandwidth(ctx.ladder, w), ctx.now)
    }
}
