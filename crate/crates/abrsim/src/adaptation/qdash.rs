//! QDASH: quality-aware stepping. Upward moves jump straight to the level the
//! throughput supports, but a deep downward move is softened by inserting the
//! midpoint level first, so viewers see a staircase instead of a cliff.

use super::{AdaptationContext, AdaptationLogic, Decision};
use crate::model::index_for_bandwidth;
use crate::Scalar;

#[derive(Default)]
pub struct Qdash;

impl Qdash {
    pub fn new() -> Self {
        Qdash
    }
}

impl<T: Scalar> AdaptationLogic<T> for Qdash {
    fn name(&self) -> &'static str {
        "qdash"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        let w = ctx.last_throughput().unwrap_or(ctx.mpd_throughput);
        let target = index_for_bandwidth(ctx.ladder, w);
        let rep = match ctx.current_rep {
            Some(current) if target + 1 < current => {
                // Gap of two or more: insert the ceiling midpoint. Repeated
                // decisions walk the rest of the way down.
                (current + target).div_ceil(2)
            }
            _ => target,
        };
        Decision::immediate(rep, ctx.now)
    }
}
