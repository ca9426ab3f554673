//! PANDA: probe-and-adapt. A virtual target rate `x` is probed additively
//! upward as long as the measured throughput keeps up and reset down to the
//! measurement when it does not; the pick uses a multiplicative safety margin
//! below `x`. Additive probing keeps competing clients from oscillating, at
//! the cost of slow upward convergence.

use super::{AdaptationContext, AdaptationLogic, Decision, LogicParams};
use crate::model::index_for_bandwidth;
use crate::{lit, Scalar};

pub struct Panda<T> {
    kappa: T,
    safety: T,
    x: Option<T>,
}

impl<T: Scalar> Panda<T> {
    pub fn new(params: &LogicParams<T>) -> Self {
        Panda {
            kappa: params.panda_kappa,
            safety: params.panda_safety,
            x: None,
        }
    }
}

impl<T: Scalar> AdaptationLogic<T> for Panda<T> {
    fn name(&self) -> &'static str {
        "panda"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        let w = match (self.x, ctx.last_throughput()) {
            (Some(_), Some(w)) => w,
            _ => {
                self.x = Some(ctx.ladder.bitrate(1));
                return Decision::immediate(1, ctx.now);
            }
        };
        let x = self.x.unwrap();
        let increment = lit::<T>(0.5) * ctx.segment_duration * self.kappa;
        // Throughput at or above the target says nothing about the link's
        // ceiling (the target itself was the bottleneck), so probe upward.
        let x = if w >= x { x + increment } else { w };
        self.x = Some(x);

        let mut rep = index_for_bandwidth(ctx.ladder, self.safety * x);
        if ctx.ladder.bitrate(rep) >= w {
            // A probe step may cross a ladder rung before the link has proven
            // it can carry it; never emit above the measured rate.
            rep = index_for_bandwidth(ctx.ladder, w);
        }
        Decision::immediate(rep, ctx.now)
    }
}
