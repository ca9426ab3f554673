//! Liu et al.: compare segment fetch time against media playback time. The
//! ratio mu = segment_duration / fetch_time says how sustainable the current
//! quality is — step up cautiously when there is clear headroom, drop
//! directly to a sustainable level when there is not.

use super::{AdaptationContext, AdaptationLogic, Decision, LogicParams};
use crate::model::index_for_bandwidth;
use crate::Scalar;

pub struct Liu<T> {
    epsilon: T,
    gamma_down: T,
}

impl<T: Scalar> Liu<T> {
    pub fn new(params: &LogicParams<T>) -> Self {
        Liu {
            epsilon: params.liu_epsilon,
            gamma_down: params.liu_gamma_down,
        }
    }
}

impl<T: Scalar> AdaptationLogic<T> for Liu<T> {
    fn name(&self) -> &'static str {
        "liu"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        let (current, last) = match (ctx.current_rep, ctx.history.last()) {
            (Some(c), Some(l)) => (c, l),
            _ => return Decision::immediate(1, ctx.now),
        };
        let fetch_time = last.complete_time - last.request_time;
        let mu = ctx.segment_duration / fetch_time;

        let rep = if mu > T::one() + self.epsilon {
            (current + 1).min(ctx.ladder.max_id())
        } else if mu < self.gamma_down {
            index_for_bandwidth(ctx.ladder, last.measured_throughput)
        } else {
            current
        };
        Decision::immediate(rep, ctx.now)
    }
}
