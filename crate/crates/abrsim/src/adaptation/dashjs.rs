//! Throughput rule of the dash.js reference player: an exponentially
//! weighted moving average over per-segment throughput, seeded from the MPD
//! download.

use super::{dashjs_estimate, AdaptationContext, AdaptationLogic, Decision, LogicParams};
use crate::model::index_for_bandwidth;
use crate::Scalar;

pub struct DashJs<T> {
    estimate: Option<T>,
    w1: T,
    w2: T,
}

impl<T: Scalar> DashJs<T> {
    pub fn new(params: &LogicParams<T>) -> Self {
        DashJs {
            estimate: None,
            w1: params.dashjs_w1,
            w2: params.dashjs_w2,
        }
    }
}

impl<T: Scalar> AdaptationLogic<T> for DashJs<T> {
    fn name(&self) -> &'static str {
        "dashjs"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        let b = match (self.estimate, ctx.last_throughput()) {
            // First decision: the MPD fetch is the only sample available.
            (None, _) => ctx.mpd_throughput,
            (Some(prev), Some(w)) => dashjs_estimate(prev, w, self.w1, self.w2),
            (Some(prev), None) => prev,
        };
        self.estimate = Some(b);
        Decision::immediate(index_for_bandwidth(ctx.ladder, b), ctx.now)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{ctx, record, CtxSpec};
    use super::*;
    use crate::model::default_ladder;

    #[test]
    fn first_pick_comes_from_mpd_estimate() {
        let ladder = default_ladder();
        let mut logic = DashJs::new(&LogicParams::default());
        let spec = CtxSpec {
            mpd_throughput: 900.0,
            ..CtxSpec::default()
        };
        let d = logic.decide(&ctx(&ladder, &[], &spec));
        assert_eq!(d.rep, 6); // 700 kbps, the highest rung strictly below 900
    }

    #[test]
    fn estimate_blends_toward_new_samples() {
        let ladder = default_ladder();
        let mut logic = DashJs::new(&LogicParams::default());
        let spec = CtxSpec {
            mpd_throughput: 1000.0,
            ..CtxSpec::default()
        };
        logic.decide(&ctx(&ladder, &[], &spec)); // estimate = 1000

        let history = [record(2000.0, 2000.0)];
        let spec = CtxSpec {
            current: Some(7),
            ..spec
        };
        let d = logic.decide(&ctx(&ladder, &history, &spec));
        // (0.7*1000 + 1.3*2000)/2 = 1650 -> highest rung below is 1600
        assert_eq!(d.rep, 10);
    }
}
