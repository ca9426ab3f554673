//! Tian & Liu: buffer-aware throughput scaling. The fraction of the measured
//! throughput the client dares to use grows linearly with the buffer level,
//! from one half when empty to the full measurement at the target fill. A
//! collapse of the throughput below half the current bitrate bypasses the
//! smoothing and drops straight to a sustainable level.

use super::{AdaptationContext, AdaptationLogic, Decision, LogicParams};
use crate::model::index_for_bandwidth;
use crate::{lit, Scalar};

pub struct TianLiu<T> {
    target_buffer: T,
    panic_ratio: T,
}

impl<T: Scalar> TianLiu<T> {
    pub fn new(params: &LogicParams<T>) -> Self {
        TianLiu {
            target_buffer: params.tianliu_target_buffer,
            panic_ratio: params.tianliu_panic_ratio,
        }
    }
}

impl<T: Scalar> AdaptationLogic<T> for TianLiu<T> {
    fn name(&self) -> &'static str {
        "tianliu"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        let (current, w) = match (ctx.current_rep, ctx.last_throughput()) {
            (Some(c), Some(w)) => (c, w),
            _ => {
                return Decision::immediate(
                    index_for_bandwidth(ctx.ladder, ctx.mpd_throughput),
                    ctx.now,
                )
            }
        };
        let rep = if w < self.panic_ratio * ctx.ladder.bitrate(current) {
            index_for_bandwidth(ctx.ladder, w)
        } else {
            let fill = (ctx.buffer_level / self.target_buffer).min(T::one());
            let target = w * (lit::<T>(0.5) + lit::<T>(0.5) * fill);
            index_for_bandwidth(ctx.ladder, target)
        };
        Decision::immediate(rep, ctx.now)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{ctx, record, CtxSpec};
    use super::*;
    use crate::model::default_ladder;

    #[test]
    fn full_buffer_uses_the_whole_measurement() {
        let ladder = default_ladder();
        let mut logic = TianLiu::new(&LogicParams::default());
        let history = [record(1050.0, 1000.0)];
        let spec = CtxSpec {
            current: Some(5),
            buffer: 20.0,
            ..CtxSpec::default()
        };
        assert_eq!(logic.decide(&ctx(&ladder, &history, &spec)).rep, 7);
    }

    #[test]
    fn empty_buffer_halves_the_target() {
        let ladder = default_ladder();
        let mut logic = TianLiu::new(&LogicParams::default());
        let history = [record(1050.0, 1000.0)];
        let spec = CtxSpec {
            current: Some(5),
            buffer: 0.0,
            ..CtxSpec::default()
        };
        // 1050 * 0.5 = 525 -> rung 500.
        assert_eq!(logic.decide(&ctx(&ladder, &history, &spec)).rep, 5);
    }

    #[test]
    fn throughput_collapse_panics_to_sustainable_level() {
        let ladder = default_ladder();
        let mut logic = TianLiu::new(&LogicParams::default());
        let history = [record(300.0, 1000.0)];
        let spec = CtxSpec {
            current: Some(9), // 300 < 0.5 * 1300
            buffer: 40.0,
            ..CtxSpec::default()
        };
        assert_eq!(logic.decide(&ctx(&ladder, &history, &spec)).rep, 3);
    }

    #[test]
    fn first_pick_uses_the_mpd_estimate() {
        let ladder = default_ladder();
        let mut logic = TianLiu::new(&LogicParams::default());
        let spec = CtxSpec {
            mpd_throughput: 58.8,
            ..CtxSpec::default()
        };
        assert_eq!(logic.decide(&ctx(&ladder, &[], &spec)).rep, 1);
    }
}
