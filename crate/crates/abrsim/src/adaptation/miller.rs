//! Miller et al.: buffer-threshold adaptation. An aggressive fast-start phase
//! climbs while the buffer is still low; afterwards, switches are governed by
//! buffer thresholds (panic / low / max) and the buffer growth trend. Above
//! `b_max` the logic asks the engine to hold requests until the buffer has
//! drained to the optimum, keeping the fill level inside a target corridor.

use super::{AdaptationContext, AdaptationLogic, BufferGate, Decision, LogicParams};
use crate::{lit, Scalar};

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    FastStart,
    Steady,
}

pub struct Miller<T> {
    b_low: T,
    b_max: T,
    b_opt: T,
    phase: Phase,
    prev_buffer: Option<T>,
}

impl<T: Scalar> Miller<T> {
    pub fn new(params: &LogicParams<T>) -> Self {
        Miller {
            b_low: params.miller_b_low,
            b_max: params.miller_b_max,
            // Optimum sits midway between the low and max thresholds.
            b_opt: (params.miller_b_low + params.miller_b_max) / lit(2.0),
            phase: Phase::FastStart,
            prev_buffer: None,
        }
    }
}

impl<T: Scalar> AdaptationLogic<T> for Miller<T> {
    fn name(&self) -> &'static str {
        "miller"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        let b_min = lit::<T>(2.0) * ctx.segment_duration;
        let buffer = ctx.buffer_level;
        let trend_up = match self.prev_buffer {
            Some(prev) => buffer > prev,
            None => false,
        };
        self.prev_buffer = Some(buffer);

        let gate = Some(BufferGate {
            limit: self.b_max,
            drain_to: self.b_opt,
        });

        let (current, w) = match (ctx.current_rep, ctx.last_throughput()) {
            (Some(c), Some(w)) => (c, w),
            _ => {
                return Decision {
                    rep: 1,
                    not_before: ctx.now,
                    max_buffer: gate,
                }
            }
        };
        let max_id = ctx.ladder.max_id();

        if self.phase == Phase::FastStart && buffer >= self.b_low {
            self.phase = Phase::Steady;
        }

        let rep = match self.phase {
            Phase::FastStart => {
                if buffer < b_min {
                    // Emergency floor; counts as the down-switch that ends
                    // the fast start.
                    self.phase = Phase::Steady;
                    1
                } else if current < max_id && w > ctx.ladder.bitrate(current + 1) {
                    current + 1
                } else if w < ctx.ladder.bitrate(current) {
                    self.phase = Phase::Steady;
                    (current - 1).max(1)
                } else {
                    current
                }
            }
            Phase::Steady => {
                if buffer < b_min {
                    1
                } else if buffer < self.b_low && ctx.ladder.bitrate(current) > w {
                    (current - 1).max(1)
                } else if trend_up && current < max_id && w > ctx.ladder.bitrate(current + 1) {
                    current + 1
                } else {
                    current
                }
            }
        };

        Decision {
            rep,
            not_before: ctx.now,
            max_buffer: gate,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::{ctx, record, CtxSpec};
    use super::*;
    use crate::model::default_ladder;

    fn logic() -> Miller<f64> {
        Miller::new(&LogicParams::default())
    }

    #[test]
    fn every_decision_carries_the_buffer_gate() {
        let ladder = default_ladder();
        let mut m = logic();
        let d = m.decide(&ctx(&ladder, &[], &CtxSpec::default()));
        assert_eq!(d.rep, 1);
        let gate = d.max_buffer.unwrap();
        assert_eq!(gate.limit, 50.0);
        assert_eq!(gate.drain_to, 35.0);
    }

    #[test]
    fn fast_start_climbs_while_throughput_supports_the_next_level() {
        let ladder = default_ladder();
        let mut m = logic();
        let history = [record(600.0, 400.0)];
        let spec = CtxSpec {
            current: Some(3),
            buffer: 10.0, // above panic, below b_low: still fast-starting
            ..CtxSpec::default()
        };
        // 600 kbps > bitrate(4) = 350: step up.
        assert_eq!(m.decide(&ctx(&ladder, &history, &spec)).rep, 4);
    }

    #[test]
    fn panic_floor_drops_to_lowest_rep() {
        let ladder = default_ladder();
        let mut m = logic();
        let history = [record(5000.0, 400.0)];
        let spec = CtxSpec {
            current: Some(8),
            buffer: 1.0, // below b_min = 4 s
            ..CtxSpec::default()
        };
        assert_eq!(m.decide(&ctx(&ladder, &history, &spec)).rep, 1);
    }

    #[test]
    fn steady_up_switch_requires_positive_buffer_trend() {
        let ladder = default_ladder();
        let mut m = logic();
        let history = [record(2000.0, 400.0)];

        // First steady call at buffer 25 establishes the trend baseline.
        let spec = CtxSpec {
            current: Some(5),
            buffer: 25.0,
            ..CtxSpec::default()
        };
        assert_eq!(m.decide(&ctx(&ladder, &history, &spec)).rep, 5);

        // Growing buffer + headroom: climb one level.
        let spec_up = CtxSpec {
            buffer: 27.0,
            ..spec
        };
        assert_eq!(m.decide(&ctx(&ladder, &history, &spec_up)).rep, 6);

        // Shrinking buffer: hold even though throughput has headroom.
        let spec_down = CtxSpec {
            current: Some(6),
            buffer: 26.0,
            ..spec
        };
        assert_eq!(m.decide(&ctx(&ladder, &history, &spec_down)).rep, 6);
    }

    #[test]
    fn low_buffer_and_heavy_rep_step_down() {
        let ladder = default_ladder();
        let mut m = logic();
        m.phase = Phase::Steady;
        m.prev_buffer = Some(20.0);
        let history = [record(400.0, 400.0)];
        let spec = CtxSpec {
            current: Some(6), // 700 kbps > 400 kbps measured
            buffer: 10.0,
            ..CtxSpec::default()
        };
        assert_eq!(m.decide(&ctx(&ladder, &history, &spec)).rep, 5);
    }
}
