//! FESTIVE: harmonic-mean bandwidth estimation, strictly gradual ±1 switching
//! with a delayed up-switch counter, and a randomized request scheduler that
//! spreads clients out in time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{harmonic_mean, AdaptationContext, AdaptationLogic, Decision, LogicParams};
use crate::model::index_for_bandwidth;
use crate::{lit, Scalar};

pub struct Festive<T> {
    window: usize,
    efficiency: T,
    target_buffer: T,
    /// Consecutive up-recommendations seen so far; an up-switch fires only
    /// once this reaches the current rep index, so climbing gets slower the
    /// higher the client already is.
    up_count: u32,
    rng: ChaCha8Rng,
}

impl<T: Scalar> Festive<T> {
    pub fn new(params: &LogicParams<T>, seed: u64) -> Self {
        Festive {
            window: params.festive_window,
            efficiency: params.festive_efficiency,
            target_buffer: params.festive_target_buffer,
            up_count: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Next request time: keep roughly `target_buffer` seconds buffered, with
    /// a uniform jitter of half a segment duration on either side.
    fn schedule(&mut self, ctx: &AdaptationContext<'_, T>) -> T {
        let surplus = (ctx.buffer_level - self.target_buffer).max(T::zero());
        let u: f64 = self.rng.gen();
        let jitter = (lit::<T>(u) - lit(0.5)) * ctx.segment_duration;
        (ctx.now + surplus + jitter).max(ctx.now)
    }
}

impl<T: Scalar> AdaptationLogic<T> for Festive<T> {
    fn name(&self) -> &'static str {
        "festive"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        let not_before = self.schedule(ctx);
        let current = match ctx.current_rep {
            None => {
                // Conservative start at the lowest quality.
                return Decision {
                    rep: 1,
                    not_before,
                    max_buffer: None,
                };
            }
            Some(r) => r,
        };

        let recent: Vec<T> = ctx
            .history
            .iter()
            .rev()
            .take(self.window)
            .map(|r| r.measured_throughput)
            .collect();
        let estimate = harmonic_mean(&recent).unwrap_or(ctx.mpd_throughput);
        let target = index_for_bandwidth(ctx.ladder, self.efficiency * estimate);

        let rep = if target > current {
            self.up_count += 1;
            if self.up_count >= current {
                self.up_count = 0;
                (current + 1).min(ctx.ladder.max_id())
            } else {
                current
            }
        } else if target < current {
            self.up_count = 0;
            current - 1
        } else {
            self.up_count = 0;
            current
        };

        Decision {
            rep,
            not_before,
            max_buffer: None,
        }
    }
}
