//! Thang et al.: a sliding-window throughput average whose newest sample is
//! weighted by how far it deviates from the average of the older samples.
//! Small fluctuations are smoothed away; a large drop makes the newest sample
//! dominate almost immediately, so the client backs off within one segment.

use super::{AdaptationContext, AdaptationLogic, Decision, LogicParams};
use crate::model::index_for_bandwidth;
use crate::{lit, Scalar};

pub struct Thang<T> {
    window: usize,
    safety: T,
    deviation_threshold: T,
}

impl<T: Scalar> Thang<T> {
    pub fn new(params: &LogicParams<T>) -> Self {
        Thang {
            window: params.thang_window,
            safety: params.thang_safety,
            deviation_threshold: params.thang_deviation_threshold,
        }
    }

    /// Weighted sliding average over the last `window` samples (oldest
    /// first). The newest sample's weight is 2^(delta / threshold) where
    /// delta is its relative deviation from the mean of the older samples,
    /// normalized by the newest sample itself — which is what makes downward
    /// deviations (drops) weigh far more than upward ones of the same size.
    fn estimate(&self, samples: &[T]) -> T {
        let newest = *samples.last().expect("estimate needs samples");
        let older = &samples[..samples.len() - 1];
        if older.is_empty() {
            return newest;
        }
        let older_sum = older.iter().fold(T::zero(), |a, &s| a + s);
        let avg = older_sum / T::from_usize(older.len()).unwrap();
        let delta = (newest - avg).abs() / newest;
        let weight = lit::<T>(2.0).powf(delta / self.deviation_threshold);
        (older_sum + weight * newest) / (T::from_usize(older.len()).unwrap() + weight)
    }
}

impl<T: Scalar> AdaptationLogic<T> for Thang<T> {
    fn name(&self) -> &'static str {
        "thang"
    }

    fn decide(&mut self, ctx: &AdaptationContext<'_, T>) -> Decision<T> {
        if ctx.history.is_empty() {
            return Decision::immediate(1, ctx.now);
        }
        let start = ctx.history.len().saturating_sub(self.window);
        let samples: Vec<T> = ctx.history[start..]
            .iter()
            .map(|r| r.measured_throughput)
            .collect();
        let estimate = self.estimate(&samples);
        Decision::immediate(
            index_for_bandwidth(ctx.ladder, self.safety * estimate),
            ctx.now,
        )
    }
}
