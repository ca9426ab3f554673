//! Session metrics.
//!
//! All metrics are pure functions of a finished [`SessionLog`]; nothing here
//! feeds back into the simulation. The two headline metrics follow the usual
//! definitions for rate-adaptation studies:
//!
//! * **Inefficiency** — per-segment mismatch between the encoded bitrate `b`
//!   and the throughput `W` the segment actually saw, `|b - W| / W`, reported
//!   both summed over the session and as the per-segment mean.
//! * **Instability** — weighted switching activity on the bitrate series
//!   resampled at 1 Hz of *media* time (each segment holds its bitrate over
//!   its playback interval, so stalls do not stretch the series). For each
//!   second `t` past the window `k`:
//!
//!   ```text
//!                sum_{d=0}^{k-1} |s[t-d] - s[t-d-1]| * (k - d)
//!   inst(t) =    ---------------------------------------------
//!                sum_{d=1}^{k}   s[t-d] * (k - d)
//!   ```
//!
//!   and the session value is the mean of `inst(t)` over all valid `t`. The
//!   weight `w(d) = k - d` means the `d = k` term of the denominator is
//!   always zero; it is kept in the loop so the code matches the formula
//!   term for term.

use crate::engine::{SegmentRecord, SessionLog};
use crate::{lit, Error, Result, Scalar};
use serde::Serialize;

/// Default instability window in seconds of media time.
pub const DEFAULT_INSTABILITY_WINDOW: usize = 20;

/// Bitrate/throughput mismatch over one session.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inefficiency<T> {
    /// Mean of `|b - W| / W` over all segments.
    pub mean: T,
    /// Sum of `|b - W| / W` over all segments.
    pub sum: T,
}

/// Bitrate switching counts and magnitudes over one session.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchStats<T> {
    /// Number of adjacent segment pairs with different representations.
    pub count: usize,
    /// Mean |Δ representation id| over switches (0 if none).
    pub mean_amplitude: T,
    /// Mean |Δ nominal bitrate| in kbit/s over switches (0 if none).
    pub mean_amplitude_kbps: T,
}

/// Per-segment mismatch between encoded bitrate and observed throughput.
pub fn inefficiency<T: Scalar>(segments: &[SegmentRecord<T>]) -> Inefficiency<T> {
    let sum = segments
        .iter()
        .map(|s| (s.bitrate - s.measured_throughput).abs() / s.measured_throughput)
        .fold(T::zero(), |acc, x| acc + x);
    let mean = if segments.is_empty() {
        T::zero()
    } else {
        sum / T::from_usize(segments.len()).unwrap()
    };
    Inefficiency { mean, sum }
}

/// Selected bitrate resampled at 1 Hz of media time.
///
/// Sample `s` (one per media second) carries the bitrate of the segment that
/// plays during `[s, s+1)`. The series length is `ceil(media_duration)`.
pub fn bitrate_series_1hz<T: Scalar>(log: &SessionLog<T>) -> Vec<T> {
    let len = log
        .config
        .media_duration
        .ceil()
        .to_usize()
        .unwrap_or_default();
    let mut series = Vec::with_capacity(len);
    for s in 0..len {
        let idx = (T::from_usize(s).unwrap() / log.config.segment_duration)
            .floor()
            .to_usize()
            .unwrap_or_default()
            .min(log.segments.len().saturating_sub(1));
        series.push(log.segments[idx].bitrate);
    }
    series
}

/// Mean weighted switching activity over a 1 Hz bitrate series.
///
/// Errors if the series is shorter than `k + 1` samples (no valid window).
pub fn instability<T: Scalar>(series: &[T], k: usize) -> Result<T> {
    if k == 0 {
        return Err(Error::invalid("instability window", "k must be at least 1"));
    }
    if series.len() < k + 1 {
        return Err(Error::invalid(
            "bitrate series",
            format!(
                "need at least {} samples for window k = {}, got {}",
                k + 1,
                k,
                series.len()
            ),
        ));
    }
    // w(d) = k - d, and the absolute one-step differences, precomputed so the
    // per-t loops are plain dot products.
    let weights: Vec<T> = (0..=k).map(|d| T::from_usize(k - d).unwrap()).collect();
    let diffs: Vec<T> = series
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .collect();

    let mut acc = T::zero();
    for t in k..series.len() {
        let mut num = T::zero();
        for d in 0..k {
            num = num + diffs[t - d - 1] * weights[d];
        }
        let mut den = T::zero();
        for d in 1..=k {
            den = den + series[t - d] * weights[d];
        }
        acc = acc + num / den;
    }
    Ok(acc / T::from_usize(series.len() - k).unwrap())
}

/// Mean nominal bitrate over the fetched segments, kbit/s.
pub fn media_throughput<T: Scalar>(segments: &[SegmentRecord<T>]) -> T {
    if segments.is_empty() {
        return T::zero();
    }
    segments
        .iter()
        .map(|s| s.bitrate)
        .fold(T::zero(), |acc, x| acc + x)
        / T::from_usize(segments.len()).unwrap()
}

/// Time-averaged buffer level in seconds over the playback window
/// `[playback_start, session_end]`, by trapezoidal integration of the
/// logged buffer samples.
pub fn avg_buffer<T: Scalar>(log: &SessionLog<T>) -> T {
    let start = log.playback_start;
    let end = log.session_end;
    if end <= start {
        return T::zero();
    }
    let mut area = T::zero();
    for w in log.buffer_samples.windows(2) {
        let (t1, b1) = w[0];
        let (t2, b2) = w[1];
        if t2 <= t1 {
            continue; // instantaneous jump (credit) — no area
        }
        let lo = if t1 > start { t1 } else { start };
        let hi = if t2 < end { t2 } else { end };
        if hi <= lo {
            continue;
        }
        let slope = (b2 - b1) / (t2 - t1);
        let bl = b1 + slope * (lo - t1);
        let bh = b1 + slope * (hi - t1);
        area = area + (bl + bh) / lit::<T>(2.0) * (hi - lo);
    }
    area / (end - start)
}

/// Count and size of representation switches between adjacent segments.
pub fn switch_stats<T: Scalar>(segments: &[SegmentRecord<T>]) -> SwitchStats<T> {
    let mut count = 0usize;
    let mut amp = T::zero();
    let mut amp_kbps = T::zero();
    for w in segments.windows(2) {
        if w[0].rep != w[1].rep {
            count += 1;
            let d = w[1].rep.abs_diff(w[0].rep);
            amp = amp + T::from_u32(d).unwrap();
            amp_kbps = amp_kbps + (w[1].bitrate - w[0].bitrate).abs();
        }
    }
    let (mean_amplitude, mean_amplitude_kbps) = if count == 0 {
        (T::zero(), T::zero())
    } else {
        let n = T::from_usize(count).unwrap();
        (amp / n, amp_kbps / n)
    };
    SwitchStats {
        count,
        mean_amplitude,
        mean_amplitude_kbps,
    }
}

/// Everything the summary table reports about one session.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryReport<T> {
    pub logic: String,
    pub segment_duration: T,
    pub inefficiency: T,
    pub inefficiency_sum: T,
    pub instability: T,
    pub media_throughput: T,
    pub avg_buffer: T,
    pub startup_delay: T,
    pub stall_count: usize,
    pub stall_total: T,
    pub switch_count: usize,
    pub switch_amplitude_mean: T,
    pub switch_amplitude_kbps_mean: T,
}

impl<T: Scalar> SummaryReport<T> {
    /// Header matching [`SummaryReport::csv_row`].
    pub const CSV_HEADER: &'static str = "logic,segment_duration_s,inefficiency,inefficiency_sum,instability,media_throughput_kbps,avg_buffer_s,startup_delay_s,stall_count,stall_total_s,switch_count,switch_amplitude_mean,switch_amplitude_kbps_mean";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.logic,
            self.segment_duration,
            self.inefficiency,
            self.inefficiency_sum,
            self.instability,
            self.media_throughput,
            self.avg_buffer,
            self.startup_delay,
            self.stall_count,
            self.stall_total,
            self.switch_count,
            self.switch_amplitude_mean,
            self.switch_amplitude_kbps_mean
        )
    }
}

/// Compute the full summary with the default instability window.
pub fn summarize<T: Scalar>(log: &SessionLog<T>) -> Result<SummaryReport<T>> {
    summarize_with_window(log, DEFAULT_INSTABILITY_WINDOW)
}

/// Compute the full summary with an explicit instability window `k`.
pub fn summarize_with_window<T: Scalar>(
    log: &SessionLog<T>,
    k: usize,
) -> Result<SummaryReport<T>> {
    let ineff = inefficiency(&log.segments);
    let series = bitrate_series_1hz(log);
    let inst = instability(&series, k)?;
    let switches = switch_stats(&log.segments);
    Ok(SummaryReport {
        logic: log.logic_name.clone(),
        segment_duration: log.config.segment_duration,
        inefficiency: ineff.mean,
        inefficiency_sum: ineff.sum,
        instability: inst,
        media_throughput: media_throughput(&log.segments),
        avg_buffer: avg_buffer(log),
        startup_delay: log.startup_delay(),
        stall_count: log.stalls.len(),
        stall_total: log.stall_total(),
        switch_count: switches.count,
        switch_amplitude_mean: switches.mean_amplitude,
        switch_amplitude_kbps_mean: switches.mean_amplitude_kbps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::{build_logic, LogicParams};
    use crate::engine::{run_session, StallInterval};
    use crate::model::{BandwidthTrace, Ladder, SessionConfig};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn seg(rep: u32, bitrate: f64, throughput: f64) -> SegmentRecord<f64> {
        SegmentRecord {
            index: 0,
            rep,
            bitrate,
            request_time: 0.0,
            complete_time: 0.0,
            measured_throughput: throughput,
            buffer_after: 0.0,
        }
    }

    fn fake_log(
        segments: Vec<SegmentRecord<f64>>,
        samples: Vec<(f64, f64)>,
        start: f64,
        end: f64,
    ) -> SessionLog<f64> {
        let n = segments.len().max(1) as f64;
        SessionLog {
            logic_name: "test".to_string(),
            config: SessionConfig::new(2.0, 2.0 * n),
            mpd: crate::netsim::DownloadRecord {
                request_time: 0.0,
                complete_time: 0.17,
                size: 10.0,
                transfer_time: 0.01,
                measured_throughput: 58.8,
            },
            segments,
            stalls: Vec::new(),
            playback_start: start,
            session_end: end,
            buffer_samples: samples,
        }
    }

    #[test]
    fn inefficiency_hand_examples() {
        // 900 kbit/s encoded over 1000 kbit/s observed: exactly 0.1.
        let one = inefficiency(&[seg(6, 900.0, 1000.0)]);
        assert_eq!(one.sum, 0.1);
        assert_eq!(one.mean, 0.1);
        // Adding a 1200-over-1000 segment: sum 0.3, mean 0.15 (to within one
        // rounding step of the decimal arithmetic).
        let two = inefficiency(&[seg(6, 900.0, 1000.0), seg(8, 1200.0, 1000.0)]);
        assert_relative_eq!(two.sum, 0.3, max_relative = 1e-15);
        assert_relative_eq!(two.mean, 0.15, max_relative = 1e-15);
        // Perfect match scores zero.
        let zero = inefficiency(&[seg(6, 900.0, 900.0)]);
        assert_eq!(zero.sum, 0.0);
        // Empty session scores zero.
        let empty = inefficiency::<f64>(&[]);
        assert_eq!(empty.sum, 0.0);
        assert_eq!(empty.mean, 0.0);
    }

    #[test]
    fn instability_hand_example() {
        // One window, k = 2: series 1, 1, 2 gives numerator |2-1|*2 = 2 and
        // denominator 1*1 + 1*0 = 1.
        let v = instability(&[1.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(v, 2.0);
        // Constant series: zero.
        let c = instability(&[700.0; 40], 20).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn instability_rejects_short_series() {
        assert!(instability(&[1.0, 2.0], 2).is_err());
        assert!(instability(&[1.0; 20], 20).is_err());
        assert!(instability(&[1.0; 21], 20).is_ok());
        assert!(instability(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn instability_matches_bruteforce_small() {
        // Independent literal transcription of the formula.
        fn oracle(s: &[f64], k: usize) -> f64 {
            let mut total = 0.0;
            let mut terms = 0usize;
            for t in k..s.len() {
                let mut num = 0.0;
                for d in 0..k {
                    num += (s[t - d] - s[t - d - 1]).abs() * (k - d) as f64;
                }
                let mut den = 0.0;
                for d in 1..=k {
                    den += s[t - d] * (k - d) as f64;
                }
                total += num / den;
                terms += 1;
            }
            total / terms as f64
        }
        let series: Vec<f64> = (0..60)
            .map(|i| 500.0 + 400.0 * ((i * 7) % 13) as f64)
            .collect();
        for k in [2, 5, 20] {
            let got = instability(&series, k).unwrap();
            assert_relative_eq!(got, oracle(&series, k), max_relative = 1e-13);
        }
    }

    #[test]
    fn series_resamples_media_time() {
        let mut log = fake_log(
            vec![seg(5, 500.0, 500.0), seg(7, 900.0, 900.0), seg(6, 700.0, 700.0)],
            vec![(0.0, 0.0)],
            0.0,
            6.0,
        );
        log.config = SessionConfig::new(2.0, 6.0);
        let series = bitrate_series_1hz(&log);
        assert_eq!(series, vec![500.0, 500.0, 900.0, 900.0, 700.0, 700.0]);

        // 10 s segments hold for ten samples each.
        log.config = SessionConfig::new(10.0, 30.0);
        log.config.media_duration = 30.0;
        let series = bitrate_series_1hz(&log);
        assert_eq!(series.len(), 30);
        assert!(series[..10].iter().all(|&b| b == 500.0));
        assert!(series[10..20].iter().all(|&b| b == 900.0));
        assert!(series[20..].iter().all(|&b| b == 700.0));
    }

    #[test]
    fn avg_buffer_linear_ramp() {
        // Buffer ramps 0 to 10 over the playback window: average 5.
        let log = fake_log(
            vec![seg(1, 100.0, 100.0)],
            vec![(0.0, 0.0), (10.0, 10.0)],
            0.0,
            10.0,
        );
        assert_abs_diff_eq!(avg_buffer(&log), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn avg_buffer_clips_to_playback_window() {
        // Flat 4 s buffer before playback starts must not count.
        let log = fake_log(
            vec![seg(1, 100.0, 100.0)],
            vec![(0.0, 0.0), (2.0, 4.0), (2.0, 4.0), (12.0, 4.0), (12.0, 0.0)],
            2.0,
            12.0,
        );
        assert_abs_diff_eq!(avg_buffer(&log), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn media_throughput_is_mean_bitrate() {
        let segs = vec![seg(5, 500.0, 800.0), seg(6, 700.0, 800.0)];
        assert_eq!(media_throughput(&segs), 600.0);
        assert_eq!(media_throughput::<f64>(&[]), 0.0);
    }

    #[test]
    fn switch_stats_counts_and_amplitudes() {
        let segs = vec![
            seg(5, 500.0, 0.0),
            seg(5, 500.0, 0.0),
            seg(7, 900.0, 0.0),
            seg(7, 900.0, 0.0),
            seg(6, 700.0, 0.0),
        ];
        let st = switch_stats(&segs);
        assert_eq!(st.count, 2);
        assert_abs_diff_eq!(st.mean_amplitude, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(st.mean_amplitude_kbps, 300.0, epsilon = 1e-12);

        let none = switch_stats(&segs[..2]);
        assert_eq!(none.count, 0);
        assert_eq!(none.mean_amplitude, 0.0);
    }

    #[test]
    fn summarize_full_session() {
        let config = SessionConfig::new(2.0, 120.0);
        let trace = BandwidthTrace::new(vec![(0.0, 1500.0)], 300.0).unwrap();
        let ladder = Ladder::default();
        let params = LogicParams::default();
        let mut logic = build_logic::<f64>("instant", &params, 7).unwrap();
        let log = run_session(&config, &trace, &ladder, logic.as_mut()).unwrap();
        let report = summarize(&log).unwrap();

        assert_eq!(report.logic, "instant");
        assert_eq!(report.segment_duration, 2.0);
        assert_eq!(report.stall_count, 0);
        assert_eq!(report.stall_total, 0.0);
        assert!(report.media_throughput >= 100.0 && report.media_throughput <= 1500.0);
        assert!(report.instability >= 0.0);
        assert!(report.avg_buffer > 0.0);
        assert_eq!(report.startup_delay, log.playback_start);
        // 13 columns in header and row alike.
        assert_eq!(SummaryReport::<f64>::CSV_HEADER.split(',').count(), 13);
        assert_eq!(report.csv_row().split(',').count(), 13);
        assert!(report.csv_row().starts_with("instant,2,"));
    }

    #[test]
    fn summarize_counts_stalls() {
        let config = SessionConfig::new(2.0, 60.0);
        let trace = BandwidthTrace::new(vec![(0.0, 1000.0), (5.0, 80.0)], 400.0).unwrap();
        let ladder = Ladder::default();
        let params = LogicParams::default();
        let mut logic = build_logic::<f64>("instant", &params, 7).unwrap();
        let log = run_session(&config, &trace, &ladder, logic.as_mut()).unwrap();
        let report = summarize(&log).unwrap();
        assert!(report.stall_count >= 1);
        assert!(report.stall_total > 0.0);
        let recount: f64 = log
            .stalls
            .iter()
            .map(StallInterval::duration)
            .sum();
        assert_abs_diff_eq!(report.stall_total, recount, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn inefficiency_scale_invariant(
            pairs in prop::collection::vec((50.0f64..5000.0, 50.0f64..5000.0), 1..40),
            c in 0.1f64..10.0,
        ) {
            let base: Vec<_> = pairs.iter().map(|&(b, w)| seg(1, b, w)).collect();
            let scaled: Vec<_> = pairs.iter().map(|&(b, w)| seg(1, b * c, w * c)).collect();
            let a = inefficiency(&base);
            let b = inefficiency(&scaled);
            prop_assert!((a.sum - b.sum).abs() <= 1e-9 * a.sum.abs().max(1.0));
        }

        #[test]
        fn instability_scale_invariant(
            series in prop::collection::vec(100.0f64..4500.0, 25..80),
            c in 0.1f64..10.0,
        ) {
            let scaled: Vec<f64> = series.iter().map(|&x| x * c).collect();
            let a = instability(&series, 20).unwrap();
            let b = instability(&scaled, 20).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
        }
    }
}
