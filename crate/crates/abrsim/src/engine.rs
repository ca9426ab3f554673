//! Session engine: drives one playback session of an adaptation logic over a
//! bandwidth trace and records everything needed for metric computation.
//!
//! The engine owns the event loop. Time advances only through download
//! completions and deliberate request deferrals; between events the playhead
//! state (waiting for startup, playing, stalled) evolves analytically, so the
//! whole session is computed in closed form with no tick loop.
//!
//! One session proceeds as follows:
//!
//! 1. At t = 0 the client fetches the MPD. Its measured throughput seeds
//!    logics that have no segment history yet.
//! 2. For each segment the logic is consulted once. The decision names a
//!    representation and may postpone the request (`not_before`) or bound the
//!    buffer (`max_buffer`), in which case the engine waits until the buffer
//!    has drained to the gate's low mark before issuing the request.
//! 3. The segment downloads over the shared link; on completion the playhead
//!    is credited with one segment of media.
//! 4. Playback starts once the startup threshold is buffered, stalls when the
//!    buffer empties, and resumes after `resume_threshold` seconds of media
//!    have been rebuffered. After the last segment the remaining buffer plays
//!    out to the end of the media.

use crate::adaptation::{AdaptationContext, AdaptationLogic};
use crate::model::{BandwidthTrace, Ladder, SessionConfig};
use crate::netsim::{DownloadRecord, Link};
use crate::{lit, Result, Scalar};
use std::fmt::Write as _;

/// One downloaded media segment as it appears in the session log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentRecord<T> {
    /// Zero-based segment index.
    pub index: usize,
    /// Representation id chosen by the adaptation logic.
    pub rep: u32,
    /// Nominal bitrate of that representation in kbit/s.
    pub bitrate: T,
    /// Time the request was issued (after any deferral), seconds.
    pub request_time: T,
    /// Time the last byte arrived, seconds.
    pub complete_time: T,
    /// size / (complete - request): what the client can observe.
    pub measured_throughput: T,
    /// Buffer level in seconds immediately after this segment was credited.
    pub buffer_after: T,
}

/// A closed playback interruption. Zero-length intervals are never recorded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StallInterval<T> {
    pub start: T,
    pub end: T,
}

impl<T: Scalar> StallInterval<T> {
    pub fn duration(&self) -> T {
        self.end - self.start
    }
}

/// Complete record of one simulated session.
///
/// Everything the metrics layer consumes is here; the engine never computes
/// a metric itself. `buffer_samples` holds (time, buffer seconds) pairs at
/// every point where the buffer trajectory changes slope or jumps, so linear
/// interpolation between consecutive samples reconstructs the exact
/// trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionLog<T> {
    pub logic_name: String,
    pub config: SessionConfig<T>,
    pub mpd: DownloadRecord<T>,
    pub segments: Vec<SegmentRecord<T>>,
    pub stalls: Vec<StallInterval<T>>,
    /// Time playback first started (startup delay, since requests begin at 0).
    pub playback_start: T,
    /// Time the last media second finished playing.
    pub session_end: T,
    pub buffer_samples: Vec<(T, T)>,
}

impl<T: Scalar> SessionLog<T> {
    /// Startup delay: media requests begin at t = 0, so the first-play
    /// timestamp is the delay.
    pub fn startup_delay(&self) -> T {
        self.playback_start
    }

    pub fn stall_total(&self) -> T {
        self.stalls
            .iter()
            .fold(T::zero(), |acc, s| acc + s.duration())
    }

    /// Serialize as a line-oriented event log (see `docs/FORMATS.md`).
    ///
    /// The format is plain text, one event per line, with full round-trip
    /// precision: identical sessions produce byte-identical logs.
    pub fn to_event_log(&self) -> String {
        let mut out = String::new();
        out.push_str("# abrsim session log v1\n");
        let _ = writeln!(out, "logic,{}", self.logic_name);
        let c = &self.config;
        let _ = writeln!(out, "segment_duration_s,{}", c.segment_duration);
        let _ = writeln!(out, "media_duration_s,{}", c.media_duration);
        let _ = writeln!(out, "mpd_size_kbit,{}", c.mpd_size);
        let _ = writeln!(out, "request_latency_s,{}", c.request_latency);
        let _ = writeln!(out, "startup_threshold_s,{}", c.startup_threshold);
        let _ = writeln!(out, "resume_threshold_s,{}", c.resume_threshold);
        let _ = writeln!(out, "seed,{}", c.seed);
        let _ = writeln!(
            out,
            "mpd,{},{},{},{}",
            self.mpd.request_time, self.mpd.complete_time, self.mpd.size, self.mpd.measured_throughput
        );
        for s in &self.segments {
            let _ = writeln!(
                out,
                "segment,{},{},{},{},{},{},{}",
                s.index,
                s.rep,
                s.bitrate,
                s.request_time,
                s.complete_time,
                s.measured_throughput,
                s.buffer_after
            );
        }
        let _ = writeln!(out, "play_start,{}", self.playback_start);
        for s in &self.stalls {
            let _ = writeln!(out, "stall,{},{}", s.start, s.end);
        }
        let _ = writeln!(out, "end,{}", self.session_end);
        for (t, b) in &self.buffer_samples {
            let _ = writeln!(out, "buffer,{},{}", t, b);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PlayState<T> {
    /// Before first play: buffer fills, nothing drains.
    Waiting,
    Playing,
    /// Buffer ran dry mid-session; `since` is when playback froze.
    Stalled { since: T },
    /// All media played out.
    Done,
}

/// Analytic playhead: tracks how much media has been downloaded and played.
///
/// The buffer level is always `downloaded - played`, which makes the
/// conservation law downloaded = played + buffered structural rather than
/// something to maintain by hand.
struct Playhead<T> {
    media_duration: T,
    startup_threshold: T,
    resume_threshold: T,
    downloaded: T,
    played: T,
    state: PlayState<T>,
    last_t: T,
    started: Option<T>,
    done_at: Option<T>,
    stalls: Vec<StallInterval<T>>,
    samples: Vec<(T, T)>,
}

impl<T: Scalar> Playhead<T> {
    fn new(config: &SessionConfig<T>) -> Self {
        let mut p = Playhead {
            media_duration: config.media_duration,
            startup_threshold: config.startup_threshold,
            resume_threshold: config.resume_threshold,
            downloaded: T::zero(),
            played: T::zero(),
            state: PlayState::Waiting,
            last_t: T::zero(),
            started: None,
            done_at: None,
            stalls: Vec::new(),
            samples: Vec::new(),
        };
        p.samples.push((T::zero(), T::zero()));
        p
    }

    fn buffer(&self) -> T {
        self.downloaded - self.played
    }

    /// Move wall time forward to `t`, playing out buffered media if playing.
    /// Opens a stall (or finishes the session) at the exact exhaustion time
    /// when the buffer runs dry before `t`.
    fn advance_to(&mut self, t: T) {
        debug_assert!(t >= self.last_t);
        if let PlayState::Playing = self.state {
            let dt = t - self.last_t;
            let avail = self.buffer();
            if dt < avail {
                self.played = self.played + dt;
            } else {
                let exhaust_t = self.last_t + avail;
                self.played = self.downloaded;
                self.samples.push((exhaust_t, T::zero()));
                // Exhausting the buffer with all media fetched is the end of
                // the session, not a stall.
                if self.downloaded >= self.media_duration - lit::<T>(1e-9) {
                    self.state = PlayState::Done;
                    self.done_at = Some(exhaust_t);
                } else {
                    self.state = PlayState::Stalled { since: exhaust_t };
                }
            }
        }
        self.last_t = t;
    }

    /// Record a buffer sample at the current wall time.
    fn sample_now(&mut self) {
        self.samples.push((self.last_t, self.buffer()));
    }

    /// Credit one downloaded segment at time `t`. `new_downloaded` is the
    /// total media fetched so far (passed absolutely to avoid accumulation
    /// drift). Handles startup and stall-recovery thresholds.
    fn credit(&mut self, t: T, new_downloaded: T) {
        self.advance_to(t);
        self.sample_now();
        self.downloaded = new_downloaded;
        self.sample_now();
        match self.state {
            PlayState::Waiting => {
                if self.buffer() >= self.startup_threshold {
                    self.start_playing(t);
                }
            }
            PlayState::Stalled { since } => {
                if self.buffer() >= self.resume_threshold {
                    self.close_stall(since, t);
                }
            }
            PlayState::Playing | PlayState::Done => {}
        }
    }

    /// After the final segment no more data is coming: start or resume
    /// playback unconditionally so the session always terminates.
    fn finalize_feed(&mut self, t: T) {
        match self.state {
            PlayState::Waiting => self.start_playing(t),
            PlayState::Stalled { since } => self.close_stall(since, t),
            PlayState::Playing | PlayState::Done => {}
        }
    }

    fn start_playing(&mut self, t: T) {
        self.started = Some(t);
        self.state = PlayState::Playing;
    }

    fn close_stall(&mut self, since: T, t: T) {
        if t > since {
            self.stalls.push(StallInterval { start: since, end: t });
        }
        self.state = PlayState::Playing;
    }

    /// Earliest wall time at which the buffer will have drained to `target`,
    /// assuming uninterrupted playback. `None` unless currently playing.
    fn drain_time(&self, target: T) -> Option<T> {
        match self.state {
            PlayState::Playing => {
                let excess = self.buffer() - target.max(T::zero());
                if excess > T::zero() {
                    Some(self.last_t + excess)
                } else {
                    Some(self.last_t)
                }
            }
            _ => None,
        }
    }

    /// Play out whatever remains and return the session end time.
    ///
    /// Closed directly rather than via [`Playhead::advance_to`]: computing
    /// the end as `last_t + buffer` and advancing to it can miss the exhaust
    /// branch by one rounding step.
    fn finish(&mut self) -> T {
        if let Some(done) = self.done_at {
            return done;
        }
        debug_assert!(matches!(self.state, PlayState::Playing));
        let end = self.last_t + self.buffer();
        self.played = self.downloaded;
        self.last_t = end;
        self.state = PlayState::Done;
        self.done_at = Some(end);
        self.samples.push((end, T::zero()));
        end
    }
}

/// Simulate one full session of `logic` over `trace` and return its log.
///
/// Deterministic: identical inputs (including the seed inside any randomized
/// logic) produce an identical log, byte for byte once serialized.
pub fn run_session<T: Scalar>(
    config: &SessionConfig<T>,
    trace: &BandwidthTrace<T>,
    ladder: &Ladder<T>,
    logic: &mut dyn AdaptationLogic<T>,
) -> Result<SessionLog<T>> {
    config.validate()?;
    let link = Link::new(trace, config.request_latency);
    let num_segments = config.num_segments();

    let mpd = link.download(T::zero(), config.mpd_size);
    let mut playhead = Playhead::new(config);
    playhead.advance_to(mpd.complete_time);
    playhead.sample_now();

    let mut now = mpd.complete_time;
    let mut history: Vec<DownloadRecord<T>> = Vec::with_capacity(num_segments);
    let mut segments: Vec<SegmentRecord<T>> = Vec::with_capacity(num_segments);
    let mut current_rep: Option<u32> = None;

    for index in 0..num_segments {
        playhead.advance_to(now);
        let decision = {
            let ctx = AdaptationContext {
                ladder,
                segment_duration: config.segment_duration,
                segment_index: index,
                current_rep,
                buffer_level: playhead.buffer(),
                history: &history,
                mpd_throughput: mpd.measured_throughput,
                now,
            };
            logic.decide(&ctx)
        };
        debug_assert!(
            decision.rep >= 1 && decision.rep <= ladder.max_id(),
            "logic {} chose representation {} outside the ladder",
            logic.name(),
            decision.rep
        );

        let mut request_time = if decision.not_before > now {
            decision.not_before
        } else {
            now
        };
        if let Some(gate) = decision.max_buffer {
            if playhead.buffer() > gate.limit {
                if let Some(t_drain) = playhead.drain_time(gate.drain_to) {
                    if t_drain > request_time {
                        request_time = t_drain;
                    }
                }
            }
        }

        playhead.advance_to(request_time);
        playhead.sample_now();

        let bitrate = ladder.bitrate(decision.rep);
        let size = bitrate * config.segment_duration;
        let rec = link.download(request_time, size);

        let downloaded_total =
            T::from_usize(index + 1).expect("segment count fits in scalar") * config.segment_duration;
        playhead.credit(rec.complete_time, downloaded_total);
        if index + 1 == num_segments {
            playhead.finalize_feed(rec.complete_time);
        }

        segments.push(SegmentRecord {
            index,
            rep: decision.rep,
            bitrate,
            request_time,
            complete_time: rec.complete_time,
            measured_throughput: rec.measured_throughput,
            buffer_after: playhead.buffer(),
        });
        history.push(rec);
        current_rep = Some(decision.rep);
        now = rec.complete_time;
    }

    let session_end = playhead.finish();
    let playback_start = playhead
        .started
        .expect("playback is forced to start by the final credit");

    Ok(SessionLog {
        logic_name: logic.name().to_string(),
        config: *config,
        mpd,
        segments,
        stalls: std::mem::take(&mut playhead.stalls),
        playback_start,
        session_end,
        buffer_samples: std::mem::take(&mut playhead.samples),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptation::build_logic;
    use crate::adaptation::LogicParams;
    use crate::model::{BandwidthTrace, Ladder, SessionConfig};
    use approx::assert_abs_diff_eq;

    fn constant_trace(kbps: f64, duration: f64) -> BandwidthTrace<f64> {
        BandwidthTrace::new(vec![(0.0, kbps)], duration).unwrap()
    }

    fn run(
        logic: &str,
        config: &SessionConfig<f64>,
        trace: &BandwidthTrace<f64>,
    ) -> SessionLog<f64> {
        let ladder = Ladder::default();
        let params = LogicParams::default();
        let mut logic = build_logic::<f64>(logic, &params, config.seed).unwrap();
        run_session(config, trace, &ladder, logic.as_mut()).unwrap()
    }

    #[test]
    fn constant_link_no_latency_plays_clean() {
        let mut config = SessionConfig::new(2.0, 10.0);
        config.request_latency = 0.0;
        let trace = constant_trace(1000.0, 60.0);
        let log = run("instant", &config, &trace);

        assert_eq!(log.segments.len(), 5);
        assert!(log.stalls.is_empty());
        // MPD: 10 kbit at 1000 kbit/s -> done at 0.01, measured 1000 kbit/s.
        assert_abs_diff_eq!(log.mpd.complete_time, 0.01, epsilon = 1e-12);
        // index_for_bandwidth(1000) = rung 7 (900 kbit/s): every segment is
        // 1800 kbit and takes 1.8 s.
        for s in &log.segments {
            assert_eq!(s.rep, 7);
            assert_abs_diff_eq!(s.measured_throughput, 1000.0, epsilon = 1e-9);
        }
        // Completions at 1.81, 3.61, ...: startup threshold 4 s is met at the
        // second credit.
        assert_abs_diff_eq!(log.playback_start, 3.61, epsilon = 1e-12);
        assert_abs_diff_eq!(log.startup_delay(), 3.61, epsilon = 1e-12);
        // 10 s of media starting at 3.61 with no stalls.
        assert_abs_diff_eq!(log.session_end, 13.61, epsilon = 1e-12);
        let last = log.segments.last().unwrap();
        assert_abs_diff_eq!(last.complete_time, 9.01, epsilon = 1e-12);
        assert_abs_diff_eq!(last.buffer_after, 4.6, epsilon = 1e-12);
    }

    #[test]
    fn startup_takes_two_short_segments_on_fast_link() {
        let config = SessionConfig::new(2.0, 700.0);
        let trace = constant_trace(1000.0, 800.0);
        let log = run("instant", &config, &trace);

        // MPD at 0.17; first pick runs off MPD throughput (~58.8 kbit/s) ->
        // rung 1 (100 kbit/s, 200 kbit, done 0.53); the measured 555.6 kbit/s
        // then selects rung 5 (500 kbit/s, 1000 kbit, done 1.69). Two
        // segments buffer 4 s, so playback starts at the second completion.
        assert_eq!(log.segments[0].rep, 1);
        assert_eq!(log.segments[1].rep, 5);
        assert_abs_diff_eq!(log.playback_start, 1.69, epsilon = 1e-12);
        assert_eq!(log.playback_start, log.segments[1].complete_time);
    }

    #[test]
    fn startup_takes_one_long_segment() {
        let config = SessionConfig::new(10.0, 700.0);
        let trace = constant_trace(1000.0, 800.0);
        let log = run("instant", &config, &trace);

        // One 10 s segment clears the 4 s startup threshold by itself.
        assert_eq!(log.segments[0].rep, 1);
        assert_eq!(log.playback_start, log.segments[0].complete_time);
        assert_abs_diff_eq!(log.playback_start, 0.17 + 0.16 + 1.0, epsilon = 1e-12);
    }

    #[test]
    fn drop_to_trickle_stalls_and_recovers() {
        let config = SessionConfig::new(2.0, 60.0);
        let trace = BandwidthTrace::new(vec![(0.0, 1000.0), (5.0, 80.0)], 400.0).unwrap();
        let log = run("instant", &config, &trace);

        // At 80 kbit/s even the lowest rung (100 kbit/s) cannot keep up:
        // each 2 s segment takes 0.16 + 200/80 = 2.66 s, so the buffer
        // drains and the session stalls at least once.
        assert!(!log.stalls.is_empty());
        for s in &log.stalls {
            assert!(s.end > s.start, "zero-length stall recorded");
            assert!(s.start >= log.playback_start);
            assert!(s.end <= log.session_end);
        }
        // All media still plays out: end covers media plus dead time.
        assert_eq!(log.segments.len(), 30);
        assert!(log.session_end >= log.playback_start + 60.0);
        assert_abs_diff_eq!(
            log.session_end,
            log.playback_start + 60.0 + log.stall_total(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn buffer_never_negative_and_conserved() {
        let config = SessionConfig::new(2.0, 60.0);
        let trace = BandwidthTrace::new(vec![(0.0, 1000.0), (5.0, 80.0)], 400.0).unwrap();
        let log = run("instant", &config, &trace);

        for &(t, b) in &log.buffer_samples {
            assert!(b >= -1e-12, "negative buffer {} at t={}", b, t);
            assert!(t >= 0.0);
        }
        // Samples are time-ordered.
        for w in log.buffer_samples.windows(2) {
            assert!(w[0].0 <= w[1].0);
        }
        // Conservation at each completion: downloaded = played + buffered,
        // with played reconstructed from the play/stall timeline.
        for (i, s) in log.segments.iter().enumerate() {
            let t = s.complete_time;
            let mut played = if t > log.playback_start {
                t - log.playback_start
            } else {
                0.0
            };
            for stall in &log.stalls {
                if stall.end <= t {
                    played -= stall.duration();
                } else if stall.start < t {
                    played -= t - stall.start;
                }
            }
            let downloaded = (i + 1) as f64 * 2.0;
            let played = played.clamp(0.0, downloaded);
            assert_abs_diff_eq!(s.buffer_after, downloaded - played, epsilon = 1e-9);
        }
    }

    #[test]
    fn miller_gate_defers_requests_at_high_bandwidth() {
        let config = SessionConfig::new(2.0, 700.0);
        let trace = constant_trace(50_000.0, 900.0);
        let log = run("miller", &config, &trace);

        // Downloads far outpace playback, so the 50 s gate must engage.
        let mut deferred = 0;
        for w in log.segments.windows(2) {
            let (prev, next) = (&w[0], &w[1]);
            if next.request_time > prev.complete_time + 1e-9 {
                deferred += 1;
                // While waiting the buffer drains linearly; at the deferred
                // request it must sit at the gate's low mark.
                let at_request = prev.buffer_after - (next.request_time - prev.complete_time);
                assert_abs_diff_eq!(at_request, 35.0, epsilon = 1e-9);
            }
        }
        assert!(deferred > 0, "gate never engaged");
        // The buffer may overshoot the 50 s limit by at most one segment.
        for s in &log.segments {
            assert!(s.buffer_after <= 52.0 + 1e-9);
        }
        assert!(log.stalls.is_empty());
    }

    #[test]
    fn sessions_are_deterministic() {
        let config = SessionConfig::new(2.0, 120.0);
        let trace =
            BandwidthTrace::new(vec![(0.0, 2500.0), (30.0, 600.0), (60.0, 1400.0)], 200.0)
                .unwrap();
        for name in crate::adaptation::LOGIC_NAMES {
            let a = run(name, &config, &trace).to_event_log();
            let b = run(name, &config, &trace).to_event_log();
            assert_eq!(a, b, "logic {} not deterministic", name);
        }
    }

    #[test]
    fn event_log_has_expected_shape() {
        let mut config = SessionConfig::new(2.0, 10.0);
        config.request_latency = 0.0;
        let trace = constant_trace(1000.0, 60.0);
        let log = run("instant", &config, &trace);
        let text = log.to_event_log();

        assert!(text.starts_with("# abrsim session log v1\n"));
        assert!(text.contains("logic,instant\n"));
        assert!(text.contains("segment_duration_s,2\n"));
        assert_eq!(text.matches("\nsegment,").count(), 5);
        // Prefix matches: the timestamps may carry round-trip digits.
        assert!(text.lines().any(|l| l.starts_with("play_start,3.61")));
        assert!(text.lines().any(|l| l.starts_with("end,13.61")));
    }

    #[test]
    fn short_media_forces_playback_start() {
        // Media shorter than the startup threshold: the final credit must
        // force playback so the session terminates.
        let mut config = SessionConfig::new(2.0, 2.0);
        config.request_latency = 0.0;
        let trace = constant_trace(1000.0, 60.0);
        let log = run("instant", &config, &trace);
        assert_eq!(log.segments.len(), 1);
        assert_eq!(log.playback_start, log.segments[0].complete_time);
        assert_abs_diff_eq!(log.session_end, log.playback_start + 2.0, epsilon = 1e-12);
    }

    #[test]
    fn works_with_f32_scalars() {
        let mut config = SessionConfig::<f32>::new(2.0, 10.0);
        config.request_latency = 0.0;
        let trace = BandwidthTrace::<f32>::new(vec![(0.0, 1000.0)], 60.0).unwrap();
        let ladder = Ladder::<f32>::default();
        let params = LogicParams::<f32>::default();
        let mut logic = build_logic::<f32>("instant", &params, 1).unwrap();
        let log = run_session(&config, &trace, &ladder, logic.as_mut()).unwrap();
        assert_eq!(log.segments.len(), 5);
        assert!((log.playback_start - 3.61).abs() < 1e-3);
    }
}
