//! Static description of a streaming session: the representation ladder, the
//! piecewise-constant bandwidth trace and the client configuration.
//!
//! File formats (also documented in `docs/FORMATS.md` at the workspace root):
//!
//! * Ladder CSV — header `id,width,height,bitrate_kbps`, one row per
//!   representation, ids contiguous from 1, bitrates strictly increasing.
//! * Trace CSV — header `time_s,bandwidth_kbps`, one row per breakpoint
//!   (first at `t = 0`, strictly increasing), closed by a mandatory footer
//!   row `duration,<seconds>`. The last level holds past the duration.
//!
//! Blank lines and `#` comments are ignored in both formats.

use std::fmt::Write as _;
use std::path::Path;

use crate::{lit, Error, Result, Scalar};

/// One rung of the bitrate ladder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Representation<T> {
    /// 1-based ladder position; 1 is the lowest bitrate.
    pub id: u32,
    pub width: u32,
    pub height: u32,
    /// Media bitrate in kbit/s.
    pub bitrate: T,
}

/// Ordered set of representations a client can switch between.
#[derive(Clone, Debug, PartialEq)]
pub struct Ladder<T> {
    reps: Vec<Representation<T>>,
}

const LADDER_HEADER: &str = "id,width,height,bitrate_kbps";
const TRACE_HEADER: &str = "time_s,bandwidth_kbps";

/// The built-in 15-step ladder (kbit/s): 100 .. 4500.
const DEFAULT_LADDER: [(u32, u32, u32, f64); 15] = [
    (1, 192, 108, 100.0),
    (2, 192, 108, 150.0),
    (3, 320, 180, 200.0),
    (4, 480, 270, 350.0),
    (5, 960, 540, 500.0),
    (6, 960, 540, 700.0),
    (7, 960, 540, 900.0),
    (8, 1280, 720, 1100.0),
    (9, 1920, 1080, 1300.0),
    (10, 1920, 1080, 1600.0),
    (11, 1920, 1080, 1900.0),
    (12, 1920, 1080, 2300.0),
    (13, 1920, 1080, 2800.0),
    (14, 1920, 1080, 3400.0),
    (15, 1920, 1080, 4500.0),
];

impl<T: Scalar> Ladder<T> {
    /// Validates and wraps a representation list.
    pub fn new(reps: Vec<Representation<T>>) -> Result<Self> {
        if reps.len() < 2 {
            return Err(Error::invalid(
                "ladder",
                "at least 2 representations required",
            ));
        }
        for (i, rep) in reps.iter().enumerate() {
            if rep.id != i as u32 + 1 {
                return Err(Error::invalid(
                    "ladder",
                    format!(
                        "field id: ids must be contiguous starting at 1 (position {} has id {})",
                        i + 1,
                        rep.id
                    ),
                ));
            }
            if rep.bitrate <= T::zero() {
                return Err(Error::invalid(
                    "ladder",
                    format!("field bitrate_kbps: must be positive (id {})", rep.id),
                ));
            }
        }
        if reps.windows(2).any(|w| w[1].bitrate <= w[0].bitrate) {
            return Err(Error::invalid(
                "ladder",
                "field bitrate_kbps: bitrates not increasing",
            ));
        }
        Ok(Ladder { reps })
    }

    /// The built-in default ladder.
    pub fn default_ladder() -> Self {
        let reps = DEFAULT_LADDER
            .iter()
            .map(|&(id, width, height, bitrate)| Representation {
                id,
                width,
                height,
                bitrate: lit(bitrate),
            })
            .collect();
        Ladder::new(reps).expect("built-in ladder is valid")
    }

    pub fn reps(&self) -> &[Representation<T>] {
        &self.reps
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    /// Highest valid representation id.
    pub fn max_id(&self) -> u32 {
        self.reps.len() as u32
    }

    /// Representation by 1-based id. Panics on an out-of-range id.
    pub fn rep(&self, id: u32) -> &Representation<T> {
        &self.reps[(id - 1) as usize]
    }

    /// Bitrate (kbit/s) of the representation with the given id.
    pub fn bitrate(&self, id: u32) -> T {
        self.rep(id).bitrate
    }

    /// Parses the ladder CSV format. `origin` names the source in errors.
    pub fn from_csv_str(s: &str, origin: &str) -> Result<Self> {
        let mut reps = Vec::new();
        let mut saw_header = false;
        for (idx, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != LADDER_HEADER {
                    return Err(Error::parse(
                        origin,
                        idx + 1,
                        format!("expected header `{LADDER_HEADER}`, got `{line}`"),
                    ));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    origin,
                    idx + 1,
                    format!("expected 4 fields, got {}", fields.len()),
                ));
            }
            let id = parse_u32(origin, idx + 1, "id", fields[0])?;
            let width = parse_u32(origin, idx + 1, "width", fields[1])?;
            let height = parse_u32(origin, idx + 1, "height", fields[2])?;
            let bitrate = parse_scalar(origin, idx + 1, "bitrate_kbps", fields[3])?;
            reps.push(Representation {
                id,
                width,
                height,
                bitrate,
            });
        }
        Ladder::new(reps)
    }

    /// Loads a ladder from a CSV file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path)?;
        Ladder::from_csv_str(&s, &path.display().to_string())
    }

    /// Serializes back to the ladder CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LADDER_HEADER);
        out.push('\n');
        for rep in &self.reps {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                rep.id, rep.width, rep.height, rep.bitrate
            );
        }
        out
    }
}

impl<T: Scalar> Default for Ladder<T> {
    fn default() -> Self {
        Self::default_ladder()
    }
}

/// Free-function form of [`Ladder::default_ladder`], convenient at call
/// sites that would otherwise need a turbofish.
pub fn default_ladder<T: Scalar>() -> Ladder<T> {
    Ladder::default_ladder()
}

/// Highest representation whose bitrate lies strictly below `bandwidth`,
/// clamped to the lowest rung when nothing qualifies.
pub fn index_for_bandwidth<T: Scalar>(ladder: &Ladder<T>, bandwidth: T) -> u32 {
    ladder
        .reps()
        .iter()
        .rev()
        .find(|rep| rep.bitrate < bandwidth)
        .map(|rep| rep.id)
        .unwrap_or(1)
}

/// Piecewise-constant available-bandwidth trace.
///
/// `points[k] = (start_time_s, level_kbps)`; each level holds until the next
/// breakpoint and the last level holds forever. `duration` marks the nominal
/// end used by file round-trips and the shaping-script generator.
#[derive(Clone, Debug, PartialEq)]
pub struct BandwidthTrace<T> {
    points: Vec<(T, T)>,
    duration: T,
}

impl<T: Scalar> BandwidthTrace<T> {
    pub fn new(points: Vec<(T, T)>, duration: T) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("trace", "at least one breakpoint required"));
        }
        if points[0].0 != T::zero() {
            return Err(Error::invalid("trace", "trace must start at t=0"));
        }
        if duration <= T::zero() {
            return Err(Error::invalid("trace", "field duration: must be positive"));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(
                    "trace",
                    "field time_s: timestamps must be strictly increasing",
                ));
            }
        }
        if let Some(&(t, _)) = points.iter().find(|&&(t, _)| t >= duration) {
            return Err(Error::invalid(
                "trace",
                format!("field time_s: breakpoint at {t} not before duration {duration}"),
            ));
        }
        if let Some(&(t, bw)) = points.iter().find(|&&(_, bw)| bw <= T::zero()) {
            return Err(Error::invalid(
                "trace",
                format!("field bandwidth_kbps: must be positive (t={t}, value {bw})"),
            ));
        }
        Ok(BandwidthTrace { points, duration })
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn duration(&self) -> T {
        self.duration
    }

    /// Time average of the trace over `[0, duration]`.
    pub fn mean_bandwidth(&self) -> T {
        let mut acc = T::zero();
        for (i, &(t, bw)) in self.points.iter().enumerate() {
            let end = self
                .points
                .get(i + 1)
                .map(|&(t_next, _)| t_next)
                .unwrap_or(self.duration);
            acc = acc + bw * (end - t);
        }
        acc / self.duration
    }

    /// Parses the trace CSV format. `origin` names the source in errors.
    pub fn from_csv_str(s: &str, origin: &str) -> Result<Self> {
        let mut points = Vec::new();
        let mut duration = None;
        let mut saw_header = false;
        for (idx, raw) in s.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !saw_header {
                if line != TRACE_HEADER {
                    return Err(Error::parse(
                        origin,
                        idx + 1,
                        format!("expected header `{TRACE_HEADER}`, got `{line}`"),
                    ));
                }
                saw_header = true;
                continue;
            }
            if duration.is_some() {
                return Err(Error::parse(
                    origin,
                    idx + 1,
                    "data after the duration footer",
                ));
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::parse(
                    origin,
                    idx + 1,
                    format!("expected 2 fields, got {}", fields.len()),
                ));
            }
            if fields[0] == "duration" {
                duration = Some(parse_scalar(origin, idx + 1, "duration", fields[1])?);
                continue;
            }
            let t = parse_scalar(origin, idx + 1, "time_s", fields[0])?;
            let bw = parse_scalar(origin, idx + 1, "bandwidth_kbps", fields[1])?;
            points.push((t, bw));
        }
        let Some(duration) = duration else {
            return Err(Error::invalid(
                "trace",
                "missing `duration,<seconds>` footer row",
            ));
        };
        BandwidthTrace::new(points, duration)
    }

    /// Loads a trace from a CSV file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path)?;
        BandwidthTrace::from_csv_str(&s, &path.display().to_string())
    }

    /// Serializes back to the trace CSV format (round-trips exactly).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for &(t, bw) in &self.points {
            let _ = writeln!(out, "{t},{bw}");
        }
        let _ = writeln!(out, "duration,{}", self.duration);
        out
    }
}

/// Client and session parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionConfig<T> {
    /// Media length of one segment in seconds.
    pub segment_duration: T,
    /// Total media length in seconds; an exact multiple of `segment_duration`.
    pub media_duration: T,
    /// MPD size in kbit, downloaded once at session start.
    pub mpd_size: T,
    /// Fixed per-request latency in seconds charged before payload bytes flow.
    pub request_latency: T,
    /// Buffered media (seconds) required before playback first starts.
    pub startup_threshold: T,
    /// Buffered media (seconds) required to resume after a stall.
    pub resume_threshold: T,
    /// Seed for randomized logic decisions.
    pub seed: u64,
}

impl<T: Scalar> SessionConfig<T> {
    /// Config with the default client parameters: 10 kbit MPD, 160 ms request
    /// latency, 4 s startup threshold, one segment to resume after a stall.
    pub fn new(segment_duration: T, media_duration: T) -> Self {
        SessionConfig {
            segment_duration,
            media_duration,
            mpd_size: lit(10.0),
            request_latency: lit(0.160),
            startup_threshold: lit(4.0),
            resume_threshold: segment_duration,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segment_duration <= T::zero() {
            return Err(Error::invalid(
                "config",
                "field segment_duration: must be positive",
            ));
        }
        if self.media_duration <= T::zero() {
            return Err(Error::invalid(
                "config",
                "field media_duration: must be positive",
            ));
        }
        let ratio = self.media_duration / self.segment_duration;
        let rounded = ratio.round();
        if rounded < T::one() || (ratio - rounded).abs() > lit::<T>(1e-9) * ratio.max(T::one()) {
            return Err(Error::invalid(
                "config",
                "field media_duration: must be an exact multiple of segment_duration",
            ));
        }
        if self.mpd_size <= T::zero() {
            return Err(Error::invalid("config", "field mpd_size: must be positive"));
        }
        if self.request_latency < T::zero() {
            return Err(Error::invalid(
                "config",
                "field request_latency: must be non-negative",
            ));
        }
        if self.startup_threshold <= T::zero() {
            return Err(Error::invalid(
                "config",
                "field startup_threshold: must be positive",
            ));
        }
        if self.resume_threshold <= T::zero() {
            return Err(Error::invalid(
                "config",
                "field resume_threshold: must be positive",
            ));
        }
        Ok(())
    }

    /// Number of segments in the presentation.
    pub fn num_segments(&self) -> usize {
        (self.media_duration / self.segment_duration)
            .round()
            .to_usize()
            .expect("segment count fits usize")
    }
}

fn parse_u32(origin: &str, line: usize, field: &str, s: &str) -> Result<u32> {
    s.parse()
        .map_err(|_| Error::parse(origin, line, format!("field {field}: invalid integer `{s}`")))
}

fn parse_scalar<T: Scalar>(origin: &str, line: usize, field: &str, s: &str) -> Result<T> {
    let v: f64 = s
        .parse()
        .map_err(|_| Error::parse(origin, line, format!("field {field}: invalid number `{s}`")))?;
    T::from_f64(v)
        .ok_or_else(|| Error::parse(origin, line, format!("field {field}: out of range `{s}`")))
}
