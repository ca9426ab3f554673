//! Deterministic network model: closed-form segment downloads over a
//! piecewise-constant trace, plus a `tc`/netem shaping-script emitter for
//! replaying the same trace on a real interface.
//!
//! Transfer times are exact: the integrator walks the trace breakpoints
//! instead of stepping time, so a download completes at the unique instant
//! where the integrated bandwidth equals the payload size.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::model::BandwidthTrace;
use crate::Scalar;

/// A shaped link: the bandwidth trace plus the fixed per-request latency.
#[derive(Clone, Copy, Debug)]
pub struct Link<'a, T> {
    pub trace: &'a BandwidthTrace<T>,
    /// Seconds charged once per HTTP request before payload bytes flow.
    pub request_latency: T,
}

/// Client-side view of one finished download.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DownloadRecord<T> {
    pub request_time: T,
    pub complete_time: T,
    /// Payload size in kbit.
    pub size: T,
    /// Seconds the payload actually spent on the wire (latency excluded).
    pub transfer_time: T,
    /// `size / (complete_time - request_time)` — the throughput a client
    /// measures, request latency included.
    pub measured_throughput: T,
}

impl<'a, T: Scalar> Link<'a, T> {
    pub fn new(trace: &'a BandwidthTrace<T>, request_latency: T) -> Self {
        Link {
            trace,
            request_latency,
        }
    }

    /// Issues a request of `size` kbit at `request_time` and returns the
    /// completed record.
    pub fn download(&self, request_time: T, size: T) -> DownloadRecord<T> {
        download(self, request_time, size)
    }
}

/// Bandwidth level active at time `t`; a breakpoint belongs to the interval
/// it opens, and the last level holds forever.
pub fn bandwidth_at<T: Scalar>(trace: &BandwidthTrace<T>, t: T) -> T {
    let pts = trace.points();
    let mut level = pts[0].1;
    for &(start, bw) in pts {
        if start <= t {
            level = bw;
        } else {
            break;
        }
    }
    level
}

/// Seconds needed to move `size` kbit starting at `start`, walking the trace
/// breakpoints in closed form.
pub fn transfer_time<T: Scalar>(trace: &BandwidthTrace<T>, start: T, size: T) -> T {
    let pts = trace.points();
    let mut i = 0;
    for (k, &(t, _)) in pts.iter().enumerate() {
        if t <= start {
            i = k;
        } else {
            break;
        }
    }
    let mut t = start;
    let mut remaining = size;
    loop {
        let bw = pts[i].1;
        match pts.get(i + 1) {
            None => return t + remaining / bw - start,
            Some(&(next, _)) => {
                let capacity = bw * (next - t);
                if capacity >= remaining {
                    return t + remaining / bw - start;
                }
                remaining = remaining - capacity;
                t = next;
                i += 1;
            }
        }
    }
}

/// Request latency is charged once, then the payload drains at the traced
/// bandwidth starting the instant the latency elapses.
pub fn download<T: Scalar>(link: &Link<'_, T>, request_time: T, size: T) -> DownloadRecord<T> {
    let start = request_time + link.request_latency;
    let transfer = transfer_time(link.trace, start, size);
    let complete_time = start + transfer;
    DownloadRecord {
        request_time,
        complete_time,
        size,
        transfer_time: transfer,
        measured_throughput: size / (complete_time - request_time),
    }
}

/// Renders a POSIX shell script that replays `trace` on `interface` egress
/// with `tc`: a netem qdisc models the fixed propagation delay and a token
/// bucket filter caps the rate, stepped through the trace levels with
/// `sleep`/`tc qdisc change`. The header embeds a SHA-256 checksum of the
/// trace's canonical CSV serialization.
pub fn emit_shaping_script<T: Scalar>(
    trace: &BandwidthTrace<T>,
    interface: &str,
    delay: T,
) -> String {
    let csv = trace.to_csv();
    let checksum = {
        let digest = Sha256::digest(csv.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    };
    let pts = trace.points();
    let delay_ms = delay.to_f64().unwrap_or(0.0) * 1000.0;
    let duration = trace.duration();

    let mut s = String::new();
    s.push_str("#!/bin/sh\n");
    s.push_str("# Piecewise-constant bandwidth shaping script.\n");
    let _ = writeln!(s, "# trace-sha256: {checksum}");
    let _ = writeln!(
        s,
        "# breakpoints: {}  duration: {}s  delay: {}ms",
        pts.len(),
        duration,
        delay_ms
    );
    s.push_str("# netem holds the fixed one-way delay, tbf caps the rate;\n");
    s.push_str("# each sleep/change pair steps to the next trace level.\n");
    s.push('\n');
    let _ = writeln!(s, "IFACE=\"{interface}\"");
    s.push('\n');
    s.push_str("tc qdisc del dev \"$IFACE\" root 2>/dev/null\n");
    let _ = writeln!(
        s,
        "tc qdisc add dev \"$IFACE\" root handle 1: netem delay {delay_ms}ms"
    );
    let _ = writeln!(
        s,
        "tc qdisc add dev \"$IFACE\" parent 1: handle 10: tbf rate {}kbit burst 32kbit latency 400ms",
        pts[0].1
    );
    for w in pts.windows(2) {
        let (prev_t, _) = w[0];
        let (t, bw) = w[1];
        s.push('\n');
        let _ = writeln!(s, "sleep {}", t - prev_t);
        let _ = writeln!(
            s,
            "tc qdisc change dev \"$IFACE\" parent 1: handle 10: tbf rate {bw}kbit burst 32kbit latency 400ms"
        );
    }
    let last_t = pts[pts.len() - 1].0;
    s.push('\n');
    let _ = writeln!(s, "sleep {}", duration - last_t);
    s.push_str("tc qdisc del dev \"$IFACE\" root\n");
    s
}
