//! The `run` subcommand: simulate a matrix of adaptation logics and segment
//! durations over one trace, and write the aggregated results.
//!
//! Output layout under `--out`:
//!
//! ```text
//! summary.csv    one row per (logic, segment duration), repeat-averaged
//! report.json    the same cells plus trace/ladder/seed provenance
//! runs/          one event log per individual session, plus optional
//!                per-run plot data (--plot-data)
//! ```
//!
//! Repeat `k` of a cell runs with seed `base_seed + k`, so a single session
//! of any cell can be reproduced in isolation.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use abrsim::adaptation::{build_logic, LOGIC_NAMES};
use abrsim::engine::{run_session, SessionLog};
use abrsim::metrics::{bitrate_series_1hz, summarize, SummaryReport};
use abrsim::model::SessionConfig;
use anyhow::{bail, Context};
use clap::Args;
use serde::Serialize;

use crate::commands::{atomic_write, load_ladder, load_params, load_trace};

/// Simulate adaptation logics over a bandwidth trace and write the result
/// matrix.
#[derive(Args, Debug)]
pub struct RunArgs {
    /// Adaptation logics to run (comma separated); defaults to all ten.
    #[arg(long = "logic", value_delimiter = ',')]
    pub logic: Vec<String>,
    /// Segment durations in seconds (comma separated).
    #[arg(long = "segment-duration", value_delimiter = ',', default_values_t = [2.0, 10.0])]
    pub segment_duration: Vec<f64>,
    /// Trace file, or "reference" for the built-in trace.
    #[arg(long, default_value = "reference")]
    pub trace: String,
    /// Ladder file, or "default" for the built-in ladder.
    #[arg(long, default_value = "default")]
    pub ladder: String,
    /// Sessions per cell; repeat k uses seed `seed + k`.
    #[arg(long, default_value_t = 1)]
    pub repeats: u32,
    /// Base seed for randomized logics.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Logic parameter file (key=value, `version=1`).
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Media duration in seconds; defaults to the trace duration rounded
    /// down to a whole number of segments.
    #[arg(long = "media-duration")]
    pub media_duration: Option<f64>,
    /// Also write per-run plot data (bitrate and buffer series).
    #[arg(long = "plot-data", default_value_t = false)]
    pub plot_data: bool,
}

/// One matrix cell: session metrics averaged over the cell's repeats.
/// Counts become fractional under averaging, so everything is `f64`.
#[derive(Clone, Debug, Serialize)]
pub struct MatrixCell {
    pub logic: String,
    pub segment_duration_s: f64,
    pub inefficiency: f64,
    pub inefficiency_sum: f64,
    pub instability: f64,
    pub media_throughput_kbps: f64,
    pub avg_buffer_s: f64,
    pub startup_delay_s: f64,
    pub stall_count: f64,
    pub stall_total_s: f64,
    pub switch_count: f64,
    pub switch_amplitude_mean: f64,
    pub switch_amplitude_kbps_mean: f64,
}

impl MatrixCell {
    fn from_reports(logic: &str, duration: f64, reports: &[SummaryReport<f64>]) -> Self {
        let n = reports.len() as f64;
        let mean = |f: &dyn Fn(&SummaryReport<f64>) -> f64| -> f64 {
            reports.iter().map(f).sum::<f64>() / n
        };
        MatrixCell {
            logic: logic.to_string(),
            segment_duration_s: duration,
            inefficiency: mean(&|r| r.inefficiency),
            inefficiency_sum: mean(&|r| r.inefficiency_sum),
            instability: mean(&|r| r.instability),
            media_throughput_kbps: mean(&|r| r.media_throughput),
            avg_buffer_s: mean(&|r| r.avg_buffer),
            startup_delay_s: mean(&|r| r.startup_delay),
            stall_count: mean(&|r| r.stall_count as f64),
            stall_total_s: mean(&|r| r.stall_total),
            switch_count: mean(&|r| r.switch_count as f64),
            switch_amplitude_mean: mean(&|r| r.switch_amplitude_mean),
            switch_amplitude_kbps_mean: mean(&|r| r.switch_amplitude_kbps_mean),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.logic,
            self.segment_duration_s,
            self.inefficiency,
            self.inefficiency_sum,
            self.instability,
            self.media_throughput_kbps,
            self.avg_buffer_s,
            self.startup_delay_s,
            self.stall_count,
            self.stall_total_s,
            self.switch_count,
            self.switch_amplitude_mean,
            self.switch_amplitude_kbps_mean
        )
    }
}

#[derive(Serialize)]
struct TraceInfo {
    source: String,
    duration_s: f64,
    mean_kbps: f64,
    breakpoints: usize,
}

#[derive(Serialize)]
struct LadderInfo {
    source: String,
    representations: usize,
    min_kbps: f64,
    max_kbps: f64,
}

/// Top-level `report.json` document. Deliberately carries no timestamps or
/// host details: identical inputs must produce byte-identical reports.
#[derive(Serialize)]
struct RunReport {
    version: u32,
    trace: TraceInfo,
    ladder: LadderInfo,
    repeats: u32,
    seed: u64,
    cells: Vec<MatrixCell>,
}

pub fn cmd_run(args: &RunArgs) -> anyhow::Result<()> {
    let logics: Vec<String> = if args.logic.is_empty() {
        LOGIC_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        args.logic.clone()
    };
    for name in &logics {
        if !LOGIC_NAMES.contains(&name.as_str()) {
            bail!(
                "unknown adaptation logic `{name}` (expected one of: {})",
                LOGIC_NAMES.join(", ")
            );
        }
    }
    if args.segment_duration.is_empty() {
        bail!("need at least one --segment-duration");
    }
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }

    let trace = load_trace(&args.trace)?;
    let ladder = load_ladder(&args.ladder)?;
    let params = load_params(args.params.as_deref())?;
    let runs_dir = args.out.join("runs");
    fs::create_dir_all(&runs_dir).with_context(|| format!("creating {}", runs_dir.display()))?;

    let mut cells = Vec::with_capacity(logics.len() * args.segment_duration.len());
    for logic_name in &logics {
        for &duration in &args.segment_duration {
            let media = match args.media_duration {
                Some(m) => m,
                None => (trace.duration() / duration).floor() * duration,
            };
            let mut reports = Vec::with_capacity(args.repeats as usize);
            for repeat in 0..args.repeats {
                let mut config = SessionConfig::new(duration, media);
                config.seed = args.seed + u64::from(repeat);
                let mut logic = build_logic::<f64>(logic_name, &params, config.seed)?;
                let log = run_session(&config, &trace, &ladder, logic.as_mut())?;
                let summary = summarize(&log).with_context(|| {
                    format!("summarizing {logic_name} at {duration} s segments")
                })?;

                let base = format!("{logic_name}_{duration}s_r{repeat}");
                atomic_write(&runs_dir.join(format!("{base}.log")), &log.to_event_log())?;
                if args.plot_data {
                    atomic_write(&runs_dir.join(format!("{base}_bitrate.csv")), &bitrate_csv(&log))?;
                    atomic_write(&runs_dir.join(format!("{base}_buffer.csv")), &buffer_csv(&log))?;
                }
                reports.push(summary);
            }
            cells.push(MatrixCell::from_reports(logic_name, duration, &reports));
        }
    }

    let mut csv = String::from(SummaryReport::<f64>::CSV_HEADER);
    csv.push('\n');
    for cell in &cells {
        csv.push_str(&cell.csv_row());
        csv.push('\n');
    }
    atomic_write(&args.out.join("summary.csv"), &csv)?;

    let report = RunReport {
        version: 1,
        trace: TraceInfo {
            source: args.trace.clone(),
            duration_s: trace.duration(),
            mean_kbps: trace.mean_bandwidth(),
            breakpoints: trace.points().len(),
        },
        ladder: LadderInfo {
            source: args.ladder.clone(),
            representations: ladder.len(),
            min_kbps: ladder.reps().first().map(|r| r.bitrate).unwrap_or(0.0),
            max_kbps: ladder.reps().last().map(|r| r.bitrate).unwrap_or(0.0),
        },
        repeats: args.repeats,
        seed: args.seed,
        cells,
    };
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');
    atomic_write(&args.out.join("report.json"), &json)?;

    println!(
        "wrote {} cells ({} sessions) to {}",
        report.cells.len(),
        report.cells.len() * args.repeats as usize,
        args.out.display()
    );
    Ok(())
}

fn bitrate_csv(log: &SessionLog<f64>) -> String {
    let mut out = String::from("media_second,bitrate_kbps\n");
    for (second, bitrate) in bitrate_series_1hz(log).iter().enumerate() {
        let _ = writeln!(out, "{second},{bitrate}");
    }
    out
}

fn buffer_csv(log: &SessionLog<f64>) -> String {
    let mut out = String::from("time_s,buffer_s\n");
    for (t, level) in &log.buffer_samples {
        let _ = writeln!(out, "{t},{level}");
    }
    out
}
