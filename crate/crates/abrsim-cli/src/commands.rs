//! Small subcommands (`gen-trace`, `export-netem`, `validate`) and the file
//! helpers shared with `run`.

use std::fs;
use std::path::{Path, PathBuf};

use abrsim::adaptation::LogicParams;
use abrsim::model::{BandwidthTrace, Ladder};
use abrsim::netsim::emit_shaping_script;
use abrsim::tracegen::{self, TraceSpec};
use anyhow::{bail, Context};
use clap::Args;

/// Write `contents` to `path` via a temp file and rename, so readers never
/// observe a half-written file and interrupted runs leave no torn output.
pub fn atomic_write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    let tmp = path.with_file_name(name);
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}

/// Load a trace file, or the built-in reference trace for `"reference"`.
pub fn load_trace(spec: &str) -> anyhow::Result<BandwidthTrace<f64>> {
    if spec == "reference" {
        return Ok(tracegen::reference_trace());
    }
    BandwidthTrace::load(spec).with_context(|| format!("loading trace `{spec}`"))
}

/// Load a ladder file, or the built-in ladder for `"default"`.
pub fn load_ladder(spec: &str) -> anyhow::Result<Ladder<f64>> {
    if spec == "default" {
        return Ok(Ladder::default_ladder());
    }
    Ladder::load(spec).with_context(|| format!("loading ladder `{spec}`"))
}

pub fn load_params(path: Option<&Path>) -> anyhow::Result<LogicParams<f64>> {
    match path {
        None => Ok(LogicParams::default()),
        Some(p) => {
            LogicParams::load(p).with_context(|| format!("loading parameters `{}`", p.display()))
        }
    }
}

/// Generate a reference-style bandwidth trace file.
///
/// Defaults reproduce the built-in reference trace. Drops default to 1/2 and
/// 6/7 of the duration (the reference positions), so they stay valid when
/// only `--duration` changes.
#[derive(Args, Debug)]
pub struct GenTraceArgs {
    /// Trace duration in seconds.
    #[arg(long, default_value_t = 700.0)]
    pub duration: f64,
    /// Target mean bandwidth in kbit/s; the trace is scaled to match it.
    #[arg(long, default_value_t = 1269.53)]
    pub mean: f64,
    /// Drop start times in seconds (comma separated or repeated).
    #[arg(long = "drop", value_delimiter = ',')]
    pub drops: Vec<f64>,
    /// Generate a trace with no drops.
    #[arg(long, default_value_t = false)]
    pub no_drops: bool,
    /// Lowest admissible bandwidth after scaling, kbit/s.
    #[arg(long = "min-level", default_value_t = 150.0)]
    pub min_level: f64,
    /// Seconds each drop (and the early dip) holds before recovering.
    #[arg(long = "drop-hold", default_value_t = 45.0)]
    pub drop_hold: f64,
    #[arg(long, default_value_t = tracegen::DEFAULT_REFERENCE_SEED)]
    pub seed: u64,
    /// Output trace file.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_gen_trace(args: &GenTraceArgs) -> anyhow::Result<()> {
    let drops = if args.no_drops {
        Vec::new()
    } else if args.drops.is_empty() {
        vec![args.duration * 0.5, args.duration * 6.0 / 7.0]
    } else {
        args.drops.clone()
    };
    let spec = TraceSpec {
        duration: args.duration,
        mean: args.mean,
        drops,
        min_level: args.min_level,
        drop_hold: args.drop_hold,
        seed: args.seed,
    };
    let trace = tracegen::generate(&spec)?;
    // Generation scales to the target mean; refuse to write anything that
    // somehow missed it.
    let got = trace.mean_bandwidth();
    if ((got - args.mean) / args.mean).abs() > 0.01 {
        bail!(
            "generated trace mean {got:.2} kbit/s deviates from target {} kbit/s",
            args.mean
        );
    }
    atomic_write(&args.out, &trace.to_csv())?;
    println!(
        "wrote {} ({} breakpoints, mean {:.2} kbit/s)",
        args.out.display(),
        trace.points().len(),
        got
    );
    Ok(())
}

/// Convert a bandwidth trace into a tc/netem shaping script.
#[derive(Args, Debug)]
pub struct ExportNetemArgs {
    /// Trace file, or "reference" for the built-in trace.
    #[arg(long, default_value = "reference")]
    pub trace: String,
    /// Network interface the script shapes.
    #[arg(long, default_value = "eth0")]
    pub interface: String,
    /// Fixed one-way delay in seconds, applied via netem.
    #[arg(long, default_value_t = 0.08)]
    pub delay: f64,
    /// Output script path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_export_netem(args: &ExportNetemArgs) -> anyhow::Result<()> {
    let trace = load_trace(&args.trace)?;
    let script = emit_shaping_script(&trace, &args.interface, args.delay);
    atomic_write(&args.out, &script)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mut perm = fs::metadata(&args.out)?.permissions();
        perm.set_mode(0o755);
        fs::set_permissions(&args.out, perm)?;
    }
    println!(
        "wrote {} ({} bandwidth changes)",
        args.out.display(),
        trace.points().len().saturating_sub(1)
    );
    Ok(())
}

/// Check input files for well-formedness; exits non-zero if any fail.
#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Trace files to check.
    #[arg(long = "trace")]
    pub traces: Vec<PathBuf>,
    /// Ladder files to check.
    #[arg(long = "ladder")]
    pub ladders: Vec<PathBuf>,
    /// Logic parameter files to check.
    #[arg(long = "params")]
    pub params: Vec<PathBuf>,
}

pub fn cmd_validate(args: &ValidateArgs) -> anyhow::Result<()> {
    if args.traces.is_empty() && args.ladders.is_empty() && args.params.is_empty() {
        bail!("nothing to validate: pass --trace, --ladder, or --params files");
    }
    let mut failures = 0usize;
    for p in &args.traces {
        check("trace", p, BandwidthTrace::<f64>::load(p).map(|_| ()), &mut failures);
    }
    for p in &args.ladders {
        check("ladder", p, Ladder::<f64>::load(p).map(|_| ()), &mut failures);
    }
    for p in &args.params {
        check("params", p, LogicParams::<f64>::load(p).map(|_| ()), &mut failures);
    }
    if failures > 0 {
        bail!("{failures} file(s) failed validation");
    }
    Ok(())
}

fn check(kind: &str, path: &Path, result: abrsim::Result<()>, failures: &mut usize) {
    match result {
        Ok(()) => println!("{} {}: OK", kind, path.display()),
        Err(err) => {
            println!("{} {}: {err}", kind, path.display());
            *failures += 1;
        }
    }
}
