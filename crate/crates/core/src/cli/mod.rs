//! Command-line interface: `analyze`, `monitor` and `gen`.
//!
//! Exit codes: 0 on success, 1 on input errors (I/O, syntax, types, malformed
//! traces, bad arguments), 2 when memory cannot be bounded statically.

pub mod gen;
pub mod trace;

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{analyze, AnalysisOptions, MemoryReport};
use crate::ast::TypedSpecification;
use crate::compile;
use crate::engine::{EngineError, Mode, Monitor, MonitorConfig};
use crate::parser::parse_frequency;
use crate::time::Frequency;

use gen::{generate_fleet, generate_pid, FleetScenario, PidScenario};
use trace::TraceReader;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNBOUNDED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "panemon", version, about = "Stream monitoring with statically bounded memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report rates, per-stream memory and the total memory bound.
    Analyze(AnalyzeArgs),
    /// Replay a CSV trace and print verdicts as JSON lines.
    Monitor(MonitorArgs),
    /// Write a seeded synthetic trace.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct AnalysisFlags {
    /// Panes per window for consumers without a fixed rate.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    pane_divisor: u32,
    /// Bound on the number of instances of a template, as `stream=n`.
    #[arg(long = "max-instances", value_parser = parse_instance_bound)]
    max_instances: Vec<(String, u64)>,
}

impl AnalysisFlags {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions { pane_divisor: self.pane_divisor, max_instances: self.max_instances.iter().cloned().collect::<HashMap<_, _>>() }
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    spec: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Analyze as monitored in fixed mode at this frequency.
    #[arg(long, value_parser = parse_frequency)]
    frequency: Option<Frequency>,
    #[command(flatten)]
    flags: AnalysisFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Fixed,
    Variable,
}

#[derive(Debug, Args)]
struct MonitorArgs {
    spec: PathBuf,
    trace: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Clock of otherwise unclocked outputs; required in fixed mode.
    #[arg(long, value_parser = parse_frequency)]
    frequency: Option<Frequency>,
    /// Monitor even if memory cannot be bounded statically.
    #[arg(long)]
    allow_unbounded: bool,
    #[command(flatten)]
    flags: AnalysisFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scenario {
    Pid,
    Fleet,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(value_enum)]
    scenario: Scenario,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
    /// Trace length in seconds.
    #[arg(long)]
    duration: Option<u64>,
    /// pid: instant of the disturbance step, in seconds.
    #[arg(long)]
    disturbance_at: Option<u64>,
    /// pid: height of the disturbance step.
    #[arg(long)]
    disturbance: Option<f64>,
    /// pid: half-width of the measurement noise.
    #[arg(long)]
    noise: Option<f64>,
    /// fleet: number of cars.
    #[arg(long)]
    cars: Option<u64>,
    /// fleet: number of random events.
    #[arg(long)]
    events: Option<u64>,
    /// fleet: probability that an event is an off-road pick-up.
    #[arg(long)]
    misbehavior_rate: Option<f64>,
    /// fleet: car forced to make six off-road pick-ups within one hour.
    #[arg(long)]
    force_car: Option<i64>,
    /// fleet: car retired halfway through the trace.
    #[arg(long)]
    retire: Option<i64>,
}

fn parse_instance_bound(text: &str) -> Result<(String, u64), String> {
    let (name, bound) = text.split_once('=').ok_or("expected `stream=n`")?;
    let bound = bound.trim().parse::<u64>().map_err(|e| format!("bad instance bound: {e}"))?;
    Ok((name.trim().to_string(), bound))
}

fn load_spec(path: &Path, err: &mut dyn Write) -> Option<TypedSpecification> {
    let source = match std::fs::read_to_string(path) {
        Ok(source) => source,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return None;
        }
    };
    match compile(&source) {
        Ok(spec) => Some(spec),
        Err(e) => {
            let _ = write!(err, "{}", e.render(&source));
            let _ = writeln!(err, "error: {}: {e}", path.display());
            None
        }
    }
}

#[derive(Serialize)]
struct AnalyzeDocument<'a> {
    bounded: bool,
    efficiently_bound: Vec<(&'a str, bool)>,
    #[serde(flatten)]
    report: &'a MemoryReport,
}

fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(spec) = load_spec(&args.spec, err) else { return EXIT_ERROR };
    let spec = match args.frequency {
        Some(freq) => spec.with_default_clock(freq),
        None => spec,
    };
    let analysis = match analyze(&spec, &args.flags.options()) {
        Ok(analysis) => analysis,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let report = &analysis.report;
    let written = if args.json {
        let doc = AnalyzeDocument {
            bounded: report.total.is_bounded(),
            efficiently_bound: spec.outputs.iter().map(|o| o.name.as_str()).zip(analysis.efficiently_bound.iter().copied()).collect(),
            report,
        };
        serde_json::to_string_pretty(&doc).map_err(std::io::Error::from).and_then(|text| writeln!(out, "{text}"))
    } else {
        write!(out, "{}", report.to_text())
    };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_ERROR;
    }
    if report.total.is_bounded() {
        EXIT_OK
    } else {
        EXIT_UNBOUNDED
    }
}

fn cmd_monitor(args: &MonitorArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mode = match (args.mode, args.frequency) {
        (ModeArg::Fixed, Some(freq)) => Mode::Fixed(freq),
        (ModeArg::Fixed, None) => {
            let _ = writeln!(err, "error: --mode fixed requires --frequency");
            return EXIT_ERROR;
        }
        (ModeArg::Variable, None) => Mode::Variable,
        (ModeArg::Variable, Some(_)) => {
            let _ = writeln!(err, "error: --frequency only applies to --mode fixed");
            return EXIT_ERROR;
        }
    };
    let Some(spec) = load_spec(&args.spec, err) else { return EXIT_ERROR };
    let config = MonitorConfig { mode, allow_unbounded: args.allow_unbounded, analysis: args.flags.options() };
    let mut monitor = match Monitor::new(&spec, &config) {
        Ok(monitor) => monitor,
        Err(e @ EngineError::AnalysisRefusal { .. }) => {
            let _ = writeln!(err, "error: {e}; pass --allow-unbounded to monitor anyway");
            return EXIT_UNBOUNDED;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let file = match File::open(&args.trace) {
        Ok(file) => file,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", args.trace.display());
            return EXIT_ERROR;
        }
    };
    let reader = match TraceReader::new(BufReader::new(file), monitor.spec()) {
        Ok(reader) => reader,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", args.trace.display());
            return EXIT_ERROR;
        }
    };
    let mut out = BufWriter::new(out);
    let mut code = EXIT_OK;
    for event in reader {
        let verdicts = match event.map_err(|e| e.to_string()).and_then(|ev| monitor.process(&ev).map_err(|e| e.to_string())) {
            Ok(verdicts) => verdicts,
            Err(message) => {
                let _ = writeln!(err, "error: {}: {message}", args.trace.display());
                code = EXIT_ERROR;
                break;
            }
        };
        for verdict in verdicts {
            if writeln!(out, "{}", verdict.to_json_line()).is_err() {
                code = EXIT_ERROR;
                break;
            }
        }
    }
    let _ = out.flush();
    let stats = monitor.stats();
    let _ = writeln!(
        err,
        "summary: events={} verdicts={} peak_slots={} bound={}",
        stats.events,
        stats.verdicts,
        stats.peak_slots,
        monitor.analysis().report.total
    );
    code
}

fn cmd_gen(args: &GenArgs, err: &mut dyn Write) -> i32 {
    let file = match File::create(&args.output) {
        Ok(file) => BufWriter::new(file),
        Err(e) => {
            let _ = writeln!(err, "error: cannot create {}: {e}", args.output.display());
            return EXIT_ERROR;
        }
    };
    let result = match args.scenario {
        Scenario::Pid => {
            let base = PidScenario::default();
            let scenario = PidScenario {
                duration: args.duration.unwrap_or(base.duration),
                disturbance_at: args.disturbance_at.unwrap_or(base.disturbance_at),
                disturbance: args.disturbance.unwrap_or(base.disturbance),
                noise: args.noise.unwrap_or(base.noise),
                ..base
            };
            generate_pid(&scenario, args.seed, file)
        }
        Scenario::Fleet => {
            let base = FleetScenario::default();
            let scenario = FleetScenario {
                cars: args.cars.unwrap_or(base.cars),
                events: args.events.unwrap_or(base.events),
                duration: args.duration.unwrap_or(base.duration),
                misbehavior: args.misbehavior_rate.unwrap_or(base.misbehavior),
                force_car: args.force_car,
                retire: args.retire,
            };
            generate_fleet(&scenario, args.seed, file)
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let _ = std::fs::remove_file(&args.output);
            EXIT_ERROR
        }
    }
}

/// Runs the command line `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match &cli.command {
        Command::Analyze(args) => cmd_analyze(args, out, err),
        Command::Monitor(args) => cmd_monitor(args, out, err),
        Command::Gen(args) => cmd_gen(args, err),
    }
}
