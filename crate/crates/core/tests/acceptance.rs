//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

use std::cell::Cell;
use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use num_rational::Ratio;
use panemon::analysis::memory::{compute_memory, default_pane_widths, Bound, PaneWidths};
use panemon::analysis::{analyze, build_adg, AnalysisOptions, Rate};
use panemon::ast::{AggFn, TypedSpecification};
use panemon::cli::gen::{generate_fleet, generate_pid, FleetScenario, PidScenario};
use panemon::cli::trace::TraceReader;
use panemon::engine::{run, Event, Mode, Monitor, MonitorConfig, Verdict, VerdictKind};
use panemon::parser::parse_frequency;
use panemon::time::{Frequency, Time};
use panemon::value::{Value, ValueType};
use panemon::windows::PanedWindow;
use panemon::{compile, parser};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn load(name: &str) -> TypedSpecification {
    let source = std::fs::read_to_string(specs_dir().join(name)).unwrap();
    compile(&source).unwrap_or_else(|e| panic!("{name}: {}", e.render(&source)))
}

fn ceil_div(num: i128, den: i128) -> u64 {
    ((num + den - 1) / den) as u64
}

fn decimal(numer: i64, denom: i64) -> String {
    format!("{}", numer as f64 / denom as f64)
}

// 1 ------------------------------------------------------------------------

fn analyzer_ground_truth() -> Outcome {
    let started = Instant::now();
    let options = AnalysisOptions::default();
    let phi = analyze(&load("phi.spec"), &options).map_err(|e| e.to_string())?;
    for name in ["diff", "acc"] {
        ensure!(phi.graph.rate_of(name) == Some(Rate::Var), "phi: {name} is {:?}", phi.graph.rate_of(name));
    }
    let clocked = analyze(&load("phi_clocked.spec"), &options).map_err(|e| e.to_string())?;
    for name in ["diff", "acc"] {
        let rate = clocked.graph.rate_of(name);
        ensure!(rate == Some(Rate::Fixed(Frequency::from_hz(1))), "phi': {name} is {rate:?}");
    }
    let realtime = analyze(&load("phi_realtime.spec"), &options).map_err(|e| e.to_string())?;
    ensure!(realtime.report.total == Bound::Unbounded, "phi'': total is {}", realtime.report.total);
    let offending: Vec<_> = realtime.report.unbounded_edges().map(|e| (e.from.as_str(), e.to.as_str())).collect();
    ensure!(offending == [("diff", "b")], "phi'': unbounded edges {offending:?}");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("phi Var/Var, phi' 1Hz/1Hz, phi'' unbounded at diff -> b, {elapsed:.2?}"))
}

// 2 ------------------------------------------------------------------------

/// μ of the single window in `source`, with the pane width set to `pane` seconds if given.
fn window_mu(source: &str, pane: Option<Ratio<i64>>) -> Bound {
    let spec = compile(source).unwrap_or_else(|e| panic!("{}", e.render(source)));
    let graph = build_adg(&spec).unwrap();
    let widths = match pane {
        Some(z) => PaneWidths(vec![z]),
        None => default_pane_widths(&spec, &graph, 256),
    };
    let report = compute_memory(&spec, &graph, &widths, &HashMap::new());
    assert_eq!(report.windows.len(), 1);
    report.windows[0].memory
}

fn memory_table() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rounds = 20;
    for _ in 0..rounds {
        // r = rq/4 s, z = zq/8 s, y = yq/10 Hz
        let rq: i64 = rng.gen_range(1..=400);
        let zq: i64 = rng.gen_range(1..=3 * rq);
        let yq: i64 = rng.gen_range(1..=50);
        let r = decimal(rq, 4);
        let y = decimal(yq, 10);
        let z = Ratio::new(zq, 8);
        let panes = ceil_div(2 * rq as i128, zq as i128).max(1);
        let values = ceil_div((rq * yq) as i128, 40).max(1);

        let var_hom = window_mu(&format!("input double x\noutput double w := x[{r}s, sum, 0.0]"), Some(z));
        ensure!(var_hom == Bound::Bounded(panes), "Var/γ* r={r} z={z}: {var_hom} != {panes}");

        let fixed = |agg: &str| format!("input double x\noutput double t: {y}Hz := x\noutput double w := t[{r}s, {agg}, 0.0]");
        let fixed_raw = window_mu(&fixed("median"), None);
        ensure!(fixed_raw == Bound::Bounded(values), "Fixed/raw r={r} y={y}: {fixed_raw} != {values}");

        let fixed_hom = window_mu(&fixed("sum"), Some(z));
        let expected = panes.min(values);
        ensure!(fixed_hom == Bound::Bounded(expected), "Fixed/γ* r={r} z={z} y={y}: {fixed_hom} != {expected}");

        let var_raw = window_mu(&format!("input double x\noutput double w := x[{r}s, median, 0.0]"), Some(z));
        ensure!(var_raw == Bound::Unbounded, "Var/raw r={r}: {var_raw}");
    }
    Ok(format!("{rounds} random (r, z, y) per cell, 4 cells"))
}

// 3 ------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct TraceCase {
    seed: u64,
    events: usize,
    aggregation: AggFn,
    int_values: bool,
    duration_ms: i64,
    pane_ms: i64,
    per_window: u32,
}

fn trace_case() -> impl Strategy<Value = TraceCase> {
    let aggs = vec![AggFn::Count, AggFn::Sum, AggFn::Avg, AggFn::Min, AggFn::Max, AggFn::Integral];
    (
        any::<u64>(),
        prop_oneof![9 => 1usize..1000, 1 => 1000usize..=10_000],
        prop::sample::select(aggs),
        any::<bool>(),
        1i64..=100_000,
        prop_oneof![Just(None), (1i64..=64).prop_map(Some)],
        1u32..=64,
    )
        .prop_flat_map(|(seed, events, aggregation, int_values, duration_ms, divisor, per_window)| {
            // either an exact divisor of the window or an arbitrary width up to 1.5 windows
            let pane = match divisor {
                Some(k) if duration_ms % k == 0 => Just(duration_ms / k).boxed(),
                _ => (1i64..=duration_ms + duration_ms / 2).boxed(),
            };
            pane.prop_map(move |pane_ms| TraceCase {
                seed,
                events,
                aggregation,
                int_values: int_values && aggregation != AggFn::Integral,
                duration_ms,
                pane_ms,
                per_window,
            })
        })
}

/// Aggregates the raw samples directly, with no pane summaries.
fn oracle_aggregate(aggregation: AggFn, samples: &[(i64, Value)], int_values: bool) -> Option<Value> {
    let floats = || samples.iter().map(|(_, v)| v.as_f64().unwrap());
    let ints = || samples.iter().map(|(_, v)| match v {
        Value::Int(i) => *i,
        other => panic!("expected int, got {other:?}"),
    });
    match aggregation {
        AggFn::Count => Some(Value::Int(samples.len() as i64)),
        AggFn::Sum if int_values => Some(Value::Int(ints().sum())),
        AggFn::Sum => Some(Value::Double(floats().fold(0.0, |a, b| a + b))),
        _ if samples.is_empty() => None,
        AggFn::Avg if int_values => Some(Value::Int((ints().map(i128::from).sum::<i128>() / samples.len() as i128) as i64)),
        AggFn::Avg => Some(Value::Double(floats().sum::<f64>() / samples.len() as f64)),
        AggFn::Min => samples.iter().map(|(_, v)| *v).min(),
        AggFn::Max => samples.iter().map(|(_, v)| *v).max(),
        AggFn::Integral => Some(Value::Double(
            samples
                .windows(2)
                .map(|w| (w[1].0 - w[0].0) as f64 / 1e9 * (w[0].1.as_f64().unwrap() + w[1].1.as_f64().unwrap()) / 2.0)
                .sum(),
        )),
        AggFn::Median => unreachable!(),
    }
}

fn close(a: Option<Value>, b: Option<Value>) -> bool {
    match (a, b) {
        (Some(Value::Double(x)), Some(Value::Double(y))) => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-300),
        (x, y) => x == y,
    }
}

fn check_trace(case: &TraceCase) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
    let ms = 1_000_000i64;
    let (r, z) = (case.duration_ms * ms, case.pane_ms * ms);
    let ty = if case.int_values { ValueType::Int } else { ValueType::Double };
    let mut window = PanedWindow::new(Time::from_nanos(r), Time::from_nanos(z), case.aggregation, ty).unwrap();
    let max_panes = ceil_div(r as i128, z as i128) as usize + 1;
    let mean_gap = (r / i64::from(case.per_window)).max(1);

    let mut samples: Vec<(i64, Value)> = Vec::with_capacity(case.events);
    let mut start = 0usize;
    let mut ts = rng.gen_range(0..2 * mean_gap);
    let pane_of = |t: i64| (t - 1).div_euclid(z) as i128;

    let mut check_at = |t: i64, window: &mut PanedWindow, samples: &[(i64, Value)]| -> Result<(), String> {
        let horizon = (pane_of(t) + 1) * z as i128 - r as i128;
        while start < samples.len() && (pane_of(samples[start].0) + 1) * (z as i128) <= horizon {
            start += 1;
        }
        let expected = oracle_aggregate(case.aggregation, &samples[start..], case.int_values);
        let actual = window.evaluate(Time::from_nanos(t));
        if !close(actual, expected) {
            return Err(format!("{case:?} at {t}ns: paned {actual:?} vs oracle {expected:?}"));
        }
        if window.pane_count() > max_panes {
            return Err(format!("{case:?} at {t}ns: {} panes > {max_panes}", window.pane_count()));
        }
        Ok(())
    };

    for _ in 0..case.events {
        let value = if case.int_values { Value::Int(rng.gen_range(-1000..=1000)) } else { Value::Double(rng.gen_range(0.0..1000.0)) };
        window.register(value, Time::from_nanos(ts)).map_err(|e| e.to_string())?;
        samples.push((ts, value));
        if window.pane_count() > max_panes {
            return Err(format!("{case:?}: {} panes > {max_panes} after register", window.pane_count()));
        }
        check_at(ts, &mut window, &samples)?;
        let gap = if rng.gen_bool(0.05) { 0 } else { rng.gen_range(1..=2 * mean_gap) };
        if gap > 1 && rng.gen_bool(0.3) {
            check_at(ts + rng.gen_range(1..gap), &mut window, &samples)?;
        }
        ts += gap;
    }
    Ok(())
}

fn paning_correctness() -> Outcome {
    let started = Instant::now();
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    let cases = Cell::new(0u32);
    let events = Cell::new(0usize);
    runner
        .run(&trace_case(), |case| {
            cases.set(cases.get() + 1);
            events.set(events.get() + case.events);
            check_trace(&case).map_err(TestCaseError::fail)
        })
        .map_err(|e| e.to_string())?;
    let (cases, events) = (cases.get(), events.get());
    let elapsed = started.elapsed();
    ensure!(cases >= 1000, "only {cases} traces");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{cases} traces, {events} events, {elapsed:.1?}"))
}

// 4 ------------------------------------------------------------------------

struct CliRun {
    code: i32,
    stdout: String,
    stderr: String,
}

fn cli(args: &[&str]) -> CliRun {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = panemon::cli::run(std::iter::once("panemon").chain(args.iter().copied()), &mut out, &mut err);
    CliRun { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn footer_field(stderr: &str, key: &str) -> Option<u64> {
    let line = stderr.lines().find(|l| l.starts_with("summary:"))?;
    line.split_whitespace().find_map(|kv| kv.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

fn write_random_trace(path: &Path, columns: &[&str], rows: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut writer = csv::Writer::from_path(path).unwrap();
    let mut header = vec!["time"];
    header.extend_from_slice(columns);
    writer.write_record(&header).unwrap();
    let mut ms = 0u64;
    for _ in 0..rows {
        ms += rng.gen_range(1..2000);
        let mut record = vec![format!("{}.{:03}", ms / 1000, ms % 1000)];
        for _ in columns {
            record.push(if rng.gen_bool(0.2) { String::new() } else { format!("{:.3}", rng.gen_range(0.0..10.0)) });
        }
        writer.write_record(&record).unwrap();
    }
    writer.flush().unwrap();
}

fn runtime_bound_bridge(dir: &Path) -> Outcome {
    let ab = dir.join("ab.csv");
    write_random_trace(&ab, &["a", "b"], 2000, 41);
    let controller = dir.join("controller.csv");
    write_random_trace(&controller, &["sensor", "reference", "timestamp"], 2000, 42);
    let pid = dir.join("pid.csv");
    generate_pid(&PidScenario::default(), 43, std::fs::File::create(&pid).unwrap()).unwrap();
    let fleet = dir.join("fleet.csv");
    let scenario = FleetScenario { misbehavior: 0.1, force_car: Some(4), retire: Some(9), ..FleetScenario::default() };
    generate_fleet(&scenario, 44, std::fs::File::create(&fleet).unwrap()).unwrap();
    // the counting variant declares no retire input
    let fleet_plain = dir.join("fleet_plain.csv");
    let mut reader = csv::Reader::from_path(&fleet).unwrap();
    let mut writer = csv::Writer::from_path(&fleet_plain).unwrap();
    writer.write_record(reader.headers().unwrap().iter().take(4)).unwrap();
    for record in reader.records() {
        let record = record.unwrap();
        if !record[3].is_empty() {
            writer.write_record(record.iter().take(4)).unwrap();
        }
    }
    writer.flush().unwrap();

    let fleet_bounds = ["--max-instances", "offRoadPickUp=50", "--max-instances", "suspicious=50"];
    let runs: Vec<(&str, &Path, Vec<&str>)> = vec![
        ("phi.spec", &ab, vec!["--mode", "variable"]),
        ("phi.spec", &ab, vec!["--mode", "fixed", "--frequency", "2Hz"]),
        ("phi_clocked.spec", &ab, vec!["--mode", "variable"]),
        ("controller.spec", &controller, vec!["--mode", "variable"]),
        ("controller.spec", &controller, vec!["--mode", "fixed", "--frequency", "0.5Hz"]),
        ("pid.spec", &pid, vec!["--mode", "variable"]),
        ("pid.spec", &pid, vec!["--mode", "fixed", "--frequency", "1Hz"]),
        ("pid.spec", &pid, vec!["--mode", "fixed", "--frequency", "0.2Hz"]),
        ("pid.spec", &pid, vec!["--mode", "fixed", "--frequency", "0.1Hz"]),
        ("fleet.spec", &fleet, [&["--mode", "variable"][..], &fleet_bounds].concat()),
        ("fleet_count.spec", &fleet_plain, [&["--mode", "variable"][..], &fleet_bounds].concat()),
    ];
    let mut checked = Vec::new();
    for (spec, trace, flags) in runs {
        let spec_path = specs_dir().join(spec);
        let mut args = vec!["monitor", spec_path.to_str().unwrap(), trace.to_str().unwrap()];
        args.extend(flags.iter().copied());
        let out = cli(&args);
        ensure!(out.code == 0, "{spec} {flags:?}: exit {} {}", out.code, out.stderr);
        let peak = footer_field(&out.stderr, "peak_slots").ok_or(format!("{spec}: no footer"))?;
        let bound = footer_field(&out.stderr, "bound").ok_or(format!("{spec} {flags:?}: bound is not a number"))?;
        ensure!(peak <= bound, "{spec} {flags:?}: peak {peak} > bound {bound}");
        checked.push(format!("{peak}/{bound}"));
    }
    Ok(format!("{} runs, peak/bound {}", checked.len(), checked.join(" ")))
}

// 5 ------------------------------------------------------------------------

fn read_events(spec: &TypedSpecification, path: &Path) -> Vec<Event> {
    TraceReader::new(std::fs::File::open(path).unwrap(), spec).unwrap().collect::<Result<_, _>>().unwrap()
}

/// Re-evaluates the temperature specification tick by tick from raw samples.
/// Ticks come before the event sharing their timestamp.
fn pid_oracle(rows: &[(i64, f64, f64)], ticks: i64) -> BTreeSet<i64> {
    let avg = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().fold(0.0, |a, b| a + b) / xs.len() as f64 };
    let mut errors: Vec<f64> = Vec::new();
    let mut fired = BTreeSet::new();
    for k in 1..=ticks {
        let seen: Vec<&(i64, f64, f64)> = rows.iter().filter(|(t, _, _)| *t < k && *t > k - 10).collect();
        let temp: Vec<f64> = seen.iter().map(|r| r.1).collect();
        let reference: Vec<f64> = seen.iter().map(|r| r.2).collect();
        errors.push(avg(&temp) - avg(&reference));
        let recent = &errors[errors.len().saturating_sub(50)..];
        if avg(recent) > 0.016 {
            fired.insert(k);
        }
    }
    fired
}

fn end_to_end_pid(dir: &Path) -> Outcome {
    let started = Instant::now();
    let trace = dir.join("pid_e2e.csv");
    generate_pid(&PidScenario::default(), 7, std::fs::File::create(&trace).unwrap()).unwrap();
    let spec_path = specs_dir().join("pid.spec");
    let out = cli(&["monitor", spec_path.to_str().unwrap(), trace.to_str().unwrap(), "--mode", "fixed", "--frequency", "1Hz"]);
    ensure!(out.code == 0, "exit {}: {}", out.code, out.stderr);
    let mut actual = BTreeSet::new();
    for line in out.stdout.lines() {
        let record: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if record["kind"] == "trigger" {
            let ts = record["ts"].as_f64().ok_or("ts is not a number")?;
            ensure!(ts.fract() == 0.0, "trigger off the 1Hz grid at {ts}");
            actual.insert(ts as i64);
        }
    }

    let mut reader = csv::Reader::from_path(&trace).map_err(|e| e.to_string())?;
    let rows: Vec<(i64, f64, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect();
    let last = rows.last().map_or(0, |r| r.0);
    let expected = pid_oracle(&rows, last);
    let elapsed = started.elapsed();
    ensure!(!expected.is_empty(), "oracle never fires; the scenario is too mild");
    ensure!(actual == expected, "engine {actual:?}\noracle {expected:?}");
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    let first = expected.first().unwrap();
    let last_fire = expected.last().unwrap();
    Ok(format!("{} rows, {} firings in [{first}s, {last_fire}s], {elapsed:.2?}", rows.len(), expected.len()))
}

// 6 + 7 --------------------------------------------------------------------

const FORCED: i64 = 7;
const RETIRED: i64 = 23;

fn fleet_options(bound: u64) -> AnalysisOptions {
    let max_instances = [("offRoadPickUp".to_string(), bound), ("suspicious".to_string(), bound)].into_iter().collect();
    AnalysisOptions { max_instances, ..AnalysisOptions::default() }
}

fn fleet_trace(dir: &Path) -> PathBuf {
    let path = dir.join("fleet_lifecycle.csv");
    let scenario = FleetScenario { misbehavior: 0.15, force_car: Some(FORCED), retire: Some(RETIRED), ..FleetScenario::default() };
    generate_fleet(&scenario, 2024, std::fs::File::create(&path).unwrap()).unwrap();
    path
}

fn verdict_car(verdict: &Verdict) -> Option<i64> {
    let params = match &verdict.kind {
        VerdictKind::TriggerFired { witness, .. } => witness.as_ref().map(|(_, p)| p),
        VerdictKind::OutputValue { params, .. } | VerdictKind::Warning { params, .. } => Some(params),
    }?;
    match params.first() {
        Some(Value::Int(car)) => Some(*car),
        _ => None,
    }
}

fn parametrization_lifecycle(dir: &Path) -> Outcome {
    let spec = load("fleet.spec");
    let events = read_events(&spec, &fleet_trace(dir));
    let config = MonitorConfig { analysis: fleet_options(50), ..MonitorConfig::new(Mode::Variable) };
    let mut monitor = Monitor::new(&spec, &config).map_err(|e| e.to_string())?;
    let (cid, off_road, pick_up, retire) =
        (spec.input_index("CID").unwrap(), spec.input_index("offRoad").unwrap(), spec.input_index("pickUp").unwrap(), spec.input_index("retire").unwrap());

    let mut verdicts = Vec::new();
    let mut retired_at = None;
    for event in &events {
        let before = monitor.live_instances("suspicious");
        verdicts.extend(monitor.process(event).map_err(|e| e.to_string())?);
        if event.values.iter().any(|(i, v)| *i == retire && *v == Value::Int(RETIRED)) {
            let after = monitor.live_instances("suspicious");
            ensure!(after + 1 == before, "terminate left {after} of {before} instances");
            retired_at = Some(event.ts);
        }
    }
    let retired_at = retired_at.ok_or("trace has no retire row")?;

    // brute-force recount over the same pane grid: 8h split into 256 panes
    let pane = Time::from_secs(8 * 3600).nanos() / 256;
    let pane_of = |t: Time| (t.nanos() - 1).div_euclid(pane);
    let mut expected = BTreeSet::new();
    let mut history: HashMap<i64, Vec<(Time, bool)>> = HashMap::new();
    for event in &events {
        let value = |index: usize| event.values.iter().find(|(i, _)| *i == index).map(|(_, v)| *v);
        if let Some(Value::Int(car)) = value(retire) {
            history.remove(&car);
        }
        let Some(Value::Int(car)) = value(cid) else { continue };
        let misbehaved = value(off_road) == Some(Value::Bool(true)) && value(pick_up) == Some(Value::Bool(true));
        let past = history.entry(car).or_default();
        past.push((event.ts, misbehaved));
        let oldest = pane_of(event.ts) - 255;
        let count = past.iter().filter(|(t, m)| *m && pane_of(*t) >= oldest).count();
        if count > 5 {
            expected.insert((event.ts, car));
        }
    }
    let actual: BTreeSet<(Time, i64)> = verdicts
        .iter()
        .filter(|v| matches!(&v.kind, VerdictKind::TriggerFired { trigger: 0, .. }))
        .map(|v| (v.ts, verdict_car(v).unwrap_or(-1)))
        .collect();
    ensure!(actual == expected, "engine {} firings vs recount {}: {:?}", actual.len(), expected.len(), actual.symmetric_difference(&expected).take(5).collect::<Vec<_>>());
    ensure!(expected.iter().any(|(_, car)| *car == FORCED), "forced car never flagged");
    let cars: BTreeSet<i64> = expected.iter().map(|(_, c)| *c).collect();
    let late = verdicts.iter().filter(|v| v.ts >= retired_at && verdict_car(v) == Some(RETIRED)).count();
    ensure!(late == 0, "{late} verdicts mention car {RETIRED} after its terminate");
    let scans = monitor.stats().instance_scans;
    Ok(format!("{} firings across cars {cars:?}, car {RETIRED} silent after {retired_at}, {scans} instance scans", expected.len()))
}

fn step_cost(live: usize) -> Duration {
    let spec = load("fleet.spec");
    let config = MonitorConfig { analysis: fleet_options(live as u64), ..MonitorConfig::new(Mode::Variable) };
    let mut monitor = Monitor::new(&spec, &config).unwrap();
    let (cid, off_road, pick_up) = (spec.input_index("CID").unwrap(), spec.input_index("offRoad").unwrap(), spec.input_index("pickUp").unwrap());
    let event = |ms: i64, car: i64| {
        Event::new(Time::from_nanos(ms * 1_000_000))
            .with(off_road, Value::Bool(false))
            .with(pick_up, Value::Bool(true))
            .with(cid, Value::Int(car))
    };
    let mut ms = 0;
    for car in 0..live as i64 {
        ms += 1;
        monitor.process(&event(ms, car)).unwrap();
    }
    assert_eq!(monitor.live_instances("suspicious"), live);
    let mut rng = ChaCha8Rng::seed_from_u64(live as u64);
    let steps = 3000;
    let mut best = Duration::MAX;
    for _ in 0..3 {
        let batch: Vec<Event> = (0..steps)
            .map(|_| {
                ms += 1;
                event(ms, rng.gen_range(0..live as i64))
            })
            .collect();
        let started = Instant::now();
        for e in &batch {
            monitor.process(e).unwrap();
        }
        best = best.min(started.elapsed() / steps);
    }
    assert_eq!(monitor.stats().instance_scans, 0);
    best
}

fn efficient_binding(dir: &Path) -> Outcome {
    let spec = load("fleet.spec");
    let analysis = analyze(&spec, &fleet_options(50)).map_err(|e| e.to_string())?;
    ensure!(analysis.efficiently_bound.iter().all(|b| *b), "fleet templates not efficiently bound: {:?}", analysis.efficiently_bound);
    let events = read_events(&spec, &fleet_trace(dir));
    let config = MonitorConfig { analysis: fleet_options(50), ..MonitorConfig::new(Mode::Variable) };
    let out = run(&spec, &events, &config).map_err(|e| e.to_string())?;
    ensure!(out.stats.instance_scans == 0, "{} instance scans on the fleet trace", out.stats.instance_scans);

    // control: a non-binding extend condition must be counted as scans
    let scanning = compile("input int k\noutput int o<int p>\n  invoke: k\n  extend: p < k\n  := p").map_err(|e| format!("{e:?}"))?;
    let config = MonitorConfig { allow_unbounded: true, ..MonitorConfig::new(Mode::Variable) };
    let probe: Vec<Event> = (1..=5).map(|i| Event::new(Time::from_secs(i)).with(0, Value::Int(i))).collect();
    let control = run(&scanning, &probe, &config).map_err(|e| e.to_string())?;
    ensure!(control.stats.instance_scans > 0, "control spec reported no scans");

    let costs: Vec<(usize, Duration)> = [100, 1_000, 10_000, 100_000].into_iter().map(|n| (n, step_cost(n))).collect();
    let fastest = costs.iter().map(|c| c.1).min().unwrap();
    let slowest = costs.iter().map(|c| c.1).max().unwrap();
    let ratio = slowest.as_secs_f64() / fastest.as_secs_f64();
    let table: Vec<String> = costs.iter().map(|(n, d)| format!("{n}:{d:.1?}")).collect();
    ensure!(ratio <= 3.0, "step cost not flat ({ratio:.2}x): {}", table.join(" "));
    Ok(format!("0 scans, control {} scans, step cost {} ({ratio:.2}x)", control.stats.instance_scans, table.join(" ")))
}

// 8 ------------------------------------------------------------------------

fn memory_trend(dir: &Path) -> Outcome {
    let spec = load("pid.spec");
    let trace = dir.join("pid_trend.csv");
    generate_pid(&PidScenario::default(), 8, std::fs::File::create(&trace).unwrap()).unwrap();
    let events = read_events(&spec, &trace);
    let mut peaks = Vec::new();
    for hz in ["1Hz", "0.2Hz", "0.1Hz"] {
        let config = MonitorConfig::new(Mode::Fixed(parse_frequency(hz).map_err(|e| e.to_string())?));
        let out = run(&spec, &events, &config).map_err(|e| e.to_string())?;
        peaks.push((hz, out.stats.peak_slots));
    }
    ensure!(peaks.windows(2).all(|w| w[1].1 <= w[0].1), "peaks increase: {peaks:?}");
    Ok(peaks.iter().map(|(hz, p)| format!("{hz}:{p}")).collect::<Vec<_>>().join(" "))
}

// 9 ------------------------------------------------------------------------

fn random_source(rng: &mut ChaCha8Rng, corpus: &[String]) -> String {
    const TOKENS: &[&str] = &[
        "input", "output", "trigger", "time", "int", "double", "bool", "any", "count", "invoke", "extend", "terminate", ":=", "=",
        ":", "<", ">", "(", ")", "[", "]", ",", "?", "!", "-", "+", "*", "/", "%", "&", "|", "==", "!=", "<=", ">=", "if", "then",
        "else", "true", "false", "x", "y", "p", "1", "0.5", "-1", "10s", "1Hz", "2sec", "avg", "sum", "median", "∫", "\"msg\"", "\n",
        " ",
    ];
    match rng.gen_range(0..3) {
        0 => {
            let len = rng.gen_range(0..80);
            (0..len)
                .map(|_| match rng.gen_range(0..4) {
                    0 => char::from_u32(rng.gen_range(0..0x11_0000)).unwrap_or('\u{fffd}'),
                    _ => char::from(rng.gen_range(0x20u8..0x7f)),
                })
                .collect()
        }
        1 => {
            let len = rng.gen_range(0..60);
            (0..len).map(|_| TOKENS[rng.gen_range(0..TOKENS.len())]).collect::<Vec<_>>().join(" ")
        }
        _ => {
            let mut chars: Vec<char> = corpus[rng.gen_range(0..corpus.len())].chars().collect();
            for _ in 0..rng.gen_range(1..6) {
                let at = rng.gen_range(0..=chars.len());
                match rng.gen_range(0..3) {
                    0 if at < chars.len() => {
                        chars.remove(at);
                    }
                    1 => chars.insert(at, TOKENS[rng.gen_range(0..TOKENS.len())].chars().next().unwrap_or(' ')),
                    _ => chars.truncate(at),
                }
            }
            chars.into_iter().collect()
        }
    }
}

fn determinism_and_fuzz(dir: &Path) -> Outcome {
    let pid = dir.join("pid_det.csv");
    let pid_again = dir.join("pid_det_again.csv");
    for path in [&pid, &pid_again] {
        let out = cli(&["gen", "pid", "--seed", "1", "--duration", "100", "-o", path.to_str().unwrap()]);
        ensure!(out.code == 0, "gen failed: {}", out.stderr);
    }
    ensure!(std::fs::read(&pid).unwrap() == std::fs::read(&pid_again).unwrap(), "gen is not deterministic");

    let fleet = fleet_trace(dir);
    let pid_spec = specs_dir().join("pid.spec");
    let fleet_spec = specs_dir().join("fleet.spec");
    let runs: [Vec<&str>; 3] = [
        vec!["monitor", pid_spec.to_str().unwrap(), pid.to_str().unwrap(), "--mode", "fixed", "--frequency", "1Hz"],
        vec!["monitor", pid_spec.to_str().unwrap(), pid.to_str().unwrap(), "--mode", "variable"],
        vec![
            "monitor",
            fleet_spec.to_str().unwrap(),
            fleet.to_str().unwrap(),
            "--mode",
            "variable",
            "--max-instances",
            "offRoadPickUp=50",
            "--max-instances",
            "suspicious=50",
        ],
    ];
    for args in &runs {
        let first = cli(args);
        let second = cli(args);
        ensure!(first.code == 0, "{args:?}: exit {}", first.code);
        ensure!(first.stdout == second.stdout && first.stderr == second.stderr, "{args:?}: verdict streams differ");
    }

    let corpus: Vec<String> = std::fs::read_dir(specs_dir())
        .unwrap()
        .map(|entry| std::fs::read_to_string(entry.unwrap().path()).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inputs = 100_000;
    let mut accepted = 0;
    let started = Instant::now();
    for _ in 0..inputs {
        let source = random_source(&mut rng, &corpus);
        let result = catch_unwind(|| {
            let parsed = parser::parse(&source).is_ok();
            let typed = compile(&source).is_ok();
            if typed {
                let _ = compile(&source).map(|spec| analyze(&spec, &AnalysisOptions::default()));
            }
            parsed && typed
        });
        match result {
            Ok(ok) => accepted += usize::from(ok),
            Err(_) => return Err(format!("parser panicked on {source:?}")),
        }
    }
    Ok(format!("3 replays byte-identical, {inputs} fuzz inputs ({accepted} well-typed) in {:.1?}", started.elapsed()))
}

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let dir = tempfile::tempdir().expect("temporary directory");
    let dir = dir.path();
    let criteria: Vec<Criterion> = vec![
        ("analyzer ground truth", Box::new(analyzer_ground_truth)),
        ("memory table", Box::new(memory_table)),
        ("paning correctness", Box::new(paning_correctness)),
        ("runtime peak within static bound", Box::new(|| runtime_bound_bridge(dir))),
        ("end-to-end temperature monitor", Box::new(|| end_to_end_pid(dir))),
        ("parametrization and lifecycle", Box::new(|| parametrization_lifecycle(dir))),
        ("efficient binding", Box::new(|| efficient_binding(dir))),
        ("memory trend over frequency", Box::new(|| memory_trend(dir))),
        ("determinism and parser fuzz", Box::new(|| determinism_and_fuzz(dir))),
    ];
    let mut failures = 0;
    for (number, (name, criterion)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", number + 1),
            Err(reason) => {
                failures += 1;
                println!("FAIL {} {name}: {reason}", number + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
