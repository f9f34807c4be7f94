//! Online evaluation of a specification over a timestamped event trace.
//!
//! A monitor owns one store of stream instances. Each incoming event is one
//! step: input instances extend, dependent outputs are revisited in evaluation
//! order, triggers are checked, and finally instances whose terminate
//! condition holds are removed. Clocked outputs additionally extend on the
//! ticks of their clock; ticks that coincide with an event are processed
//! first, as a separate step.

mod eval;
mod plan;
mod store;

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{analyze, Analysis, AnalysisError, AnalysisOptions};
use crate::ast::{BinOp, StreamRef, TypedSpecification, TypedTriggerKind};
use crate::time::{Frequency, Time};
use crate::value::{Value, ValueType};
use crate::windows::WindowError;

use eval::Context;
use plan::{Pacing, Plan};
use store::Store;

pub use store::InstanceKey;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("event at {ts} arrives after an event at {last}")]
    OutOfOrderEvent { last: Time, ts: Time },
    #[error("negative timestamp {0}")]
    NegativeTimestamp(Time),
    #[error("unknown input stream `{0}`")]
    UnknownInputStream(String),
    #[error("input `{stream}` expects a {expected} value, got {found}")]
    InputType { stream: String, expected: ValueType, found: Value },
    #[error("memory is not statically bounded ({})", .reasons.join("; "))]
    AnalysisRefusal { reasons: Vec<String> },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Window(#[from] WindowError),
}

/// How unclocked outputs are paced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Unclocked outputs extend when their dependencies do.
    Variable,
    /// Every unclocked output is clocked at this frequency.
    Fixed(Frequency),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorConfig {
    pub mode: Mode,
    /// Run even if the analysis cannot bound memory.
    pub allow_unbounded: bool,
    pub analysis: AnalysisOptions,
}

impl MonitorConfig {
    pub fn new(mode: Mode) -> MonitorConfig {
        MonitorConfig { mode, allow_unbounded: false, analysis: AnalysisOptions::default() }
    }
}

/// Input values observed at one instant. Inputs are referred to by index.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub ts: Time,
    pub values: Vec<(usize, Value)>,
}

impl Event {
    pub fn new(ts: Time) -> Event {
        Event { ts, values: Vec::new() }
    }

    pub fn with(mut self, input: usize, value: Value) -> Event {
        self.values.push((input, value));
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VerdictKind {
    TriggerFired {
        trigger: usize,
        message: String,
        /// Scope template and parameters of the instance that satisfied an `any` trigger.
        witness: Option<(String, InstanceKey)>,
    },
    OutputValue { stream: String, params: InstanceKey, value: Value },
    Warning { stream: String, params: InstanceKey, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub ts: Time,
    pub kind: VerdictKind,
}

#[derive(Serialize)]
struct VerdictRecord<'a> {
    ts: Time,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    trigger: Option<usize>,
    stream: Option<&'a str>,
    params: &'a [Value],
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<&'a str>,
}

impl Verdict {
    pub fn is_trigger(&self) -> bool {
        matches!(self.kind, VerdictKind::TriggerFired { .. })
    }

    /// One JSON object on a single line.
    pub fn to_json_line(&self) -> String {
        let record = match &self.kind {
            VerdictKind::TriggerFired { trigger, message, witness } => VerdictRecord {
                ts: self.ts,
                kind: "trigger",
                trigger: Some(*trigger),
                stream: witness.as_ref().map(|(s, _)| s.as_str()),
                params: witness.as_ref().map_or(&[], |(_, p)| p.as_slice()),
                value: None,
                message: Some(message),
            },
            VerdictKind::OutputValue { stream, params, value } => VerdictRecord {
                ts: self.ts,
                kind: "output",
                trigger: None,
                stream: Some(stream),
                params,
                value: Some(*value),
                message: None,
            },
            VerdictKind::Warning { stream, params, message } => VerdictRecord {
                ts: self.ts,
                kind: "warning",
                trigger: None,
                stream: Some(stream),
                params,
                value: None,
                message: Some(message),
            },
        };
        serde_json::to_string(&record).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Stats {
    pub events: u64,
    pub ticks: u64,
    pub verdicts: u64,
    /// Full passes over the instances of a template.
    pub instance_scans: u64,
    pub peak_slots: usize,
}

pub struct Monitor {
    spec: TypedSpecification,
    analysis: Analysis,
    plan: Plan,
    store: Store,
    step: u64,
    now: Option<Time>,
    /// Per clock: index of the next tick to process.
    next_tick: Vec<u64>,
    stats: Stats,
}

impl Monitor {
    pub fn new(spec: &TypedSpecification, config: &MonitorConfig) -> Result<Monitor, EngineError> {
        let spec = match config.mode {
            Mode::Variable => spec.clone(),
            Mode::Fixed(freq) => spec.with_default_clock(freq),
        };
        let analysis = analyze(&spec, &config.analysis)?;
        if !analysis.report.total.is_bounded() && !config.allow_unbounded {
            return Err(EngineError::AnalysisRefusal { reasons: refusal_reasons(&analysis) });
        }
        let plan = Plan::new(&spec, &analysis);
        let mut store = Store::new(spec.stream_count());
        for i in 0..spec.inputs.len() {
            store.create(i, Vec::new(), &plan.retention[i])?;
        }
        for (o, out) in spec.outputs.iter().enumerate() {
            if out.params.is_empty() {
                let v = plan.outputs[o].vertex;
                store.create(v, Vec::new(), &plan.retention[v])?;
            }
        }
        let next_tick = vec![1; plan.clocks.len()];
        Ok(Monitor { spec, analysis, plan, store, step: 0, now: None, next_tick, stats: Stats::default() })
    }

    /// The specification as monitored, with default clocks applied.
    pub fn spec(&self) -> &TypedSpecification {
        &self.spec
    }

    pub fn analysis(&self) -> &Analysis {
        &self.analysis
    }

    pub fn input_index(&self, name: &str) -> Result<usize, EngineError> {
        self.spec.input_index(name).ok_or_else(|| EngineError::UnknownInputStream(name.to_string()))
    }

    pub fn stats(&self) -> Stats {
        Stats { peak_slots: self.store.peak_slots(), ..self.stats }
    }

    /// Value-slots currently retained.
    pub fn current_slots(&self) -> usize {
        self.store.slots()
    }

    /// Number of live instances of a stream.
    pub fn live_instances(&self, name: &str) -> usize {
        let stream = match (self.spec.input_index(name), self.spec.output_index(name)) {
            (Some(i), _) => StreamRef::Input(i),
            (_, Some(o)) => StreamRef::Output(o),
            _ => return 0,
        };
        self.store.len(self.spec.vertex(stream))
    }

    fn check_time(&self, ts: Time) -> Result<(), EngineError> {
        if ts.is_negative() {
            return Err(EngineError::NegativeTimestamp(ts));
        }
        match self.now {
            Some(last) if ts < last => Err(EngineError::OutOfOrderEvent { last, ts }),
            _ => Ok(()),
        }
    }

    /// Processes all clock ticks up to and including `ts`.
    pub fn advance_to(&mut self, ts: Time) -> Result<Vec<Verdict>, EngineError> {
        self.check_time(ts)?;
        let mut verdicts = Vec::new();
        loop {
            let ticks: Vec<Time> =
                self.plan.clocks.iter().zip(&self.next_tick).map(|(clock, k)| clock.tick(*k)).collect();
            let Some(&next) = ticks.iter().min() else { break };
            if next > ts {
                break;
            }
            let due: Vec<bool> = ticks.iter().map(|t| *t == next).collect();
            for (k, d) in self.next_tick.iter_mut().zip(&due) {
                if *d {
                    *k += 1;
                }
            }
            self.stats.ticks += 1;
            verdicts.extend(self.step(next, &[], &due)?);
        }
        self.now = Some(ts);
        Ok(verdicts)
    }

    /// Processes the ticks up to the event, then the event itself.
    pub fn process(&mut self, event: &Event) -> Result<Vec<Verdict>, EngineError> {
        let mut verdicts = self.advance_to(event.ts)?;
        verdicts.extend(self.event_step(event)?);
        Ok(verdicts)
    }

    /// Processes one event without running any clock ticks.
    pub fn event_step(&mut self, event: &Event) -> Result<Vec<Verdict>, EngineError> {
        self.check_time(event.ts)?;
        self.now = Some(event.ts);
        if event.values.is_empty() {
            return Ok(Vec::new());
        }
        let mut slots: Vec<Option<Value>> = vec![None; self.spec.inputs.len()];
        for (i, value) in &event.values {
            let input = self.spec.inputs.get(*i).ok_or_else(|| EngineError::UnknownInputStream(format!("#{i}")))?;
            let coerced = value.coerce(input.ty).ok_or_else(|| EngineError::InputType {
                stream: input.name.clone(),
                expected: input.ty,
                found: *value,
            })?;
            slots[*i] = Some(coerced);
        }
        for (slot, input) in slots.iter_mut().zip(&self.spec.inputs) {
            if input.is_time && slot.is_none() {
                *slot = Some(match input.ty {
                    ValueType::Int => Value::Int(event.ts.nanos().div_euclid(1_000_000_000)),
                    _ => Value::Double(event.ts.as_secs_f64()),
                });
            }
        }
        let values: Vec<(usize, Value)> = slots.into_iter().enumerate().filter_map(|(i, v)| Some((i, v?))).collect();
        self.stats.events += 1;
        self.step(event.ts, &values, &vec![false; self.plan.clocks.len()])
    }

    fn step(&mut self, ts: Time, inputs: &[(usize, Value)], due: &[bool]) -> Result<Vec<Verdict>, EngineError> {
        self.step += 1;
        let step = self.step;
        let mut run = StepState {
            ts,
            step,
            due: due.to_vec(),
            touched: vec![false; self.spec.stream_count()],
            extended: vec![Vec::new(); self.spec.outputs.len()],
            changed: vec![false; self.spec.outputs.len()],
            verdicts: Vec::new(),
        };
        for (i, value) in inputs {
            self.store.extend(*i, &[], ts, *value, step, &self.plan.retention[*i])?;
            run.touched[*i] = true;
        }

        let mut work: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut visited = vec![false; self.spec.outputs.len()];
        for (i, _) in inputs {
            for &o in &self.plan.dependents[*i] {
                work.insert((self.plan.outputs[o].position, o));
            }
        }
        for (o, op) in self.plan.outputs.iter().enumerate() {
            if matches!(op.pacing, Pacing::Clock(c) if due[c]) {
                work.insert((op.position, o));
            }
        }
        while let Some((_, o)) = work.pop_first() {
            if std::mem::replace(&mut visited[o], true) {
                continue;
            }
            self.visit(o, &mut run)?;
            let vertex = self.plan.outputs[o].vertex;
            if run.touched[vertex] {
                for &d in &self.plan.dependents[vertex] {
                    if !visited[d] {
                        work.insert((self.plan.outputs[d].position, d));
                    }
                }
            }
        }

        self.check_triggers(&mut run, false);
        self.terminate(&mut run);
        self.check_triggers(&mut run, true);

        self.stats.verdicts += run.verdicts.len() as u64;
        Ok(run.verdicts)
    }

    fn context(&self, ts: Time) -> Context<'_> {
        Context { spec: &self.spec, plan: &self.plan, store: &self.store, ts }
    }

    /// Current values of the inputs named by each clause, as complete instance keys.
    fn lookup_keys(&self, clauses: &[Vec<(usize, usize)>], types: &[ValueType]) -> Vec<InstanceKey> {
        let mut keys = Vec::new();
        'clauses: for clause in clauses {
            let mut key: Vec<Option<Value>> = vec![None; types.len()];
            for &(param, input) in clause {
                let Some(v) = self.store.get(input, &[]).and_then(|i| i.latest()).and_then(|v| v.coerce(types[param]))
                else {
                    continue 'clauses;
                };
                match key[param] {
                    Some(existing) if existing != v => continue 'clauses,
                    _ => key[param] = Some(v),
                }
            }
            if let Some(key) = key.into_iter().collect::<Option<Vec<_>>>() {
                keys.push(key);
            }
        }
        keys.sort();
        keys.dedup();
        keys
    }

    fn visit(&mut self, o: usize, run: &mut StepState) -> Result<(), EngineError> {
        let out = &self.spec.outputs[o];
        let op = &self.plan.outputs[o];
        let vertex = op.vertex;
        let retention = &self.plan.retention[vertex];

        if let Some(invoke) = &out.invoke {
            if op.invoke_deps.iter().any(|d| run.touched[*d]) {
                let ctx = self.context(run.ts);
                let key: Option<InstanceKey> =
                    invoke.iter().zip(&out.params).map(|(e, (_, ty))| ctx.eval(e, &[])?.coerce(*ty)).collect();
                if let Some(key) = key {
                    run.changed[o] |= self.store.create(vertex, key, retention)?;
                }
            }
        }

        let due = match &op.pacing {
            Pacing::Clock(c) => run.due[*c],
            Pacing::Events(deps) => deps.iter().any(|d| run.touched[*d]),
        };
        if !due {
            return Ok(());
        }

        let candidates = if out.params.is_empty() {
            vec![Vec::new()]
        } else if let Some(clauses) = &op.extend_lookup {
            let types: Vec<ValueType> = out.params.iter().map(|(_, t)| *t).collect();
            self.lookup_keys(clauses, &types)
        } else {
            self.stats.instance_scans += 1;
            self.store.keys(vertex)
        };

        for key in candidates {
            let ctx = self.context(run.ts);
            match self.store.get(vertex, &key) {
                Some(instance) if instance.extended_at != run.step => {}
                _ => continue,
            }
            if let Some(extend) = &out.extend {
                if ctx.eval_bool(extend, &key) != Some(true) {
                    continue;
                }
            }
            let Some(value) = ctx.eval(&out.expr, &key) else {
                run.verdicts.push(Verdict {
                    ts: run.ts,
                    kind: VerdictKind::Warning {
                        stream: out.name.clone(),
                        params: key,
                        message: "value is undefined and no default is given".to_string(),
                    },
                });
                continue;
            };
            let outcome = self.store.extend(vertex, &key, run.ts, value, run.step, retention)?;
            run.touched[vertex] = true;
            run.verdicts.push(Verdict {
                ts: run.ts,
                kind: VerdictKind::OutputValue { stream: out.name.clone(), params: key.clone(), value },
            });
            if outcome.saturated {
                run.verdicts.push(Verdict {
                    ts: run.ts,
                    kind: VerdictKind::Warning {
                        stream: out.name.clone(),
                        params: key.clone(),
                        message: "integer sum in a window over this stream saturated".to_string(),
                    },
                });
            }
            run.extended[o].push(key);
        }
        Ok(())
    }

    /// Checks `count` triggers if `counting`, all other triggers otherwise.
    fn check_triggers(&mut self, run: &mut StepState, counting: bool) {
        for (t, trigger) in self.spec.triggers.iter().enumerate() {
            let woken = self.plan.trigger_deps[t].iter().any(|d| run.touched[*d]);
            let fired = match (&trigger.kind, counting) {
                (TypedTriggerKind::Plain(cond), false) => {
                    (woken && self.context(run.ts).eval_bool(cond, &[]) == Some(true)).then_some(None)
                }
                (TypedTriggerKind::Any { scope, cond }, false) => {
                    let scope_vertex = self.plan.outputs[*scope].vertex;
                    let keys = if run.touched[scope_vertex] {
                        let mut keys = run.extended[*scope].clone();
                        keys.sort();
                        keys
                    } else if woken {
                        if !self.spec.outputs[*scope].params.is_empty() {
                            self.stats.instance_scans += 1;
                        }
                        self.store.keys(scope_vertex)
                    } else {
                        Vec::new()
                    };
                    let ctx = self.context(run.ts);
                    keys.into_iter()
                        .find(|key| ctx.eval_bool(cond, key) == Some(true))
                        .map(|key| Some((self.spec.outputs[*scope].name.clone(), key)))
                }
                (TypedTriggerKind::Count { target, cmp, bound }, true) => {
                    let live = self.store.len(self.plan.outputs[*target].vertex) as i64;
                    (run.changed[*target] && compare(*cmp, live, *bound)).then_some(None)
                }
                _ => None,
            };
            if let Some(witness) = fired {
                run.verdicts.push(Verdict {
                    ts: run.ts,
                    kind: VerdictKind::TriggerFired { trigger: t, message: trigger.message.clone(), witness },
                });
            }
        }
    }

    fn terminate(&mut self, run: &mut StepState) {
        for (o, out) in self.spec.outputs.iter().enumerate() {
            let op = &self.plan.outputs[o];
            let Some(terminate) = &out.terminate else { continue };
            if out.params.is_empty() || !op.terminate_deps.iter().any(|d| run.touched[*d]) {
                continue;
            }
            let candidates = match &op.terminate_lookup {
                Some(clauses) => {
                    let types: Vec<ValueType> = out.params.iter().map(|(_, t)| *t).collect();
                    self.lookup_keys(clauses, &types)
                }
                None => {
                    self.stats.instance_scans += 1;
                    self.store.keys(op.vertex)
                }
            };
            let ctx = self.context(run.ts);
            let doomed: Vec<InstanceKey> = candidates
                .into_iter()
                .filter(|key| self.store.contains(op.vertex, key) && ctx.eval_bool(terminate, key) == Some(true))
                .collect();
            for key in doomed {
                run.changed[o] |= self.store.remove(op.vertex, &key);
            }
        }
    }
}

struct StepState {
    ts: Time,
    step: u64,
    /// Per clock: whether this step is one of its ticks.
    due: Vec<bool>,
    touched: Vec<bool>,
    /// Per output: instances extended in this step, in extension order.
    extended: Vec<Vec<InstanceKey>>,
    /// Per output: whether the instance set changed in this step.
    changed: Vec<bool>,
    verdicts: Vec<Verdict>,
}

fn compare(op: BinOp, lhs: i64, rhs: i64) -> bool {
    match op {
        BinOp::Eq => lhs == rhs,
        BinOp::Ne => lhs != rhs,
        BinOp::Lt => lhs < rhs,
        BinOp::Le => lhs <= rhs,
        BinOp::Gt => lhs > rhs,
        BinOp::Ge => lhs >= rhs,
        _ => false,
    }
}

fn refusal_reasons(analysis: &Analysis) -> Vec<String> {
    let report = &analysis.report;
    let mut reasons: Vec<String> =
        report.unbounded_edges().map(|e| format!("{} -> {} ({}) needs unbounded memory", e.from, e.to, e.label)).collect();
    reasons.extend(
        report
            .streams
            .iter()
            .filter(|s| !s.instances.is_bounded())
            .map(|s| format!("`{}` may have unboundedly many instances", s.name)),
    );
    reasons
}

/// Result of monitoring a whole trace.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub verdicts: Vec<Verdict>,
    pub stats: Stats,
}

/// Monitors `events` from start to end. Clock ticks run up to the last event.
pub fn run<'a>(
    spec: &TypedSpecification,
    events: impl IntoIterator<Item = &'a Event>,
    config: &MonitorConfig,
) -> Result<RunOutput, EngineError> {
    let mut monitor = Monitor::new(spec, config)?;
    let mut verdicts = Vec::new();
    for event in events {
        verdicts.extend(monitor.process(event)?);
    }
    Ok(RunOutput { verdicts, stats: monitor.stats() })
}

#[cfg(test)]
mod tests;
