//! Pane widths and memory bounds in value-slots.

use std::collections::HashMap;
use std::fmt::{self, Write};
use std::ops::{Add, Mul};

use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use super::{owner_rate, AnnotatedDependencyGraph, EdgeLabel, EdgeRole, Rate};
use crate::ast::{AggFn, Owner, StreamRef, TypedSpecification, WindowId};
use crate::time::{ceil_to_u64, format_duration, Rational};

/// A count of value-slots, or no bound at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    Bounded(u64),
    Unbounded,
}

impl Bound {
    pub fn is_bounded(self) -> bool {
        matches!(self, Bound::Bounded(_))
    }

    pub fn value(self) -> Option<u64> {
        match self {
            Bound::Bounded(n) => Some(n),
            Bound::Unbounded => None,
        }
    }
}

impl Add for Bound {
    type Output = Bound;
    fn add(self, rhs: Bound) -> Bound {
        match (self, rhs) {
            (Bound::Bounded(a), Bound::Bounded(b)) => Bound::Bounded(a.saturating_add(b)),
            _ => Bound::Unbounded,
        }
    }
}

impl Mul for Bound {
    type Output = Bound;
    fn mul(self, rhs: Bound) -> Bound {
        match (self, rhs) {
            (Bound::Bounded(a), Bound::Bounded(b)) => Bound::Bounded(a.saturating_mul(b)),
            _ => Bound::Unbounded,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Bounded(n) => write!(f, "{n}"),
            Bound::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Bound::Bounded(n) => serializer.serialize_u64(*n),
            Bound::Unbounded => serializer.serialize_str("unbounded"),
        }
    }
}

fn serialize_secs<S: Serializer>(secs: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_f64(secs.to_f64().unwrap_or(f64::NAN))
}

/// Pane width in seconds for every window expression, indexed by window id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaneWidths(pub Vec<Rational>);

impl PaneWidths {
    pub fn get(&self, window: WindowId) -> Rational {
        self.0[window]
    }
}

/// Pane width per window: one consumer period (capped at the window
/// duration) for fixed-rate consumers, `duration / divisor` otherwise.
pub fn default_pane_widths(spec: &TypedSpecification, graph: &AnnotatedDependencyGraph, divisor: u32) -> PaneWidths {
    let divisor = Rational::from_integer(i64::from(divisor.max(1)));
    PaneWidths(
        spec.windows
            .iter()
            .map(|w| match owner_rate(graph, spec, w.owner) {
                Rate::Fixed(freq) => freq.period().min(w.duration),
                Rate::Var => w.duration / divisor,
            })
            .collect(),
    )
}

/// Value-slots needed by one window over a target of rate `target_rate`.
pub fn window_memory(aggregation: AggFn, duration: Rational, pane_width: Rational, target_rate: Rate) -> Bound {
    let panes = if pane_width.is_zero() { Bound::Unbounded } else { Bound::Bounded(ceil_to_u64(&(duration / pane_width)).max(1)) };
    match (target_rate, aggregation.is_homomorphic()) {
        (Rate::Var, true) => panes,
        (Rate::Var, false) => Bound::Unbounded,
        (Rate::Fixed(freq), homomorphic) => {
            let values = Bound::Bounded(ceil_to_u64(&(duration * freq.hz())).max(1));
            if homomorphic {
                panes.min(values)
            } else {
                values
            }
        }
    }
}

/// Value-slots needed to answer an offset access into a target of rate `target_rate`.
pub fn offset_memory(label: EdgeLabel, target_rate: Rate) -> Bound {
    match (label, target_rate) {
        (EdgeLabel::DiscreteOffset(n), _) => Bound::Bounded(n.saturating_add(1)),
        (EdgeLabel::RealTimeOffset(_), Rate::Var) => Bound::Unbounded,
        (EdgeLabel::RealTimeOffset(d), Rate::Fixed(freq)) => Bound::Bounded(ceil_to_u64(&(d * freq.hz())).saturating_add(1)),
        (EdgeLabel::Window { .. }, _) => Bound::Bounded(1),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeMemory {
    pub from: String,
    pub to: String,
    pub label: String,
    pub role: Option<EdgeRole>,
    pub memory: Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamMemory {
    pub name: String,
    pub rate: Rate,
    /// Value-slots per instance.
    pub memory: Bound,
    /// Number of instances.
    pub instances: Bound,
    pub contribution: Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowPanes {
    pub window: WindowId,
    pub consumer: String,
    pub target: String,
    pub aggregation: AggFn,
    #[serde(serialize_with = "serialize_secs")]
    pub duration: Rational,
    #[serde(serialize_with = "serialize_secs")]
    pub pane_width: Rational,
    pub panes: u64,
    pub memory: Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryReport {
    pub streams: Vec<StreamMemory>,
    pub edges: Vec<EdgeMemory>,
    pub windows: Vec<WindowPanes>,
    pub total: Bound,
}

impl MemoryReport {
    pub fn stream(&self, name: &str) -> Option<&StreamMemory> {
        self.streams.iter().find(|s| s.name == name)
    }

    pub fn unbounded_edges(&self) -> impl Iterator<Item = &EdgeMemory> + '_ {
        self.edges.iter().filter(|e| !e.memory.is_bounded())
    }

    pub fn to_text(&self) -> String {
        let width = self.streams.iter().map(|s| s.name.len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = writeln!(out, "{:width$}  {:>10}  {:>10}  {:>10}  {:>12}", "stream", "rate", "memory", "instances", "contribution");
        for s in &self.streams {
            let _ = writeln!(
                out,
                "{:width$}  {:>10}  {:>10}  {:>10}  {:>12}",
                s.name,
                s.rate.to_string(),
                s.memory.to_string(),
                s.instances.to_string(),
                s.contribution.to_string()
            );
        }
        if !self.windows.is_empty() {
            out.push_str("windows:\n");
            for w in &self.windows {
                let _ = writeln!(
                    out,
                    "  {} reads {} over {} with {}: pane width {}, {} panes, {} slots",
                    w.consumer,
                    w.target,
                    format_duration(&w.duration),
                    w.aggregation,
                    format_duration(&w.pane_width),
                    w.panes,
                    w.memory
                );
            }
        }
        let unbounded: Vec<&EdgeMemory> = self.unbounded_edges().collect();
        if !unbounded.is_empty() {
            out.push_str("unbounded accesses:\n");
            for e in unbounded {
                let _ = writeln!(out, "  {} -> {} ({})", e.from, e.to, e.label);
            }
        }
        let _ = writeln!(out, "total: {}", self.total);
        out
    }
}

/// Sums per-stream memory times instance count.
pub fn compute_memory(
    spec: &TypedSpecification,
    graph: &AnnotatedDependencyGraph,
    pane_widths: &PaneWidths,
    max_instances: &HashMap<String, u64>,
) -> MemoryReport {
    let n = graph.vertices.len();
    let mut history = vec![Bound::Bounded(1); n];
    let mut windows_memory = vec![Bound::Bounded(0); n];
    let mut edges = Vec::new();

    let trigger_name = |t: usize| format!("trigger #{}", t + 1);
    let all_edges = graph
        .edges
        .iter()
        .map(|e| (graph.vertices[e.from].name.clone(), Some(e.role), e.to, e.label))
        .chain(graph.trigger_edges.iter().map(|e| (trigger_name(e.trigger), None, e.to, e.label)));
    for (from, role, to, label) in all_edges {
        let target_rate = graph.vertices[to].rate;
        let memory = match label {
            EdgeLabel::Window { window, aggregation, duration } => {
                window_memory(aggregation, duration, pane_widths.get(window), target_rate)
            }
            other => {
                let m = offset_memory(other, target_rate);
                history[to] = history[to].max(m);
                m
            }
        };
        edges.push(EdgeMemory { from, to: graph.vertices[to].name.clone(), label: label.to_string(), role, memory });
    }

    let mut windows = Vec::new();
    for w in &spec.windows {
        let to = spec.vertex(w.target);
        let z = pane_widths.get(w.id);
        let memory = window_memory(w.aggregation, w.duration, z, graph.vertices[to].rate);
        windows_memory[to] = windows_memory[to] + memory;
        let consumer = match w.owner {
            Owner::Output(o) => spec.outputs[o].name.clone(),
            Owner::Trigger(t) => trigger_name(t),
        };
        windows.push(WindowPanes {
            window: w.id,
            consumer,
            target: graph.vertices[to].name.clone(),
            aggregation: w.aggregation,
            duration: w.duration,
            pane_width: z,
            panes: if z.is_zero() { 0 } else { ceil_to_u64(&(w.duration / z)) },
            memory,
        });
    }

    let mut streams: Vec<StreamMemory> = graph
        .vertices
        .iter()
        .enumerate()
        .map(|(v, vertex)| {
            let memory = history[v] + windows_memory[v];
            let instances = match vertex.stream {
                StreamRef::Input(_) => Bound::Bounded(1),
                StreamRef::Output(_) if vertex.param_count == 0 => Bound::Bounded(1),
                StreamRef::Output(_) => max_instances.get(&vertex.name).map_or(Bound::Unbounded, |n| Bound::Bounded(*n)),
            };
            let contribution = if instances == Bound::Bounded(0) { Bound::Bounded(0) } else { memory * instances };
            StreamMemory { name: vertex.name.clone(), rate: vertex.rate, memory, instances, contribution }
        })
        .collect();
    let total = streams.iter().fold(Bound::Bounded(0), |acc, s| acc + s.contribution);

    streams.sort_by(|a, b| a.name.cmp(&b.name));
    edges.sort_by(|a, b| (&a.from, &a.to, &a.label).cmp(&(&b.from, &b.to, &b.label)));
    windows.sort_by(|a, b| {
        (&a.consumer, &a.target, a.duration, a.aggregation).cmp(&(&b.consumer, &b.target, b.duration, b.aggregation))
    });
    for (i, w) in windows.iter_mut().enumerate() {
        w.window = i;
    }
    MemoryReport { streams, edges, windows, total }
}
