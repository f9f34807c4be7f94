//! Static analysis: the annotated dependency graph, rates, efficiently bound
//! templates, pane widths and memory bounds.

pub mod efficient;
pub mod memory;

pub use efficient::{binding_clauses, classify_efficiently_bound, BindingClause};
pub use memory::{compute_memory, default_pane_widths, Bound, EdgeMemory, MemoryReport, PaneWidths, StreamMemory, WindowPanes};

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::ast::{AccessKind, AggFn, Offset, Owner, StreamRef, TypedExpr, TypedSpecification, TypedTriggerKind, WindowId};
use crate::time::{format_duration, Frequency, Rational};

/// Rate of a stream. `Var` is above every fixed rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rate {
    Fixed(Frequency),
    Var,
}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rate {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Rate::Var, Rate::Var) => Ordering::Equal,
            (Rate::Var, Rate::Fixed(_)) => Ordering::Greater,
            (Rate::Fixed(_), Rate::Var) => Ordering::Less,
            (Rate::Fixed(a), Rate::Fixed(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Var => f.write_str("Var"),
            Rate::Fixed(freq) => write!(f, "{freq}"),
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Annotation of a dependency edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    /// Access `n` extensions back; `0` is the current value.
    DiscreteOffset(u64),
    /// Access the value `d` seconds in the past.
    RealTimeOffset(Rational),
    Window { window: WindowId, aggregation: AggFn, duration: Rational },
}

impl EdgeLabel {
    /// Whether the consumer needs the target's value from the same instant.
    pub fn is_same_instant(&self) -> bool {
        matches!(self, EdgeLabel::DiscreteOffset(0) | EdgeLabel::Window { .. })
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::DiscreteOffset(n) => write!(f, "offset -{n}"),
            EdgeLabel::RealTimeOffset(d) => write!(f, "offset -{}", format_duration(d)),
            EdgeLabel::Window { aggregation, duration, .. } => write!(f, "window {} {aggregation}", format_duration(duration)),
        }
    }
}

/// Which part of a declaration an access occurs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeRole {
    Invoke,
    Extend,
    Terminate,
    Expression,
}

/// `from` accesses `to`. Vertices index inputs first, then outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub label: EdgeLabel,
    pub role: EdgeRole,
}

/// An access made by a trigger condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriggerEdge {
    pub trigger: usize,
    pub to: usize,
    pub label: EdgeLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub name: String,
    pub stream: StreamRef,
    pub rate: Rate,
    pub param_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDependencyGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub trigger_edges: Vec<TriggerEdge>,
    /// Vertices ordered so that every same-instant dependency comes first.
    pub evaluation_order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("dependency cycle without a past reference: {}", .streams.join(" -> "))]
    Cycle { streams: Vec<String> },
}

impl AnnotatedDependencyGraph {
    pub fn vertex_by_name(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }

    pub fn rate_of(&self, name: &str) -> Option<Rate> {
        self.vertex_by_name(name).map(|v| self.vertices[v].rate)
    }

    /// Rate at which a trigger is evaluated: the maximum over what it reads.
    pub fn trigger_rate(&self, trigger: usize) -> Rate {
        self.trigger_edges
            .iter()
            .filter(|e| e.trigger == trigger)
            .map(|e| self.vertices[e.to].rate)
            .max()
            .unwrap_or(Rate::Var)
    }

    /// Outgoing edges of `vertex`.
    pub fn dependencies(&self, vertex: usize) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.from == vertex)
    }
}

fn label_of(spec: &TypedSpecification, access: AccessKind) -> (StreamRef, EdgeLabel) {
    match access {
        AccessKind::Stream { target, offset: Offset::Discrete(n) } => (target, EdgeLabel::DiscreteOffset(n.unsigned_abs())),
        AccessKind::Stream { target, offset: Offset::RealTime(d) } => (target, EdgeLabel::RealTimeOffset(-d)),
        AccessKind::Window(id) => {
            let w = &spec.windows[id];
            (w.target, EdgeLabel::Window { window: id, aggregation: w.aggregation, duration: w.duration })
        }
    }
}

/// Every access in `expr` as a (target, label) pair.
pub fn accesses(spec: &TypedSpecification, expr: &TypedExpr) -> Vec<(StreamRef, EdgeLabel)> {
    let mut out = Vec::new();
    expr.visit_accesses(&mut |a| out.push(label_of(spec, a)));
    out
}

/// Builds the dependency graph and infers rates.
pub fn build_adg(spec: &TypedSpecification) -> Result<AnnotatedDependencyGraph, AnalysisError> {
    let n = spec.stream_count();
    let mut edges = Vec::new();
    for (o, output) in spec.outputs.iter().enumerate() {
        let from = spec.vertex(StreamRef::Output(o));
        let mut add = |expr: &TypedExpr, role: EdgeRole| {
            for (target, label) in accesses(spec, expr) {
                edges.push(Edge { from, to: spec.vertex(target), label, role });
            }
        };
        for e in output.invoke.iter().flatten() {
            add(e, EdgeRole::Invoke);
        }
        if let Some(e) = &output.extend {
            add(e, EdgeRole::Extend);
        }
        if let Some(e) = &output.terminate {
            add(e, EdgeRole::Terminate);
        }
        add(&output.expr, EdgeRole::Expression);
    }
    let mut trigger_edges = Vec::new();
    for (t, trigger) in spec.triggers.iter().enumerate() {
        let cond = match &trigger.kind {
            TypedTriggerKind::Plain(e) | TypedTriggerKind::Any { cond: e, .. } => Some(e),
            TypedTriggerKind::Count { .. } => None,
        };
        if let Some(cond) = cond {
            for (target, label) in accesses(spec, cond) {
                trigger_edges.push(TriggerEdge { trigger: t, to: spec.vertex(target), label });
            }
        }
        if let TypedTriggerKind::Any { scope, .. } | TypedTriggerKind::Count { target: scope, .. } = &trigger.kind {
            let to = spec.vertex(StreamRef::Output(*scope));
            if !trigger_edges.iter().any(|e| e.trigger == t && e.to == to) {
                trigger_edges.push(TriggerEdge { trigger: t, to, label: EdgeLabel::DiscreteOffset(0) });
            }
        }
    }

    let evaluation_order = topological_order(spec, n, &edges)?;
    let rates = infer_rates(spec, n, &edges);
    let vertices = (0..n)
        .map(|v| {
            let stream = spec.stream_at(v);
            Vertex {
                name: spec.stream_name(stream).to_string(),
                stream,
                rate: rates[v],
                param_count: spec.param_types(stream).len(),
            }
        })
        .collect();
    Ok(AnnotatedDependencyGraph { vertices, edges, trigger_edges, evaluation_order })
}

/// Least fixpoint of `π(v) = max{π(w) | (v, w) ∈ E}` with clocks and inputs fixed.
fn infer_rates(spec: &TypedSpecification, n: usize, edges: &[Edge]) -> Vec<Rate> {
    let mut rates: Vec<Option<Rate>> = (0..n)
        .map(|v| match spec.stream_at(v) {
            StreamRef::Input(_) => Some(Rate::Var),
            StreamRef::Output(o) => spec.outputs[o].clock.map(Rate::Fixed),
        })
        .collect();
    let derived: Vec<bool> = rates.iter().map(Option::is_none).collect();
    loop {
        let mut changed = false;
        for v in (0..n).filter(|v| derived[*v]) {
            let max = edges.iter().filter(|e| e.from == v).filter_map(|e| rates[e.to]).max();
            if max.is_some() && max > rates[v] {
                rates[v] = max;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // streams with no rated dependency are only ever driven by events
    rates.into_iter().map(|r| r.unwrap_or(Rate::Var)).collect()
}

fn topological_order(spec: &TypedSpecification, n: usize, edges: &[Edge]) -> Result<Vec<usize>, AnalysisError> {
    let mut indegree = vec![0usize; n];
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in edges.iter().filter(|e| e.label.is_same_instant()) {
        indegree[e.from] += 1;
        consumers[e.to].push(e.from);
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|v| indegree[*v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &c in &consumers[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // report one cycle among the remaining vertices
    let remaining: Vec<bool> = indegree.iter().map(|d| *d > 0).collect();
    let next: HashMap<usize, usize> = edges
        .iter()
        .filter(|e| e.label.is_same_instant() && remaining[e.from] && remaining[e.to])
        .map(|e| (e.from, e.to))
        .collect();
    let start = (0..n).find(|v| remaining[*v]).unwrap_or(0);
    let mut seen = vec![usize::MAX; n];
    let mut path = Vec::new();
    let mut v = start;
    while seen[v] == usize::MAX {
        seen[v] = path.len();
        path.push(v);
        match next.get(&v) {
            Some(&w) => v = w,
            None => break,
        }
    }
    let cycle_start = if seen[v] != usize::MAX { seen[v] } else { 0 };
    let mut streams: Vec<String> = path[cycle_start..].iter().map(|&v| spec.stream_name(spec.stream_at(v)).to_string()).collect();
    if let Some(first) = streams.first().cloned() {
        streams.push(first);
    }
    Err(AnalysisError::Cycle { streams })
}

/// Options for the static analysis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisOptions {
    /// Variable-rate consumers split each window into this many panes.
    pub pane_divisor: u32,
    /// User-supplied instance bounds per parameterized template.
    pub max_instances: HashMap<String, u64>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { pane_divisor: 256, max_instances: HashMap::new() }
    }
}

/// Everything the analysis produces for one specification.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub graph: AnnotatedDependencyGraph,
    pub pane_widths: PaneWidths,
    pub report: MemoryReport,
    /// Per output: whether its extend condition is efficiently bound.
    pub efficiently_bound: Vec<bool>,
}

pub fn analyze(spec: &TypedSpecification, options: &AnalysisOptions) -> Result<Analysis, AnalysisError> {
    let graph = build_adg(spec)?;
    let pane_widths = default_pane_widths(spec, &graph, options.pane_divisor);
    let report = compute_memory(spec, &graph, &pane_widths, &options.max_instances);
    let efficiently_bound = spec.outputs.iter().map(classify_efficiently_bound).collect();
    Ok(Analysis { graph, pane_widths, report, efficiently_bound })
}

/// The vertex a window's consumer is evaluated at, for pane sizing.
pub(crate) fn owner_rate(graph: &AnnotatedDependencyGraph, spec: &TypedSpecification, owner: Owner) -> Rate {
    match owner {
        Owner::Output(o) => graph.vertices[spec.vertex(StreamRef::Output(o))].rate,
        Owner::Trigger(t) => graph.trigger_rate(t),
    }
}
