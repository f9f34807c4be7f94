//! Static evaluation plan derived once from the specification and its analysis.

use crate::analysis::efficient::{binding_clauses, BindingClause};
use crate::analysis::{Analysis, EdgeLabel};
use crate::ast::{AccessKind, AggFn, StreamRef, TypedExpr, TypedSpecification, TypedTriggerKind};
use crate::time::{Frequency, Time};
use crate::value::ValueType;

/// When an output is considered for extension.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Pacing {
    /// On every tick of the clock with this index.
    Clock(usize),
    /// Whenever one of these vertices extends.
    Events(Vec<usize>),
}

#[derive(Debug, Clone)]
pub(crate) struct OutputPlan {
    pub vertex: usize,
    pub position: usize,
    pub pacing: Pacing,
    pub invoke_deps: Vec<usize>,
    pub terminate_deps: Vec<usize>,
    /// Clauses that pin every parameter; lets extension skip the instance scan.
    pub extend_lookup: Option<Vec<BindingClause>>,
    pub terminate_lookup: Option<Vec<BindingClause>>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct WindowGeometry {
    pub duration: Time,
    pub pane_width: Time,
    pub aggregation: AggFn,
    pub target_ty: ValueType,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Retention {
    /// Number of most recent values every instance keeps.
    pub keep_last: usize,
    /// Longest real-time offset into the stream.
    pub keep_span: Option<Time>,
    pub windows: Vec<WindowGeometry>,
}

#[derive(Debug, Clone)]
pub(crate) struct Plan {
    pub outputs: Vec<OutputPlan>,
    pub retention: Vec<Retention>,
    /// Per vertex: outputs to revisit once it extends.
    pub dependents: Vec<Vec<usize>>,
    /// Per trigger: vertices whose extension re-evaluates it.
    pub trigger_deps: Vec<Vec<usize>>,
    pub clocks: Vec<Frequency>,
    /// Per window: the target vertex and the window's slot within each target instance.
    pub window_slot: Vec<(usize, usize)>,
}

fn deps_of(spec: &TypedSpecification, expr: &TypedExpr, out: &mut Vec<usize>) {
    expr.visit_accesses(&mut |access| {
        let target = match access {
            AccessKind::Stream { target, .. } => target,
            AccessKind::Window(w) => spec.windows[w].target,
        };
        out.push(spec.vertex(target));
    });
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Clauses usable for direct lookup: every clause must bind every parameter.
fn lookup_clauses(expr: Option<&TypedExpr>, params: usize) -> Option<Vec<BindingClause>> {
    let clauses = binding_clauses(expr?)?;
    let complete = clauses.iter().all(|clause| (0..params).all(|p| clause.iter().any(|(q, _)| *q == p)));
    (params > 0 && complete).then_some(clauses)
}

impl Plan {
    pub(crate) fn new(spec: &TypedSpecification, analysis: &Analysis) -> Plan {
        let vertices = spec.stream_count();
        let graph = &analysis.graph;
        let mut position = vec![0; vertices];
        for (i, v) in graph.evaluation_order.iter().enumerate() {
            position[*v] = i;
        }

        let mut clocks: Vec<Frequency> = spec.outputs.iter().filter_map(|o| o.clock).collect();
        clocks.sort();
        clocks.dedup();

        let all_inputs: Vec<usize> = (0..spec.inputs.len()).collect();
        let mut outputs = Vec::with_capacity(spec.outputs.len());
        let mut dependents = vec![Vec::new(); vertices];
        for (o, out) in spec.outputs.iter().enumerate() {
            let vertex = spec.vertex(StreamRef::Output(o));
            let pacing = match out.clock {
                Some(freq) => Pacing::Clock(clocks.binary_search(&freq).unwrap_or(0)),
                None => {
                    let mut deps = Vec::new();
                    deps_of(spec, out.extend.as_ref().unwrap_or(&out.expr), &mut deps);
                    deps.retain(|d| *d != vertex);
                    let deps = sorted(deps);
                    Pacing::Events(if deps.is_empty() { all_inputs.clone() } else { deps })
                }
            };
            let mut invoke_deps = Vec::new();
            for arg in out.invoke.iter().flatten() {
                deps_of(spec, arg, &mut invoke_deps);
            }
            let mut terminate_deps = Vec::new();
            if let Some(t) = &out.terminate {
                deps_of(spec, t, &mut terminate_deps);
            }
            let (invoke_deps, terminate_deps) = (sorted(invoke_deps), sorted(terminate_deps));
            let mut wake: Vec<usize> = invoke_deps.iter().chain(&terminate_deps).copied().collect();
            if let Pacing::Events(deps) = &pacing {
                wake.extend(deps);
            }
            for d in sorted(wake) {
                dependents[d].push(o);
            }
            outputs.push(OutputPlan {
                vertex,
                position: position[vertex],
                pacing,
                invoke_deps,
                terminate_deps,
                extend_lookup: lookup_clauses(out.extend.as_ref(), out.params.len()),
                terminate_lookup: lookup_clauses(out.terminate.as_ref(), out.params.len()),
            });
        }

        let mut retention = vec![Retention { keep_last: 1, ..Retention::default() }; vertices];
        let labels = graph.edges.iter().map(|e| (e.to, e.label)).chain(graph.trigger_edges.iter().map(|e| (e.to, e.label)));
        for (to, label) in labels {
            let r = &mut retention[to];
            match label {
                EdgeLabel::DiscreteOffset(n) => r.keep_last = r.keep_last.max(n as usize + 1),
                EdgeLabel::RealTimeOffset(d) => {
                    let d = Time::from_rational_secs(&d);
                    r.keep_span = Some(r.keep_span.map_or(d, |cur| cur.max(d)));
                }
                EdgeLabel::Window { .. } => {}
            }
        }
        let mut window_slot = Vec::with_capacity(spec.windows.len());
        for w in &spec.windows {
            let target = spec.vertex(w.target);
            let slot = retention[target].windows.len();
            retention[target].windows.push(WindowGeometry {
                duration: Time::from_rational_secs(&w.duration),
                pane_width: Time::from_rational_secs(&analysis.pane_widths.get(w.id)).max(Time::from_nanos(1)),
                aggregation: w.aggregation,
                target_ty: w.target_ty,
            });
            window_slot.push((target, slot));
        }

        let trigger_deps = spec
            .triggers
            .iter()
            .map(|t| {
                let mut deps = Vec::new();
                match &t.kind {
                    TypedTriggerKind::Plain(cond) => deps_of(spec, cond, &mut deps),
                    TypedTriggerKind::Any { scope, cond } => {
                        deps.push(spec.vertex(StreamRef::Output(*scope)));
                        deps_of(spec, cond, &mut deps);
                    }
                    TypedTriggerKind::Count { target, .. } => deps.push(spec.vertex(StreamRef::Output(*target))),
                }
                sorted(deps)
            })
            .collect();

        Plan { outputs, retention, dependents, trigger_deps, clocks, window_slot }
    }
}
