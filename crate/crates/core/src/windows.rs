//! Paned sliding-window aggregation.
//!
//! Time is cut into panes of width `z` against the global origin. Pane `p`
//! covers the left-open interval `(p·z, (p+1)·z]`, so an instant `t` falls
//! into pane `⌈t/z⌉ − 1`. With this convention the window `(ts − r, ts]` is
//! an exact union of panes whenever `ts` and `r` are multiples of `z`.
//!
//! At an arbitrary instant the window is aligned to the pane grid: the panes
//! taken into account are those ending after `(⌈ts/z⌉·z) − r`. The oldest,
//! partially covered pane is therefore left out and at most `⌈r/z⌉` panes are
//! ever retained.

use std::collections::VecDeque;

use thiserror::Error;

use crate::ast::AggFn;
use crate::time::Time;
use crate::value::{Value, ValueType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WindowError {
    #[error("value registered at {ts} after a value at {last}")]
    OutOfOrder { last: Time, ts: Time },
    #[error("window duration and pane width must be positive")]
    InvalidGeometry,
    #[error("cannot aggregate a {found} value with {aggregation}")]
    TypeMismatch { aggregation: AggFn, found: ValueType },
}

/// Boundary samples and inner area of a piecewise-linear signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub first: (Time, f64),
    pub last: (Time, f64),
    /// Area in value·seconds between `first` and `last`.
    pub area: f64,
}

impl Trapezoid {
    fn point(ts: Time, v: f64) -> Trapezoid {
        Trapezoid { first: (ts, v), last: (ts, v), area: 0.0 }
    }

    fn bridge(from: (Time, f64), to: (Time, f64)) -> f64 {
        (to.0 - from.0).as_secs_f64() * (from.1 + to.1) / 2.0
    }

    /// Joins a summary with the summary of a later time range.
    fn join(self, later: Trapezoid) -> Trapezoid {
        Trapezoid {
            first: self.first,
            last: later.last,
            area: self.area + Trapezoid::bridge(self.last, later.first) + later.area,
        }
    }
}

/// Pre-aggregate of the values falling into one pane.
#[derive(Debug, Clone, PartialEq)]
pub enum PaneSummary {
    Count(u64),
    IntSum { sum: i64, saturated: bool },
    FloatSum(f64),
    IntAvg { sum: i128, count: u64 },
    FloatAvg { sum: f64, count: u64 },
    Min(Option<Value>),
    Max(Option<Value>),
    Integral(Option<Trapezoid>),
    /// Not homomorphic: every value is kept.
    Median(Vec<f64>),
}

impl PaneSummary {
    /// The neutral summary for `aggregation` over values of type `ty`.
    pub fn empty(aggregation: AggFn, ty: ValueType) -> PaneSummary {
        let int = ty == ValueType::Int;
        match aggregation {
            AggFn::Count => PaneSummary::Count(0),
            AggFn::Sum if int => PaneSummary::IntSum { sum: 0, saturated: false },
            AggFn::Sum => PaneSummary::FloatSum(0.0),
            AggFn::Avg if int => PaneSummary::IntAvg { sum: 0, count: 0 },
            AggFn::Avg => PaneSummary::FloatAvg { sum: 0.0, count: 0 },
            AggFn::Min => PaneSummary::Min(None),
            AggFn::Max => PaneSummary::Max(None),
            AggFn::Integral => PaneSummary::Integral(None),
            AggFn::Median => PaneSummary::Median(Vec::new()),
        }
    }

    /// Folds one value observed at `ts` into the summary. Returns true if an
    /// integer sum saturated.
    pub fn insert(&mut self, value: Value, ts: Time) -> bool {
        match self {
            PaneSummary::Count(n) => *n += 1,
            PaneSummary::IntSum { sum, saturated } => {
                let add = match value {
                    Value::Int(i) => i,
                    _ => 0,
                };
                match sum.checked_add(add) {
                    Some(s) => *sum = s,
                    None => {
                        *sum = sum.saturating_add(add);
                        *saturated = true;
                        return true;
                    }
                }
            }
            PaneSummary::FloatSum(sum) => *sum += value.as_f64().unwrap_or(0.0),
            PaneSummary::IntAvg { sum, count } => {
                if let Value::Int(i) = value {
                    *sum += i as i128;
                }
                *count += 1;
            }
            PaneSummary::FloatAvg { sum, count } => {
                *sum += value.as_f64().unwrap_or(0.0);
                *count += 1;
            }
            PaneSummary::Min(m) => {
                if m.is_none_or(|cur| value < cur) {
                    *m = Some(value);
                }
            }
            PaneSummary::Max(m) => {
                if m.is_none_or(|cur| value > cur) {
                    *m = Some(value);
                }
            }
            PaneSummary::Integral(t) => {
                let v = value.as_f64().unwrap_or(0.0);
                let point = Trapezoid::point(ts, v);
                *t = Some(match t.take() {
                    Some(prev) => prev.join(point),
                    None => point,
                });
            }
            PaneSummary::Median(values) => values.push(value.as_f64().unwrap_or(0.0)),
        }
        false
    }

    /// Combines this summary with the summary of a later, adjacent time range.
    pub fn combine(&self, later: &PaneSummary) -> PaneSummary {
        use PaneSummary::*;
        match (self, later) {
            (Count(a), Count(b)) => Count(a + b),
            (IntSum { sum: a, saturated: sa }, IntSum { sum: b, saturated: sb }) => {
                let (sum, overflow) = match a.checked_add(*b) {
                    Some(s) => (s, false),
                    None => (a.saturating_add(*b), true),
                };
                IntSum { sum, saturated: *sa || *sb || overflow }
            }
            (FloatSum(a), FloatSum(b)) => FloatSum(a + b),
            (IntAvg { sum: a, count: n }, IntAvg { sum: b, count: m }) => IntAvg { sum: a + b, count: n + m },
            (FloatAvg { sum: a, count: n }, FloatAvg { sum: b, count: m }) => FloatAvg { sum: a + b, count: n + m },
            (Min(a), Min(b)) => Min(match (a, b) {
                (Some(x), Some(y)) => Some(*x.min(y)),
                (x, None) => *x,
                (None, y) => *y,
            }),
            (Max(a), Max(b)) => Max(match (a, b) {
                (Some(x), Some(y)) => Some(*x.max(y)),
                (x, None) => *x,
                (None, y) => *y,
            }),
            (Integral(a), Integral(b)) => Integral(match (a, b) {
                (Some(x), Some(y)) => Some(x.join(*y)),
                (x, None) => *x,
                (None, y) => *y,
            }),
            (Median(a), Median(b)) => Median(a.iter().chain(b).copied().collect()),
            (a, _) => a.clone(),
        }
    }

    /// The aggregate value described by the summary; `None` means undefined.
    pub fn lower(&self) -> Option<Value> {
        match self {
            PaneSummary::Count(n) => Some(Value::Int(i64::try_from(*n).unwrap_or(i64::MAX))),
            PaneSummary::IntSum { sum, .. } => Some(Value::Int(*sum)),
            PaneSummary::FloatSum(sum) => Some(Value::Double(*sum)),
            PaneSummary::IntAvg { count: 0, .. } | PaneSummary::FloatAvg { count: 0, .. } => None,
            PaneSummary::IntAvg { sum, count } => {
                let avg = sum / *count as i128;
                Some(Value::Int(avg.clamp(i64::MIN as i128, i64::MAX as i128) as i64))
            }
            PaneSummary::FloatAvg { sum, count } => Some(Value::Double(sum / *count as f64)),
            PaneSummary::Min(m) | PaneSummary::Max(m) => *m,
            PaneSummary::Integral(t) => t.map(|t| Value::Double(t.area)),
            PaneSummary::Median(values) => median(values).map(Value::Double),
        }
    }

    /// Stored value-slots: one per pane for homomorphic summaries, one per value otherwise.
    pub fn slots(&self) -> usize {
        match self {
            PaneSummary::Median(values) => values.len(),
            PaneSummary::Count(_)
            | PaneSummary::IntSum { .. }
            | PaneSummary::FloatSum(_)
            | PaneSummary::IntAvg { .. }
            | PaneSummary::FloatAvg { .. }
            | PaneSummary::Min(_)
            | PaneSummary::Max(_)
            | PaneSummary::Integral(_) => 1,
        }
    }

    fn is_saturated(&self) -> bool {
        matches!(self, PaneSummary::IntSum { saturated: true, .. })
    }
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 { sorted[mid] } else { (sorted[mid - 1] + sorted[mid]) / 2.0 })
}

/// Result of registering a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Registered {
    /// An integer sum in this window overflowed and now saturates.
    pub saturated: bool,
}

/// A sliding window over one target stream instance.
#[derive(Debug, Clone)]
pub struct PanedWindow {
    duration: Time,
    pane_width: Time,
    aggregation: AggFn,
    target_ty: ValueType,
    panes: VecDeque<(i64, PaneSummary)>,
    last_ts: Option<Time>,
    slots: usize,
}

impl PanedWindow {
    pub fn new(duration: Time, pane_width: Time, aggregation: AggFn, target_ty: ValueType) -> Result<PanedWindow, WindowError> {
        if duration.nanos() <= 0 || pane_width.nanos() <= 0 {
            return Err(WindowError::InvalidGeometry);
        }
        if aggregation != AggFn::Count && !target_ty.is_numeric() {
            return Err(WindowError::TypeMismatch { aggregation, found: target_ty });
        }
        Ok(PanedWindow { duration, pane_width, aggregation, target_ty, panes: VecDeque::new(), last_ts: None, slots: 0 })
    }

    pub fn duration(&self) -> Time {
        self.duration
    }

    pub fn pane_width(&self) -> Time {
        self.pane_width
    }

    pub fn aggregation(&self) -> AggFn {
        self.aggregation
    }

    /// Index of the pane containing instant `ts`.
    pub fn pane_index(&self, ts: Time) -> i64 {
        (ts.nanos() - 1).div_euclid(self.pane_width.nanos())
    }

    /// Panes ending at or before this instant are outside the window evaluated at `ts`.
    fn horizon(&self, ts: Time) -> i128 {
        let z = self.pane_width.nanos() as i128;
        (self.pane_index(ts) as i128 + 1) * z - self.duration.nanos() as i128
    }

    fn in_window(&self, index: i64, horizon: i128) -> bool {
        (index as i128 + 1) * self.pane_width.nanos() as i128 > horizon
    }

    /// Folds `value` into its pane. Does not compute the window aggregate.
    pub fn register(&mut self, value: Value, ts: Time) -> Result<Registered, WindowError> {
        if let Some(last) = self.last_ts {
            if ts < last {
                return Err(WindowError::OutOfOrder { last, ts });
            }
        }
        let value = match self.aggregation {
            AggFn::Count => value,
            agg => value
                .coerce(self.target_ty)
                .filter(|v| v.ty().is_numeric())
                .ok_or(WindowError::TypeMismatch { aggregation: agg, found: value.ty() })?,
        };
        self.last_ts = Some(ts);
        self.evict(ts);
        let index = self.pane_index(ts);
        if self.panes.back().map(|(i, _)| *i) != Some(index) {
            let pane = PaneSummary::empty(self.aggregation, self.target_ty);
            self.slots += pane.slots();
            self.panes.push_back((index, pane));
        }
        let (_, summary) = self.panes.back_mut().expect("pane was just ensured");
        let before = summary.slots();
        let was_saturated = summary.is_saturated();
        let saturated = summary.insert(value, ts);
        self.slots = self.slots + summary.slots() - before;
        Ok(Registered { saturated: saturated && !was_saturated })
    }

    /// Drops every pane that lies entirely outside the window evaluated at `ts`.
    pub fn evict(&mut self, ts: Time) {
        let horizon = self.horizon(ts);
        while let Some((index, _)) = self.panes.front() {
            if self.in_window(*index, horizon) {
                break;
            }
            if let Some((_, pane)) = self.panes.pop_front() {
                self.slots -= pane.slots();
            }
        }
    }

    /// Evicts expired panes, then aggregates the window ending at `ts`.
    pub fn evaluate(&mut self, ts: Time) -> Option<Value> {
        self.evict(ts);
        self.peek(ts)
    }

    /// Aggregates the window ending at `ts` without modifying the window.
    pub fn peek(&self, ts: Time) -> Option<Value> {
        let horizon = self.horizon(ts);
        let newest = self.pane_index(ts);
        let combined = self
            .panes
            .iter()
            .filter(|(index, _)| *index <= newest && self.in_window(*index, horizon))
            .fold(PaneSummary::empty(self.aggregation, self.target_ty), |acc, (_, pane)| acc.combine(pane));
        combined.lower()
    }

    pub fn pane_count(&self) -> usize {
        self.panes.len()
    }

    pub fn retained_slots(&self) -> usize {
        self.slots
    }

    /// Indices of the retained panes, oldest first.
    pub fn pane_indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.panes.iter().map(|(i, _)| *i)
    }
}
