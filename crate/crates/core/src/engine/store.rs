//! Live stream instances and their retained history.

use std::collections::{HashMap, VecDeque};

use crate::time::Time;
use crate::value::Value;
use crate::windows::{PanedWindow, WindowError};

use super::plan::Retention;

/// Parameter values identifying an instance; empty for unparameterized streams.
pub type InstanceKey = Vec<Value>;

#[derive(Debug, Clone)]
pub(crate) struct Instance {
    pub history: VecDeque<(Time, Value)>,
    pub windows: Vec<PanedWindow>,
    /// Step in which the instance last extended.
    pub extended_at: u64,
}

impl Instance {
    fn new(retention: &Retention) -> Result<Instance, WindowError> {
        let windows = retention
            .windows
            .iter()
            .map(|g| PanedWindow::new(g.duration, g.pane_width, g.aggregation, g.target_ty))
            .collect::<Result<_, _>>()?;
        Ok(Instance { history: VecDeque::new(), windows, extended_at: 0 })
    }

    fn slots(&self) -> usize {
        self.history.len() + self.windows.iter().map(PanedWindow::retained_slots).sum::<usize>()
    }

    pub fn latest(&self) -> Option<Value> {
        self.history.back().map(|(_, v)| *v)
    }

    /// The value `n` extensions before the latest one.
    pub fn back(&self, n: usize) -> Option<Value> {
        let len = self.history.len();
        (n < len).then(|| self.history[len - 1 - n].1)
    }

    /// The latest value produced at or before `ts`.
    pub fn at_or_before(&self, ts: Time) -> Option<Value> {
        self.history.iter().rev().find(|(t, _)| *t <= ts).map(|(_, v)| *v)
    }
}

/// Outcome of extending one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct Extended {
    /// Some window over the instance saturated an integer sum.
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Store {
    streams: Vec<HashMap<InstanceKey, Instance>>,
    slots: usize,
    peak: usize,
}

impl Store {
    pub fn new(vertices: usize) -> Store {
        Store { streams: vec![HashMap::new(); vertices], slots: 0, peak: 0 }
    }

    pub fn get(&self, vertex: usize, key: &[Value]) -> Option<&Instance> {
        self.streams[vertex].get(key)
    }

    pub fn contains(&self, vertex: usize, key: &[Value]) -> bool {
        self.streams[vertex].contains_key(key)
    }

    pub fn len(&self, vertex: usize) -> usize {
        self.streams[vertex].len()
    }

    /// Creates the instance if it does not exist yet. Returns whether it was created.
    pub fn create(&mut self, vertex: usize, key: InstanceKey, retention: &Retention) -> Result<bool, WindowError> {
        if self.streams[vertex].contains_key(&key) {
            return Ok(false);
        }
        self.streams[vertex].insert(key, Instance::new(retention)?);
        Ok(true)
    }

    pub fn remove(&mut self, vertex: usize, key: &[Value]) -> bool {
        match self.streams[vertex].remove(key) {
            Some(instance) => {
                self.slots -= instance.slots();
                true
            }
            None => false,
        }
    }

    /// Keys of all live instances, sorted.
    pub fn keys(&self, vertex: usize) -> Vec<InstanceKey> {
        let mut keys: Vec<InstanceKey> = self.streams[vertex].keys().cloned().collect();
        keys.sort();
        keys
    }

    /// Appends `value` to the instance history, prunes what no access can reach
    /// any more, and feeds the instance's windows.
    pub fn extend(
        &mut self,
        vertex: usize,
        key: &[Value],
        ts: Time,
        value: Value,
        step: u64,
        retention: &Retention,
    ) -> Result<Extended, WindowError> {
        let Some(instance) = self.streams[vertex].get_mut(key) else { return Ok(Extended::default()) };
        let before = instance.slots();
        instance.history.push_back((ts, value));
        instance.extended_at = step;
        while instance.history.len() > retention.keep_last {
            let reachable = match retention.keep_span {
                None => false,
                Some(span) => instance.history[1].0 > ts - span,
            };
            if reachable {
                break;
            }
            instance.history.pop_front();
        }
        let mut outcome = Extended::default();
        for window in &mut instance.windows {
            outcome.saturated |= window.register(value, ts)?.saturated;
        }
        let after = instance.slots();
        self.slots = self.slots + after - before;
        self.peak = self.peak.max(self.slots);
        Ok(outcome)
    }

    /// Value-slots currently retained across all instances.
    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn peak_slots(&self) -> usize {
        self.peak
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn retention(keep_last: usize, keep_span: Option<i64>) -> Retention {
        Retention { keep_last, keep_span: keep_span.map(Time::from_secs), windows: Vec::new() }
    }

    #[test]
    fn discrete_retention_keeps_the_last_values() {
        let r = retention(3, None);
        let mut store = Store::new(1);
        store.create(0, vec![], &r).unwrap();
        for t in 1..=10 {
            store.extend(0, &[], Time::from_secs(t), Value::Int(t), t as u64, &r).unwrap();
        }
        let inst = store.get(0, &[]).unwrap();
        assert_eq!(inst.history.len(), 3);
        assert_eq!(inst.back(2), Some(Value::Int(8)));
        assert_eq!(inst.back(3), None);
        assert_eq!(store.slots(), 3);
        assert_eq!(store.peak_slots(), 3);
    }

    #[test]
    fn real_time_retention_keeps_the_answer_for_the_offset() {
        let r = retention(1, Some(2));
        let mut store = Store::new(1);
        store.create(0, vec![], &r).unwrap();
        for t in 1..=10 {
            store.extend(0, &[], Time::from_secs(t), Value::Int(t), t as u64, &r).unwrap();
        }
        let inst = store.get(0, &[]).unwrap();
        assert_eq!(inst.at_or_before(Time::from_secs(8)), Some(Value::Int(8)));
        assert_eq!(inst.history.len(), 3);
    }

    #[test]
    fn removing_an_instance_releases_its_slots() {
        let r = retention(2, None);
        let mut store = Store::new(1);
        store.create(0, vec![Value::Int(1)], &r).unwrap();
        store.extend(0, &[Value::Int(1)], Time::from_secs(1), Value::Int(0), 1, &r).unwrap();
        assert!(store.remove(0, &[Value::Int(1)]));
        assert_eq!(store.slots(), 0);
        assert_eq!(store.peak_slots(), 1);
    }
}
