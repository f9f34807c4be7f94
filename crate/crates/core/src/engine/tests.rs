use super::*;
use crate::analysis::tests::typed;

fn secs(s: i64) -> Time {
    Time::from_secs(s)
}

fn variable() -> MonitorConfig {
    MonitorConfig::new(Mode::Variable)
}

fn fixed(hz: i64) -> MonitorConfig {
    MonitorConfig::new(Mode::Fixed(Frequency::from_hz(hz)))
}

fn outputs_of<'a>(verdicts: &'a [Verdict], name: &str) -> Vec<(Time, &'a InstanceKey, Value)> {
    verdicts
        .iter()
        .filter_map(|v| match &v.kind {
            VerdictKind::OutputValue { stream, params, value } if stream == name => Some((v.ts, params, *value)),
            _ => None,
        })
        .collect()
}

fn trigger_times(verdicts: &[Verdict]) -> Vec<Time> {
    verdicts.iter().filter(|v| v.is_trigger()).map(|v| v.ts).collect()
}

const FLEET: &str = "
    input bool offRoad
    input bool pickUp
    input int CID
    input int retire
    output int offRoadPickUp<int cid>
      invoke: CID
      extend: cid = CID
      terminate: cid = retire
      := if offRoad & pickUp then 1 else 0
    output bool suspicious<int cid>
      invoke: CID
      extend: cid = CID
      terminate: cid = retire
      := offRoadPickUp(cid)[8h, sum]?0 > 5
    trigger any(suspicious)
";

fn fleet_event(ts: i64, car: i64, off_road: bool, pick_up: bool) -> Event {
    Event::new(secs(ts)).with(0, Value::Bool(off_road)).with(1, Value::Bool(pick_up)).with(2, Value::Int(car))
}

fn fleet_config() -> MonitorConfig {
    let mut config = variable();
    config.analysis.max_instances.insert("offRoadPickUp".into(), 100);
    config.analysis.max_instances.insert("suspicious".into(), 100);
    config
}

#[test]
fn variable_mode_evaluates_only_at_events() {
    let spec = typed("input int a\ninput int b\noutput int s := a + b?0");
    let events = [
        Event::new(secs(1)).with(0, Value::Int(1)),
        Event::new(secs(3)).with(1, Value::Int(5)),
        Event::new(secs(4)).with(0, Value::Int(2)).with(1, Value::Int(7)),
    ];
    let out = run(&spec, &events, &variable()).unwrap();
    let values: Vec<_> = outputs_of(&out.verdicts, "s").into_iter().map(|(t, _, v)| (t, v)).collect();
    assert_eq!(values, vec![(secs(1), Value::Int(1)), (secs(3), Value::Int(6)), (secs(4), Value::Int(9))]);
    assert_eq!(out.stats.events, 3);
    assert_eq!(out.stats.ticks, 0);
}

#[test]
fn fixed_mode_ticks_floor_of_duration_times_frequency() {
    let spec = typed("input double x\noutput double y := x[-1, 0.0]");
    let events: Vec<Event> = (0..=21).map(|k| Event::new(Time::from_nanos(k * 500_000_000)).with(0, Value::Double(k as f64))).collect();
    let out = run(&spec, &events, &fixed(2)).unwrap();
    let times: Vec<Time> = outputs_of(&out.verdicts, "y").into_iter().map(|(t, _, _)| t).collect();
    // trace lasts 10.5 s, so ticks k/2 for k = 1..=21
    assert_eq!(out.stats.ticks, 21);
    assert_eq!(times, (1..=21).map(|k| Time::from_nanos(k * 500_000_000)).collect::<Vec<_>>());
}

#[test]
fn ticks_run_before_the_event_at_the_same_instant() {
    let spec = typed("input int x\noutput int n: 1Hz := x[10s, count]");
    let events: Vec<Event> = (1..=3).map(|t| Event::new(secs(t)).with(0, Value::Int(t))).collect();
    let out = run(&spec, &events, &variable()).unwrap();
    let counts: Vec<Value> = outputs_of(&out.verdicts, "n").into_iter().map(|(_, _, v)| v).collect();
    assert_eq!(counts, vec![Value::Int(0), Value::Int(1), Value::Int(2)]);
}

#[test]
fn constant_inputs_never_trigger_and_a_persistent_offset_does() {
    let spec = typed(
        "input double sensor
         input double reference
         output double error := sensor[2sec, 0, avg] - reference[2sec, 0, avg]
         output double acc_error := error[10sec, 0, integral]
         trigger acc_error > 5",
    );
    let flat: Vec<Event> =
        (0..30).map(|t| Event::new(secs(t)).with(0, Value::Double(3.0)).with(1, Value::Double(3.0))).collect();
    let out = run(&spec, &flat, &fixed(1)).unwrap();
    assert!(trigger_times(&out.verdicts).is_empty());
    assert!(outputs_of(&out.verdicts, "acc_error").iter().all(|(_, _, v)| *v == Value::Double(0.0)));

    let offset: Vec<Event> =
        (0..30).map(|t| Event::new(secs(t)).with(0, Value::Double(4.0)).with(1, Value::Double(3.0))).collect();
    let out = run(&spec, &offset, &fixed(1)).unwrap();
    assert!(!trigger_times(&out.verdicts).is_empty());
}

#[test]
fn first_car_event_invokes_both_templates() {
    let spec = typed(FLEET);
    let mut monitor = Monitor::new(&spec, &fleet_config()).unwrap();
    monitor.process(&fleet_event(0, 7, false, false)).unwrap();
    assert_eq!(monitor.live_instances("offRoadPickUp"), 1);
    assert_eq!(monitor.live_instances("suspicious"), 1);
}

#[test]
fn six_pick_ups_within_eight_hours_trigger_with_the_car_as_witness() {
    let spec = typed(FLEET);
    let mut monitor = Monitor::new(&spec, &fleet_config()).unwrap();
    let mut fired = Vec::new();
    for k in 0..6 {
        monitor.process(&fleet_event(600 * k, 3, false, false)).unwrap();
        let verdicts = monitor.process(&fleet_event(600 * k + 1, 7, true, true)).unwrap();
        fired.extend(verdicts.into_iter().filter(Verdict::is_trigger));
    }
    assert_eq!(fired.len(), 1);
    assert_eq!(fired[0].ts, secs(3001));
    let VerdictKind::TriggerFired { witness, .. } = &fired[0].kind else { unreachable!() };
    assert_eq!(witness, &Some(("suspicious".to_string(), vec![Value::Int(7)])));
    assert_eq!(monitor.stats().instance_scans, 0);
}

#[test]
fn terminated_instances_disappear_and_come_back_fresh() {
    let spec = typed(FLEET);
    let mut monitor = Monitor::new(&spec, &fleet_config()).unwrap();
    for k in 0..5 {
        monitor.process(&fleet_event(k, 7, true, true)).unwrap();
    }
    monitor.process(&Event::new(secs(10)).with(3, Value::Int(7))).unwrap();
    assert_eq!(monitor.live_instances("suspicious"), 0);
    assert_eq!(monitor.current_slots(), 4);
    // a fresh instance starts counting from zero
    let verdicts = monitor.process(&fleet_event(11, 7, true, true)).unwrap();
    assert!(verdicts.iter().all(|v| !v.is_trigger()));
    assert_eq!(monitor.live_instances("suspicious"), 1);
}

#[test]
fn any_reports_the_lowest_satisfying_instance() {
    let spec = typed(
        "input int k
         input int v
         output int seen<int p> invoke: k := v
         trigger any(seen > 1)",
    );
    let mut config = variable();
    config.allow_unbounded = true;
    let mut monitor = Monitor::new(&spec, &config).unwrap();
    monitor.process(&Event::new(secs(1)).with(0, Value::Int(9))).unwrap();
    monitor.process(&Event::new(secs(2)).with(0, Value::Int(4))).unwrap();
    let verdicts = monitor.process(&Event::new(secs(3)).with(1, Value::Int(5))).unwrap();
    let witnesses: Vec<_> = verdicts
        .iter()
        .filter_map(|v| match &v.kind {
            VerdictKind::TriggerFired { witness, .. } => witness.clone(),
            _ => None,
        })
        .collect();
    assert_eq!(witnesses, vec![("seen".to_string(), vec![Value::Int(4)])]);
    // no extend condition: every instance was visited by a scan
    assert!(monitor.stats().instance_scans > 0);
}

#[test]
fn count_trigger_fires_when_the_instance_set_grows_past_the_bound() {
    let spec = typed(
        "input int k
         output int p<int a> invoke: k extend: a = k := a
         trigger count(p) > 2",
    );
    let mut config = variable();
    config.analysis.max_instances.insert("p".into(), 10);
    let out = run(&spec, &[1, 2, 2, 3, 4].map(|i| Event::new(secs(i)).with(0, Value::Int(i))), &config).unwrap();
    assert_eq!(trigger_times(&out.verdicts), vec![secs(3), secs(4)]);
}

#[test]
fn undefined_values_without_default_become_warnings() {
    let spec = typed("input int a\noutput int d := a - a[-1, 0]\noutput int e := a[-1]");
    let out = run(&spec, &[Event::new(secs(1)).with(0, Value::Int(3))], &variable()).unwrap();
    assert_eq!(outputs_of(&out.verdicts, "d").len(), 1);
    assert!(outputs_of(&out.verdicts, "e").is_empty());
    assert!(out
        .verdicts
        .iter()
        .any(|v| matches!(&v.kind, VerdictKind::Warning { stream, .. } if stream == "e")));
}

#[test]
fn discrete_history_never_exceeds_depth_plus_one() {
    let spec = typed("input int a\noutput int d := a[-2, 0]");
    let mut monitor = Monitor::new(&spec, &variable()).unwrap();
    for t in 0..50 {
        monitor.process(&Event::new(secs(t)).with(0, Value::Int(t))).unwrap();
        // three values of `a`, one of `d`
        assert!(monitor.current_slots() <= 4);
    }
    assert!(monitor.stats().peak_slots as u64 <= monitor.analysis().report.total.value().unwrap());
}

#[test]
fn ordering_and_unknown_inputs_are_errors() {
    let spec = typed("input int a\noutput int d := a");
    let mut monitor = Monitor::new(&spec, &variable()).unwrap();
    monitor.process(&Event::new(secs(5)).with(0, Value::Int(1))).unwrap();
    assert!(matches!(
        monitor.process(&Event::new(secs(4)).with(0, Value::Int(1))),
        Err(EngineError::OutOfOrderEvent { .. })
    ));
    assert!(matches!(monitor.input_index("b"), Err(EngineError::UnknownInputStream(_))));
    assert!(matches!(
        monitor.process(&Event::new(secs(6)).with(0, Value::Bool(true))),
        Err(EngineError::InputType { .. })
    ));
}

#[test]
fn unbounded_specs_are_refused_unless_allowed() {
    let spec = typed("input double a\ninput double b\noutput double diff := abs(a - b[-1sec, 0.0])");
    assert!(matches!(Monitor::new(&spec, &variable()), Err(EngineError::AnalysisRefusal { .. })));
    let mut config = variable();
    config.allow_unbounded = true;
    assert!(Monitor::new(&spec, &config).is_ok());
    // inputs stay variable-rate even when outputs are clocked
    assert!(Monitor::new(&spec, &fixed(1)).is_err());
}

#[test]
fn time_input_is_bound_from_the_event_timestamp() {
    let spec = typed("time input double timestamp\ninput int a\noutput double t := timestamp");
    let out = run(&spec, &[Event::new(Time::from_nanos(2_500_000_000)).with(1, Value::Int(0))], &variable()).unwrap();
    assert_eq!(outputs_of(&out.verdicts, "t")[0].2, Value::Double(2.5));
}

#[test]
fn verdict_records_are_single_json_lines() {
    let verdict = Verdict {
        ts: Time::from_nanos(1_500_000_000),
        kind: VerdictKind::OutputValue { stream: "x".into(), params: vec![Value::Int(3)], value: Value::Double(2.0) },
    };
    assert_eq!(verdict.to_json_line(), r#"{"ts":1.5,"kind":"output","stream":"x","params":[3],"value":2.0}"#);
    let trigger = Verdict {
        ts: Time::ZERO,
        kind: VerdictKind::TriggerFired { trigger: 0, message: "m".into(), witness: None },
    };
    assert_eq!(trigger.to_json_line(), r#"{"ts":0.0,"kind":"trigger","trigger":0,"stream":null,"params":[],"message":"m"}"#);
}
