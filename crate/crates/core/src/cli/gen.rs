//! Seeded synthetic traces.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot write trace: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write trace: {0}")]
    Io(#[from] std::io::Error),
}

/// A temperature loop whose measurement is knocked off the reference once
/// and then decays back.
#[derive(Debug, Clone, PartialEq)]
pub struct PidScenario {
    /// Seconds; one row per second.
    pub duration: u64,
    pub reference: f64,
    /// Instant of the disturbance, in seconds.
    pub disturbance_at: u64,
    /// Height of the disturbance step.
    pub disturbance: f64,
    /// Time constant of the decay back to the reference, in seconds.
    pub recovery: f64,
    /// Half-width of the uniform measurement noise.
    pub noise: f64,
}

impl Default for PidScenario {
    fn default() -> Self {
        PidScenario { duration: 400, reference: 20.0, disturbance_at: 200, disturbance: 0.5, recovery: 20.0, noise: 0.01 }
    }
}

/// Cars reporting position and passenger events.
#[derive(Debug, Clone, PartialEq)]
pub struct FleetScenario {
    pub cars: u64,
    pub events: u64,
    /// Seconds.
    pub duration: u64,
    /// Probability that an event is an off-road pick-up.
    pub misbehavior: f64,
    /// Car that additionally makes six off-road pick-ups within one hour.
    pub force_car: Option<i64>,
    /// Car retired halfway through the trace; it reports nothing afterwards.
    pub retire: Option<i64>,
}

impl Default for FleetScenario {
    fn default() -> Self {
        FleetScenario { cars: 50, events: 5000, duration: 86_400, misbehavior: 0.002, force_car: None, retire: None }
    }
}

fn fmt_millis(ms: u64) -> String {
    format!("{}.{:03}", ms / 1000, ms % 1000)
}

pub fn generate_pid(scenario: &PidScenario, seed: u64, out: impl Write) -> Result<(), GenError> {
    if scenario.duration == 0 {
        return Err(GenError::InvalidParameter("duration must be positive".into()));
    }
    if !(scenario.noise >= 0.0 && scenario.recovery > 0.0 && scenario.disturbance.is_finite() && scenario.reference.is_finite()) {
        return Err(GenError::InvalidParameter("noise must be non-negative and recovery positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["time", "temperature", "reference"])?;
    for t in 1..=scenario.duration {
        let offset = if t >= scenario.disturbance_at {
            scenario.disturbance * (-((t - scenario.disturbance_at) as f64) / scenario.recovery).exp()
        } else {
            0.0
        };
        let noise = if scenario.noise > 0.0 { rng.gen_range(-scenario.noise..=scenario.noise) } else { 0.0 };
        let temperature = scenario.reference + offset + noise;
        writer.write_record([t.to_string(), format!("{temperature:.4}"), format!("{:.4}", scenario.reference)])?;
    }
    writer.flush()?;
    Ok(())
}

struct FleetRow {
    ms: u64,
    car: Option<i64>,
    off_road: bool,
    pick_up: bool,
    retire: Option<i64>,
}

pub fn generate_fleet(scenario: &FleetScenario, seed: u64, out: impl Write) -> Result<(), GenError> {
    if scenario.cars == 0 || scenario.duration == 0 {
        return Err(GenError::InvalidParameter("cars and duration must be positive".into()));
    }
    if !(0.0..=1.0).contains(&scenario.misbehavior) {
        return Err(GenError::InvalidParameter("misbehavior rate must lie in [0, 1]".into()));
    }
    let in_fleet = |car: i64| car >= 0 && (car as u64) < scenario.cars;
    for car in [scenario.force_car, scenario.retire].into_iter().flatten() {
        if !in_fleet(car) {
            return Err(GenError::InvalidParameter(format!("car {car} is not in the fleet")));
        }
    }
    let duration_ms = scenario.duration * 1000;
    let retire_ms = duration_ms / 2;
    // six forced pick-ups ten minutes apart, starting a quarter into the trace
    let forced_ms = |k: u64| duration_ms / 4 + k * 600_000;
    if scenario.force_car.is_some() && forced_ms(5) > duration_ms {
        return Err(GenError::InvalidParameter("duration too short for the forced pick-ups".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for _ in 0..scenario.events {
        let ms = rng.gen_range(1..=duration_ms);
        let car = rng.gen_range(0..scenario.cars) as i64;
        let misbehaves = rng.gen_bool(scenario.misbehavior);
        let (off_road, pick_up) = if misbehaves {
            (true, true)
        } else if rng.gen_bool(0.5) {
            (rng.gen_bool(0.2), false)
        } else {
            (false, rng.gen_bool(0.3))
        };
        if scenario.retire == Some(car) && ms >= retire_ms {
            continue;
        }
        rows.push(FleetRow { ms, car: Some(car), off_road, pick_up, retire: None });
    }
    if let Some(car) = scenario.force_car {
        for k in 0..6 {
            let ms = forced_ms(k);
            if scenario.retire == Some(car) && ms >= retire_ms {
                continue;
            }
            rows.push(FleetRow { ms, car: Some(car), off_road: true, pick_up: true, retire: None });
        }
    }
    if let Some(car) = scenario.retire {
        rows.push(FleetRow { ms: retire_ms, car: None, off_road: false, pick_up: false, retire: Some(car) });
    }
    rows.sort_by_key(|r| r.ms);

    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["time", "offRoad", "pickUp", "CID", "retire"])?;
    for row in rows {
        let record = match (row.car, row.retire) {
            (Some(car), _) => [fmt_millis(row.ms), row.off_road.to_string(), row.pick_up.to_string(), car.to_string(), String::new()],
            (None, Some(car)) => [fmt_millis(row.ms), String::new(), String::new(), String::new(), car.to_string()],
            (None, None) => continue,
        };
        writer.write_record(record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pid(seed: u64) -> String {
        let mut out = Vec::new();
        generate_pid(&PidScenario::default(), seed, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    fn fleet(scenario: &FleetScenario, seed: u64) -> String {
        let mut out = Vec::new();
        generate_fleet(scenario, seed, &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn same_seed_same_bytes() {
        assert_eq!(pid(1), pid(1));
        assert_ne!(pid(1), pid(2));
        let scenario = FleetScenario::default();
        assert_eq!(fleet(&scenario, 5), fleet(&scenario, 5));
    }

    #[test]
    fn pid_has_one_row_per_second() {
        assert_eq!(pid(1).lines().count(), 401);
    }

    #[test]
    fn retired_car_goes_quiet() {
        let scenario = FleetScenario { retire: Some(3), force_car: Some(3), ..FleetScenario::default() };
        let text = fleet(&scenario, 9);
        let retire_line = text.lines().position(|l| l.ends_with(",3") && l.contains(",,,")).unwrap();
        assert!(text.lines().skip(retire_line + 1).all(|l| l.split(',').nth(3) != Some("3")));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let bad = FleetScenario { misbehavior: 1.5, ..FleetScenario::default() };
        assert!(matches!(generate_fleet(&bad, 0, Vec::new()), Err(GenError::InvalidParameter(_))));
        let bad = FleetScenario { force_car: Some(50), ..FleetScenario::default() };
        assert!(generate_fleet(&bad, 0, Vec::new()).is_err());
        let bad = PidScenario { duration: 0, ..PidScenario::default() };
        assert!(generate_pid(&bad, 0, Vec::new()).is_err());
    }
}
