//! Exact time handling.
//!
//! Specification-level quantities (window durations, offsets, clock
//! frequencies) are kept as exact rationals in seconds or Hz. At runtime every
//! instant is an integer number of nanoseconds since the trace origin, so pane
//! boundaries and tick ties compare exactly.

use std::fmt;
use std::ops::{Add, Sub};

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// Exact rational number used for seconds and Hz.
pub type Rational = Ratio<i64>;

const NANOS_PER_SEC: i128 = 1_000_000_000;

/// An instant on the trace time axis, or a span between two instants, in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);

    pub const fn from_nanos(nanos: i64) -> Time {
        Time(nanos)
    }

    pub const fn nanos(self) -> i64 {
        self.0
    }

    pub fn from_secs(secs: i64) -> Time {
        Time(secs * NANOS_PER_SEC as i64)
    }

    /// Rounds to the nearest nanosecond.
    pub fn from_secs_f64(secs: f64) -> Time {
        Time((secs * 1e9).round() as i64)
    }

    /// Rounds to the nearest nanosecond; saturates on overflow.
    pub fn from_rational_secs(secs: &Rational) -> Time {
        let num = *secs.numer() as i128 * NANOS_PER_SEC;
        let den = *secs.denom() as i128;
        let rounded = div_round(num, den);
        Time(rounded.clamp(i64::MIN as i128, i64::MAX as i128) as i64)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0.saturating_add(rhs.0))
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0.saturating_sub(rhs.0))
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}s", self.as_secs_f64())
    }
}

impl Serialize for Time {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_secs_f64())
    }
}

fn div_round(num: i128, den: i128) -> i128 {
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    if num >= 0 {
        (2 * num + den) / (2 * den)
    } else {
        -((-2 * num + den) / (2 * den))
    }
}

/// A strictly positive clock frequency in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frequency(Rational);

impl Frequency {
    pub fn new(hz: Rational) -> Option<Frequency> {
        if hz.is_positive() {
            Some(Frequency(hz))
        } else {
            None
        }
    }

    pub fn from_hz(hz: i64) -> Frequency {
        Frequency::new(Rational::from_integer(hz)).expect("frequency must be positive")
    }

    pub fn hz(&self) -> Rational {
        self.0
    }

    pub fn hz_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Period in seconds.
    pub fn period(&self) -> Rational {
        self.0.recip()
    }

    /// Instant of the `k`-th tick, `k / hz` seconds after the origin.
    pub fn tick(&self, k: u64) -> Time {
        let num = k as i128 * NANOS_PER_SEC * *self.0.denom() as i128;
        let den = *self.0.numer() as i128;
        Time(div_round(num, den).min(i64::MAX as i128) as i64)
    }

    /// Index of the first tick strictly after `ts`.
    pub fn first_tick_after(&self, ts: Time) -> u64 {
        if ts.0 < 0 {
            return 1;
        }
        // estimate then correct for rounding
        let est = (ts.0 as i128 * *self.0.numer() as i128) / (NANOS_PER_SEC * *self.0.denom() as i128);
        let mut k = est.max(0) as u64;
        while k > 0 && self.tick(k) > ts {
            k -= 1;
        }
        while self.tick(k) <= ts {
            k += 1;
        }
        k.max(1)
    }
}

impl PartialOrd for Frequency {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frequency {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp(&other.0)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Hz", format_rational(&self.0))
    }
}

impl Serialize for Frequency {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.hz_f64())
    }
}

/// Parses an unsigned decimal literal (`12`, `0.016`, `8.`) exactly.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = digits.trim_start_matches('0');
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let denom = 10i64.checked_pow(frac_part.len() as u32)?;
    Some(Rational::new(numer, denom))
}

/// Parses a signed decimal into nanoseconds, exactly where the literal allows.
pub fn parse_decimal_secs(text: &str) -> Option<Time> {
    let text = text.trim();
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let secs: i128 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
    let mut nanos: i128 = 0;
    let mut scale: i128 = 100_000_000;
    let mut round_up = false;
    for (i, b) in frac_part.bytes().enumerate() {
        let d = (b - b'0') as i128;
        if i < 9 {
            nanos += d * scale;
            scale /= 10;
        } else if i == 9 {
            round_up = d >= 5;
        }
    }
    let total = secs.checked_mul(NANOS_PER_SEC)? + nanos + i128::from(round_up);
    let total = if negative { -total } else { total };
    i64::try_from(total).ok().map(Time::from_nanos)
}

/// Renders a rational as a finite decimal when possible, else as `n/d`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut den = *r.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while den % 2 == 0 {
        den /= 2;
        twos += 1;
    }
    while den % 5 == 0 {
        den /= 5;
        fives += 1;
    }
    if den != 1 {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let places = twos.max(fives);
    let scale = 10i128.pow(places);
    let scaled = *r.numer() as i128 * scale / *r.denom() as i128;
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.abs();
    let int = abs / scale;
    let frac = abs % scale;
    format!("{sign}{int}.{:0width$}", frac, width = places as usize)
}

/// Renders a duration in seconds using the `s` suffix.
pub fn format_duration(secs: &Rational) -> String {
    format!("{}s", format_rational(secs))
}

/// Ceiling of a non-negative rational as an integer.
pub fn ceil_to_u64(r: &Rational) -> u64 {
    if r.is_zero() || r.is_negative() {
        return 0;
    }
    r.ceil().to_integer() as u64
}
