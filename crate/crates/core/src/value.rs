//! Runtime values and their types.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// The value types a stream can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Bool,
    Int,
    Double,
}

impl ValueType {
    pub fn is_numeric(self) -> bool {
        matches!(self, ValueType::Int | ValueType::Double)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ValueType::Bool => "bool",
            ValueType::Int => "int",
            ValueType::Double => "double",
        }
    }

    /// Least common numeric type of two types, if any.
    pub fn join(self, other: ValueType) -> Option<ValueType> {
        match (self, other) {
            (a, b) if a == b => Some(a),
            (ValueType::Int, ValueType::Double) | (ValueType::Double, ValueType::Int) => Some(ValueType::Double),
            _ => None,
        }
    }

    /// Whether a value of `self` may be used where `target` is expected.
    pub fn coerces_to(self, target: ValueType) -> bool {
        self == target || (self == ValueType::Int && target == ValueType::Double)
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A single stream value.
///
/// Equality, ordering and hashing are total (doubles compare by
/// `f64::total_cmp`) so values can key instance maps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Double(f64),
}

impl Value {
    pub fn ty(&self) -> ValueType {
        match self {
            Value::Bool(_) => ValueType::Bool,
            Value::Int(_) => ValueType::Int,
            Value::Double(_) => ValueType::Double,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Double(d) => Some(*d),
            Value::Bool(_) => None,
        }
    }

    /// Converts to `ty` when the conversion is a permitted promotion.
    pub fn coerce(self, ty: ValueType) -> Option<Value> {
        match (self, ty) {
            (v, t) if v.ty() == t => Some(v),
            (Value::Int(i), ValueType::Double) => Some(Value::Double(i as f64)),
            _ => None,
        }
    }

    pub fn parse_as(text: &str, ty: ValueType) -> Option<Value> {
        let text = text.trim();
        match ty {
            ValueType::Bool => match text {
                "true" | "1" => Some(Value::Bool(true)),
                "false" | "0" => Some(Value::Bool(false)),
                _ => None,
            },
            ValueType::Int => text.parse().ok().map(Value::Int),
            ValueType::Double => text.parse::<f64>().ok().filter(|d| d.is_finite()).map(Value::Double),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Int(_) => 1,
            Value::Double(_) => 2,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Double(a), Value::Double(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Bool(b) => b.hash(state),
            Value::Int(i) => i.hash(state),
            Value::Double(d) => d.to_bits().hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Double(d) => {
                if d.is_finite() && d.fract() == 0.0 && d.abs() < 1e15 {
                    write!(f, "{d:.1}")
                } else {
                    write!(f, "{d}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn promotion_only_widens_int() {
        assert_eq!(Value::Int(2).coerce(ValueType::Double), Some(Value::Double(2.0)));
        assert_eq!(Value::Double(2.0).coerce(ValueType::Int), None);
        assert_eq!(Value::Bool(true).coerce(ValueType::Int), None);
    }

    #[test]
    fn ordering_is_total_across_types() {
        let mut v = vec![Value::Double(1.5), Value::Int(3), Value::Bool(true), Value::Int(-1)];
        v.sort();
        assert_eq!(v, vec![Value::Bool(true), Value::Int(-1), Value::Int(3), Value::Double(1.5)]);
    }

    #[test]
    fn doubles_render_with_a_fraction() {
        assert_eq!(Value::Double(20.0).to_string(), "20.0");
        assert_eq!(Value::Double(0.016).to_string(), "0.016");
    }
}
