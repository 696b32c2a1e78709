use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

/// Wraps an angle into (-pi, pi]. Values already in range are returned unchanged.
pub fn normalize_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Value {
    Bool(bool),
    Real(f64),
    /// Radians in (-pi, pi].
    Angle(f64),
    Point(Vec2),
    ObjectRef(u32),
}

impl Value {
    pub fn angle(a: f64) -> Value {
        Value::Angle(normalize_angle(a))
    }

    pub fn point(x: f64, y: f64) -> Value {
        Value::Point(Vec2::new(x, y))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Real(_) => "real",
            Value::Angle(_) => "angle",
            Value::Point(_) => "point",
            Value::ObjectRef(_) => "object",
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_point(&self) -> Option<Vec2> {
        match self {
            Value::Point(p) => Some(*p),
            _ => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_object(&self) -> Option<u32> {
        match self {
            Value::ObjectRef(id) => Some(*id),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Angle(a) => write!(f, "{a}rad"),
            Value::Point(p) => write!(f, "point({}, {})", p.x, p.y),
            Value::ObjectRef(id) => write!(f, "#{id}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((normalize_angle(-5.0 * PI) - PI).abs() < 1e-12);
        assert_eq!(normalize_angle(0.25), 0.25);
    }
}
