use std::collections::BTreeMap;

use crate::geom::Vec2;
use crate::lang::{parse_expr, Expr};
use crate::runtime::{normalize_angle, Definition, EnvError, EnvProvider, SymbolTable, Value};

use super::geometry::{clear_path, course, new_point};
use super::{Bar, Params, World, PRIMITIVES};

/// A robot's own pose as it perceives it this tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensed {
    pub robot: u32,
    pub position: Vec2,
    pub heading: f64,
}

/// Names a botworld robot can use in programs, and the predicates defined
/// on top of the raw perceptual functions.
#[derive(Debug, Clone)]
pub struct BotSymbols {
    table: SymbolTable,
    definitions: BTreeMap<String, Definition>,
}

const RAW: &[(&str, usize)] = &[
    ("position", 0),
    ("heading", 0),
    ("course", 2),
    ("distance", 2),
    ("clear-path", 2),
    ("new-point", 2),
    ("bar", 1),
    ("obstacle", 1),
    ("bar-center", 1),
    ("is-grabbing", 1),
    ("midline-offset", 1),
    ("zone-miss", 1),
];

impl BotSymbols {
    pub fn new(params: &Params) -> Self {
        let mut table = SymbolTable::default();
        for &(name, arity) in PRIMITIVES {
            table = table.primitive(name, arity);
        }
        for &(name, arity) in RAW {
            table = table.symbol(name, arity);
        }
        let b = || vec!["b".to_string()];
        let e = |src: &str| parse_expr(src).expect("built-in definition parses");
        // Entering the zone must not be skippable by one rotate increment.
        let zone_in = (2.5f64.to_radians()).max(0.55 * params.omega * params.dt);
        let defs = [
            ("facing-bar", e("equal(heading, course(position, bar-center(b)))")),
            ("at-bar-center", Expr::near(e("position"), e("bar-center(b)"), 0.9 * params.reach, 1.1 * params.reach)),
            ("on-bar-midline", Expr::near(e("midline-offset(b)"), Expr::Number(0.0), 0.2, 0.4)),
            ("facing-midline-zone", Expr::near(e("zone-miss(b)"), Expr::Number(0.0), zone_in, 2.0 * zone_in)),
        ];
        let mut definitions = BTreeMap::new();
        for (name, body) in defs {
            table = table.symbol(name, 1);
            definitions.insert(name.to_string(), Definition { params: b(), body });
        }
        BotSymbols { table, definitions }
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }
}

/// The environment one robot's program reads during one tick.
pub struct RobotEnv<'a> {
    pub world: &'a World,
    pub sensed: Sensed,
    pub symbols: &'a BotSymbols,
}

fn bad(symbol: &str, reason: &str) -> EnvError {
    EnvError::BadArguments { symbol: symbol.to_string(), reason: reason.to_string() }
}

fn object_id(symbol: &str, v: &Value) -> Result<u32, EnvError> {
    match *v {
        Value::ObjectRef(id) => Ok(id),
        Value::Real(x) if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => Ok(x as u32),
        _ => Err(bad(symbol, "expected an object")),
    }
}

fn two_points(symbol: &str, args: &[Value]) -> Result<(Vec2, Vec2), EnvError> {
    match args {
        [a, b] => match (a.as_point(), b.as_point()) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(bad(symbol, "expected two points")),
        },
        _ => Err(bad(symbol, "expected two points")),
    }
}

impl RobotEnv<'_> {
    fn bar_arg(&self, symbol: &str, args: &[Value]) -> Result<&Bar, EnvError> {
        let [v] = args else { return Err(bad(symbol, "expected one bar")) };
        let id = object_id(symbol, v)?;
        self.world.bar(id).ok_or(EnvError::UnknownObject(id))
    }

    fn radius(&self) -> f64 {
        self.world.robot(self.sensed.robot).map_or(0.5, |r| r.radius)
    }

    /// Angle by which the heading ray misses the approach zone of `bar`
    /// (zero when the ray crosses it).
    fn zone_miss(&self, bar: &Bar) -> f64 {
        let p = self.world.params;
        let pos = self.sensed.position;
        let c = bar.center();
        let n = bar.normal();
        let side = if n.dot(pos - c) >= 0.0 { 1.0 } else { -1.0 };
        let z1 = c + n * (side * p.zone_near);
        let z2 = c + n * (side * p.zone_far);
        if crate::geom::point_segment_distance(pos, z1, z2) < 1e-9 {
            return 0.0;
        }
        let a1 = normalize_angle((z1 - pos).angle() - self.sensed.heading);
        let a2 = normalize_angle((z2 - pos).angle() - self.sensed.heading);
        if a1 * a2 <= 0.0 && (a1 - a2).abs() <= std::f64::consts::PI {
            0.0
        } else {
            a1.abs().min(a2.abs())
        }
    }
}

impl EnvProvider for RobotEnv<'_> {
    fn resolve(&self, symbol: &str, args: &[Value]) -> Result<Value, EnvError> {
        let me = self.sensed.robot;
        match symbol {
            "position" => Ok(Value::Point(self.sensed.position)),
            "heading" => Ok(Value::Angle(self.sensed.heading)),
            "course" => {
                let (a, b) = two_points(symbol, args)?;
                Ok(Value::Angle(course(a, b)?))
            }
            "distance" => {
                let (a, b) = two_points(symbol, args)?;
                Ok(Value::Real(a.dist(b)))
            }
            "clear-path" => {
                let (a, b) = two_points(symbol, args)?;
                Ok(Value::Bool(clear_path(self.world, a, b, self.radius())))
            }
            "new-point" => {
                let (a, b) = two_points(symbol, args)?;
                Ok(Value::Point(new_point(self.world, a, b, self.radius())?))
            }
            "bar" | "obstacle" => {
                let [v] = args else { return Err(bad(symbol, "expected an id")) };
                let id = object_id(symbol, v)?;
                let exists = if symbol == "bar" { self.world.bar(id).is_some() } else { self.world.obstacle(id).is_some() };
                if exists {
                    Ok(Value::ObjectRef(id))
                } else {
                    Err(EnvError::UnknownObject(id))
                }
            }
            "bar-center" => Ok(Value::Point(self.bar_arg(symbol, args)?.center())),
            "is-grabbing" => {
                let bar = self.bar_arg(symbol, args)?.id;
                Ok(Value::Bool(self.world.robot(me).is_some_and(|r| r.holding == Some(bar))))
            }
            "midline-offset" => {
                let bar = self.bar_arg(symbol, args)?;
                let along = (bar.q - bar.p).normalized();
                Ok(Value::Real((self.sensed.position - bar.center()).dot(along).abs()))
            }
            "zone-miss" => {
                let bar = self.bar_arg(symbol, args)?;
                Ok(Value::Real(self.zone_miss(bar)))
            }
            _ => Err(EnvError::UnknownSymbol(symbol.to_string())),
        }
    }

    fn symbols(&self) -> &SymbolTable {
        &self.symbols.table
    }

    fn definition(&self, symbol: &str) -> Option<&Definition> {
        self.symbols.definitions.get(symbol)
    }
}
