use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::env::{EnvError, EnvProvider};
use super::value::{normalize_angle, Value};
use super::RuntimeError;
use crate::lang::{Expr, Tolerance};

/// Enter/exit thresholds of a two-threshold comparator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub eps_in: f64,
    pub eps_out: f64,
}

impl Band {
    pub const fn new(eps_in: f64, eps_out: f64) -> Self {
        Band { eps_in, eps_out }
    }
}

/// Thresholds used by `equal(a, b)`, picked by the kind of the compared values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceTable {
    /// Radians.
    pub angle: Band,
    pub point: Band,
    pub scalar: Band,
}

impl Default for ToleranceTable {
    fn default() -> Self {
        ToleranceTable {
            angle: Band::new(3f64.to_radians(), 6f64.to_radians()),
            point: Band::new(0.10, 0.20),
            scalar: Band::new(1e-3, 2e-3),
        }
    }
}

/// Schmitt trigger: a fresh comparator (or one that is currently false) turns
/// true below `eps_in`; once true it stays true up to `eps_out`.
pub fn schmitt(previous: Option<bool>, delta: f64, band: Band) -> bool {
    match previous {
        Some(true) => delta <= band.eps_out,
        _ => delta < band.eps_in,
    }
}

/// Where a `near` node lives within a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Site {
    /// Condition of rule / tree node `i`.
    Condition(usize),
    /// Arguments of the action attached to rule / tree node `i`.
    Action(usize),
    /// Arguments of the machine's entry call.
    Entry,
}

/// Identifies one `near` comparator: its site plus its position in strict
/// left-to-right evaluation order at that site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NearKey {
    pub site: Site,
    pub ordinal: u32,
}

/// Last truth value of every comparator of one frame instance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HysteresisState(BTreeMap<NearKey, bool>);

impl HysteresisState {
    pub fn get(&self, key: &NearKey) -> Option<bool> {
        self.0.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Variable bindings visible to an expression.
#[derive(Debug, Clone, Copy)]
pub struct Bindings<'a> {
    pub names: &'a [String],
    pub values: &'a [Value],
}

impl<'a> Bindings<'a> {
    pub const EMPTY: Bindings<'static> = Bindings { names: &[], values: &[] };

    pub fn new(names: &'a [String], values: &'a [Value]) -> Self {
        Bindings { names, values }
    }

    fn lookup(&self, name: &str) -> Option<Value> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Strict evaluator: every operand of `and`/`or` is evaluated, so the ordinal
/// of each `near` node at a site is fixed by the expression's shape.
pub struct Evaluator<'a> {
    pub env: &'a dyn EnvProvider,
    pub tolerances: &'a ToleranceTable,
}

struct NearCursor<'h> {
    state: &'h mut HysteresisState,
    site: Site,
    next: u32,
}

const MAX_DEFINITION_DEPTH: usize = 32;

impl<'a> Evaluator<'a> {
    pub fn new(env: &'a dyn EnvProvider, tolerances: &'a ToleranceTable) -> Self {
        Evaluator { env, tolerances }
    }

    /// Evaluates `e`, reading and updating comparator state for `site`.
    pub fn eval(
        &self,
        e: &Expr,
        bindings: Bindings<'_>,
        state: &mut HysteresisState,
        site: Site,
    ) -> Result<Value, RuntimeError> {
        let mut cursor = NearCursor { state, site, next: 0 };
        self.eval_inner(e, bindings, &mut cursor, 0)
    }

    /// Evaluates several expressions at one site, ordinals running on across them.
    pub fn eval_all(
        &self,
        exprs: &[Expr],
        bindings: Bindings<'_>,
        state: &mut HysteresisState,
        site: Site,
    ) -> Result<Vec<Value>, RuntimeError> {
        let mut cursor = NearCursor { state, site, next: 0 };
        exprs.iter().map(|e| self.eval_inner(e, bindings, &mut cursor, 0)).collect()
    }

    pub fn eval_condition(
        &self,
        e: &Expr,
        bindings: Bindings<'_>,
        state: &mut HysteresisState,
        site: Site,
    ) -> Result<bool, RuntimeError> {
        let v = self.eval(e, bindings, state, site)?;
        v.as_bool().ok_or_else(|| RuntimeError::TypeError(format!("condition evaluated to a {}", v.kind())))
    }

    fn eval_inner(
        &self,
        e: &Expr,
        b: Bindings<'_>,
        cur: &mut NearCursor<'_>,
        depth: usize,
    ) -> Result<Value, RuntimeError> {
        match e {
            Expr::True => Ok(Value::Bool(true)),
            Expr::Number(n) => Ok(Value::Real(*n)),
            Expr::Angle(a) => Ok(Value::Angle(normalize_angle(*a))),
            Expr::Point(x, y) => Ok(Value::point(*x, *y)),
            Expr::Var(name) => match b.lookup(name) {
                Some(v) => Ok(v),
                None => self.call(name, &[], cur, depth),
            },
            Expr::Call(name, args) => {
                let vals =
                    args.iter().map(|a| self.eval_inner(a, b, cur, depth)).collect::<Result<Vec<_>, _>>()?;
                self.call(name, &vals, cur, depth)
            }
            Expr::Not(inner) => Ok(Value::Bool(!self.boolean(inner, b, cur, depth)?)),
            Expr::And(ops) => {
                let mut all = true;
                for o in ops {
                    all &= self.boolean(o, b, cur, depth)?;
                }
                Ok(Value::Bool(all))
            }
            Expr::Or(ops) => {
                let mut any = false;
                for o in ops {
                    any |= self.boolean(o, b, cur, depth)?;
                }
                Ok(Value::Bool(any))
            }
            Expr::Near { a, b: rhs, tol } => {
                let key = NearKey { site: cur.site, ordinal: cur.next };
                cur.next += 1;
                let lhs = self.eval_inner(a, b, cur, depth)?;
                let rhs = self.eval_inner(rhs, b, cur, depth)?;
                let (delta, kind_band) = self.difference(lhs, rhs)?;
                let band = match tol {
                    Tolerance::ByKind => kind_band,
                    Tolerance::Fixed { eps_in, eps_out } => Band::new(*eps_in, *eps_out),
                };
                let truth = schmitt(cur.state.get(&key), delta, band);
                cur.state.0.insert(key, truth);
                Ok(Value::Bool(truth))
            }
        }
    }

    fn boolean(&self, e: &Expr, b: Bindings<'_>, cur: &mut NearCursor<'_>, depth: usize) -> Result<bool, RuntimeError> {
        let v = self.eval_inner(e, b, cur, depth)?;
        v.as_bool().ok_or_else(|| RuntimeError::TypeError(format!("expected a truth value, found a {}", v.kind())))
    }

    fn call(&self, name: &str, args: &[Value], cur: &mut NearCursor<'_>, depth: usize) -> Result<Value, RuntimeError> {
        if name == "point" {
            return match args {
                [Value::Real(x), Value::Real(y)] => Ok(Value::point(*x, *y)),
                _ => Err(RuntimeError::TypeError("point(x, y) needs two reals".into())),
            };
        }
        if let Some(def) = self.env.definition(name) {
            if def.params.len() != args.len() {
                return Err(EnvError::BadArguments {
                    symbol: name.to_string(),
                    reason: format!("expected {} argument(s), got {}", def.params.len(), args.len()),
                }
                .into());
            }
            if depth >= MAX_DEFINITION_DEPTH {
                return Err(RuntimeError::TypeError(format!("definition of `{name}` nests too deeply")));
            }
            return self.eval_inner(&def.body, Bindings::new(&def.params, args), cur, depth + 1);
        }
        if args.is_empty() && !self.env.symbols().env.contains_key(name) {
            return Err(RuntimeError::UnboundVariable(name.to_string()));
        }
        Ok(self.env.resolve(name, args)?)
    }

    /// Distance between two comparable values and the default band for their kind.
    fn difference(&self, a: Value, b: Value) -> Result<(f64, Band), RuntimeError> {
        match (a, b) {
            (Value::Real(x), Value::Real(y)) => Ok(((x - y).abs(), self.tolerances.scalar)),
            (Value::Angle(x), Value::Angle(y)) => Ok((normalize_angle(x - y).abs(), self.tolerances.angle)),
            (Value::Point(p), Value::Point(q)) => Ok((p.dist(q), self.tolerances.point)),
            (Value::ObjectRef(x), Value::ObjectRef(y)) => {
                Ok((if x == y { 0.0 } else { f64::INFINITY }, self.tolerances.scalar))
            }
            (x, y) => Err(RuntimeError::TypeError(format!("cannot compare a {} with a {}", x.kind(), y.kind()))),
        }
    }
}
