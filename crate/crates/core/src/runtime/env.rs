use std::collections::BTreeMap;

use super::value::Value;
use crate::lang::Expr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{symbol}`: {reason}")]
    BadArguments { symbol: String, reason: String },
    #[error("course is undefined between coincident points")]
    DegenerateCourse,
    #[error("unknown object #{0}")]
    UnknownObject(u32),
    #[error("new-point called with a clear path")]
    NoBlocker,
}

/// Declared primitive actions and environment symbols, name -> arity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymbolTable {
    pub primitives: BTreeMap<String, usize>,
    pub env: BTreeMap<String, usize>,
}

impl SymbolTable {
    pub fn primitive(mut self, name: &str, arity: usize) -> Self {
        self.primitives.insert(name.to_string(), arity);
        self
    }

    pub fn symbol(mut self, name: &str, arity: usize) -> Self {
        self.env.insert(name.to_string(), arity);
        self
    }
}

/// A predicate or function the environment defines as an expression over
/// its own parameters. The runtime evaluates the body in the calling frame,
/// so any `near`/`equal` inside keeps hysteresis state per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub params: Vec<String>,
    pub body: Expr,
}

/// The continuously computed quantities a program reads.
///
/// `resolve` must be deterministic between two sense phases: the same symbol
/// and arguments give the same value for the whole tick.
pub trait EnvProvider {
    fn resolve(&self, symbol: &str, args: &[Value]) -> Result<Value, EnvError>;

    fn symbols(&self) -> &SymbolTable;

    fn definition(&self, _symbol: &str) -> Option<&Definition> {
        None
    }
}

type EnvFn = Box<dyn Fn(&[Value]) -> Result<Value, EnvError> + Send + Sync>;

/// Table-driven environment: constants plus closures. Handy for scripted runs.
#[derive(Default)]
pub struct StaticEnv {
    values: BTreeMap<String, Value>,
    functions: BTreeMap<String, EnvFn>,
    definitions: BTreeMap<String, Definition>,
    symbols: SymbolTable,
}

impl StaticEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_primitive(mut self, name: &str, arity: usize) -> Self {
        self.symbols.primitives.insert(name.to_string(), arity);
        self
    }

    pub fn set(&mut self, name: &str, value: Value) {
        self.values.insert(name.to_string(), value);
        self.symbols.env.insert(name.to_string(), 0);
    }

    pub fn with_value(mut self, name: &str, value: Value) -> Self {
        self.set(name, value);
        self
    }

    pub fn with_fn(
        mut self,
        name: &str,
        arity: usize,
        f: impl Fn(&[Value]) -> Result<Value, EnvError> + Send + Sync + 'static,
    ) -> Self {
        self.functions.insert(name.to_string(), Box::new(f));
        self.symbols.env.insert(name.to_string(), arity);
        self
    }

    pub fn with_definition(mut self, name: &str, params: &[&str], body: Expr) -> Self {
        self.symbols.env.insert(name.to_string(), params.len());
        self.definitions
            .insert(name.to_string(), Definition { params: params.iter().map(|p| p.to_string()).collect(), body });
        self
    }
}

impl EnvProvider for StaticEnv {
    fn resolve(&self, symbol: &str, args: &[Value]) -> Result<Value, EnvError> {
        if let Some(f) = self.functions.get(symbol) {
            return f(args);
        }
        match self.values.get(symbol) {
            Some(v) if args.is_empty() => Ok(*v),
            _ => Err(EnvError::UnknownSymbol(symbol.to_string())),
        }
    }

    fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    fn definition(&self, symbol: &str) -> Option<&Definition> {
        self.definitions.get(symbol)
    }
}
