//! Circuit-semantics interpreter for T-R programs and trees.

pub mod env;
pub mod eval;
pub mod machine;
pub mod tree;
pub mod value;

pub use env::{Definition, EnvError, EnvProvider, StaticEnv, SymbolTable};
pub use eval::{schmitt, Band, Bindings, Evaluator, HysteresisState, NearKey, Site, ToleranceTable};
pub use machine::{ActionCommand, ActivationTrace, Frame, LevelRecord, Machine, MachineConfig, DEFAULT_MAX_DEPTH};
pub use tree::select_tree_node;
pub use value::{normalize_angle, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuntimeError {
    #[error("unknown entry program `{0}`")]
    UnknownEntry(String),
    #[error("`{name}` takes {expected} argument(s), {found} given")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("no rule applies in `{callee}` (frame {instance_id})")]
    NoApplicableRule { callee: String, instance_id: u64 },
    #[error("activation depth would exceed {max_depth}")]
    RecursionLimit { max_depth: usize },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("type error: {0}")]
    TypeError(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("machine has not ticked yet")]
    NotStarted,
}
