use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::env::EnvProvider;
use super::eval::{Bindings, Evaluator, HysteresisState, Site, ToleranceTable};
use super::tree::select_by_cost;
use super::value::Value;
use super::RuntimeError;
use crate::lang::{ActionTerm, Callable, Expr, ProgramLibrary};

pub const DEFAULT_MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ActionCommand {
    Nil,
    Primitive { name: String, args: Vec<Value> },
}

impl ActionCommand {
    pub fn name(&self) -> &str {
        match self {
            ActionCommand::Nil => "nil",
            ActionCommand::Primitive { name, .. } => name,
        }
    }
}

/// One level of the activation path: which rule (or tree node) won in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub callee: String,
    pub instance_id: u64,
    /// Rule index (0-based) or tree node declaration index.
    pub selected: usize,
    /// Truth per rule or node; `None` for rules after the selected one, which are not evaluated.
    pub truth: Vec<Option<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationTrace {
    pub levels: Vec<LevelRecord>,
    pub action: ActionCommand,
}

impl ActivationTrace {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn leaf(&self) -> &LevelRecord {
        self.levels.last().expect("trace has at least one level")
    }
}

/// The run-time circuitry of one called program or tree.
#[derive(Debug, Clone)]
pub struct Frame {
    pub instance_id: u64,
    pub callee: String,
    /// Caller-scope expressions, re-evaluated every tick.
    pub arg_exprs: Vec<Expr>,
    pub selected: Option<usize>,
    pub hysteresis: HysteresisState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MachineConfig {
    pub max_depth: usize,
    pub tolerances: ToleranceTable,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig { max_depth: DEFAULT_MAX_DEPTH, tolerances: ToleranceTable::default() }
    }
}

/// Executes a T-R program: each tick re-evaluates every condition on the
/// activation path from the root, keeps child frames whose selecting rule is
/// unchanged, discards the rest and returns one action increment.
#[derive(Debug, Clone)]
pub struct Machine {
    library: Arc<ProgramLibrary>,
    config: MachineConfig,
    entry_name: String,
    entry_args: Vec<Expr>,
    entry_state: HysteresisState,
    frames: Vec<Frame>,
    next_instance: u64,
    tick_count: u64,
    last_trace: Option<ActivationTrace>,
}

struct Scratch {
    frames: Vec<Frame>,
    entry_state: HysteresisState,
    next_instance: u64,
}

impl Machine {
    pub fn init(
        library: Arc<ProgramLibrary>,
        entry: &ActionTerm,
        env: &dyn EnvProvider,
    ) -> Result<Machine, RuntimeError> {
        Self::with_config(library, entry, env, MachineConfig::default())
    }

    pub fn with_config(
        library: Arc<ProgramLibrary>,
        entry: &ActionTerm,
        env: &dyn EnvProvider,
        config: MachineConfig,
    ) -> Result<Machine, RuntimeError> {
        let (name, args) = match entry {
            ActionTerm::ProgramCall { name, args } | ActionTerm::Primitive { name, args } => (name, args),
            ActionTerm::Nil => return Err(RuntimeError::UnknownEntry("nil".into())),
        };
        let callee = library.callable(name).ok_or_else(|| RuntimeError::UnknownEntry(name.clone()))?;
        if callee.params().len() != args.len() {
            return Err(RuntimeError::ArityMismatch {
                name: name.clone(),
                expected: callee.params().len(),
                found: args.len(),
            });
        }
        for a in args {
            check_entry_expr(a, env)?;
        }
        if config.max_depth == 0 {
            return Err(RuntimeError::RecursionLimit { max_depth: 0 });
        }
        let root = Frame {
            instance_id: 0,
            callee: name.clone(),
            arg_exprs: args.clone(),
            selected: None,
            hysteresis: HysteresisState::default(),
        };
        Ok(Machine {
            library,
            config,
            entry_name: name.clone(),
            entry_args: args.clone(),
            entry_state: HysteresisState::default(),
            frames: vec![root],
            next_instance: 1,
            tick_count: 0,
            last_trace: None,
        })
    }

    pub fn library(&self) -> &Arc<ProgramLibrary> {
        &self.library
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn entry_name(&self) -> &str {
        &self.entry_name
    }

    pub fn entry_args(&self) -> &[Expr] {
        &self.entry_args
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    pub fn tick_count(&self) -> u64 {
        self.tick_count
    }

    /// The trace of the last successful tick.
    pub fn trace(&self) -> Result<&ActivationTrace, RuntimeError> {
        self.last_trace.as_ref().ok_or(RuntimeError::NotStarted)
    }

    /// Replaces one entry argument; frames are kept, the new value flows in on the next tick.
    pub fn set_entry_arg(&mut self, index: usize, expr: Expr) -> Result<(), RuntimeError> {
        let slot = self.entry_args.get_mut(index).ok_or(RuntimeError::ArityMismatch {
            name: self.entry_name.clone(),
            expected: self.frames[0].arg_exprs.len(),
            found: index + 1,
        })?;
        *slot = expr.clone();
        self.frames[0].arg_exprs[index] = expr;
        Ok(())
    }

    /// Runs one tick. On error nothing about the machine changes.
    pub fn tick(&mut self, env: &dyn EnvProvider) -> Result<(ActionCommand, ActivationTrace), RuntimeError> {
        let mut scratch = Scratch {
            frames: self.frames.clone(),
            entry_state: self.entry_state.clone(),
            next_instance: self.next_instance,
        };
        let trace = self.run(&mut scratch, env)?;
        self.frames = scratch.frames;
        self.entry_state = scratch.entry_state;
        self.next_instance = scratch.next_instance;
        self.tick_count += 1;
        self.last_trace = Some(trace.clone());
        Ok((trace.action.clone(), trace))
    }

    fn run(&self, s: &mut Scratch, env: &dyn EnvProvider) -> Result<ActivationTrace, RuntimeError> {
        let ev = Evaluator::new(env, &self.config.tolerances);
        let mut args = ev.eval_all(&s.frames[0].arg_exprs, Bindings::EMPTY, &mut s.entry_state, Site::Entry)?;
        let mut levels = Vec::new();
        let mut k = 0;
        loop {
            let callee = self
                .library
                .callable(&s.frames[k].callee)
                .ok_or_else(|| RuntimeError::UnknownEntry(s.frames[k].callee.clone()))?;
            let params = callee.params();
            let bindings = Bindings::new(params, &args);
            let frame = &mut s.frames[k];
            let (selected, truth, action) = match callee {
                Callable::Program(p) => {
                    let mut truth = vec![None; p.rules.len()];
                    let mut selected = None;
                    for (i, rule) in p.rules.iter().enumerate() {
                        let t = ev.eval_condition(&rule.condition, bindings, &mut frame.hysteresis, Site::Condition(i))?;
                        truth[i] = Some(t);
                        if t {
                            selected = Some(i);
                            break;
                        }
                    }
                    let selected = selected.ok_or_else(|| RuntimeError::NoApplicableRule {
                        callee: p.name.clone(),
                        instance_id: frame.instance_id,
                    })?;
                    (selected, truth, &p.rules[selected].action)
                }
                Callable::Tree(t) => {
                    let mut bits = Vec::with_capacity(t.nodes.len());
                    for (i, node) in t.nodes.iter().enumerate() {
                        bits.push(ev.eval_condition(&node.condition, bindings, &mut frame.hysteresis, Site::Condition(i))?);
                    }
                    let selected = select_by_cost(&t.costs_to_root(), &bits).ok_or_else(|| {
                        RuntimeError::NoApplicableRule { callee: t.name.clone(), instance_id: frame.instance_id }
                    })?;
                    let action = t.nodes[selected].action.as_ref().unwrap_or(&ActionTerm::Nil);
                    (selected, bits.into_iter().map(Some).collect(), action)
                }
            };
            if frame.selected != Some(selected) {
                frame.selected = Some(selected);
                s.frames.truncate(k + 1);
            }
            levels.push(LevelRecord {
                callee: callee.name().to_string(),
                instance_id: s.frames[k].instance_id,
                selected,
                truth,
            });
            match action {
                ActionTerm::Nil => return Ok(ActivationTrace { levels, action: ActionCommand::Nil }),
                ActionTerm::Primitive { name, args: arg_exprs } => {
                    let vals = ev.eval_all(arg_exprs, bindings, &mut s.frames[k].hysteresis, Site::Action(selected))?;
                    return Ok(ActivationTrace {
                        levels,
                        action: ActionCommand::Primitive { name: name.clone(), args: vals },
                    });
                }
                ActionTerm::ProgramCall { name, args: arg_exprs } => {
                    let child_args =
                        ev.eval_all(arg_exprs, bindings, &mut s.frames[k].hysteresis, Site::Action(selected))?;
                    if s.frames.len() == k + 1 {
                        if k + 2 > self.config.max_depth {
                            return Err(RuntimeError::RecursionLimit { max_depth: self.config.max_depth });
                        }
                        s.frames.push(Frame {
                            instance_id: s.next_instance,
                            callee: name.clone(),
                            arg_exprs: arg_exprs.clone(),
                            selected: None,
                            hysteresis: HysteresisState::default(),
                        });
                        s.next_instance += 1;
                    }
                    args = child_args;
                    k += 1;
                }
            }
        }
    }
}

fn check_entry_expr(e: &Expr, env: &dyn EnvProvider) -> Result<(), RuntimeError> {
    let mut missing = None;
    e.walk(&mut |sub| {
        if let Expr::Var(name) = sub {
            if missing.is_none() && env.symbols().env.get(name) != Some(&0) && env.definition(name).is_none() {
                missing = Some(name.clone());
            }
        }
    });
    match missing {
        Some(name) => Err(RuntimeError::UnboundVariable(name)),
        None => Ok(()),
    }
}
