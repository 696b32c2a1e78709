//! Scenario files, the tick loop that couples T-R machines to the bar world,
//! and the JSONL trace format.

mod trace;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::botworld::{BotSymbols, EventKind, ExogenousEvent, NoiseConfig, RobotEnv, World, WorldError, WorldRng};
use crate::lang::{parse, parse_action, parse_expr, validate, ActionTerm, ParseError, ProgramLibrary};
use crate::runtime::{ActionCommand, Machine, MachineConfig, RuntimeError, ToleranceTable};

pub use trace::{ErrorRecord, ReplayMismatch, RobotRecord, TraceRecord, WorldDelta};

/// Programs shipped with the crate.
pub mod stock {
    pub const GOTO: &str = include_str!("../../programs/goto.tr");
    pub const AMBLE: &str = include_str!("../../programs/amble.tr");
    pub const GET_BAR: &str = include_str!("../../programs/get-bar.tr");
    pub const GET_BAR_MODELS: &str = include_str!("../../programs/get-bar.models.json");
    pub const GOTO_ABSTRACT: &str = include_str!("../../programs/goto-abstract.tr");
    pub const GOTO_ABSTRACT_MODELS: &str = include_str!("../../programs/goto-abstract.models.json");
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario: {0}")]
    Schema(String),
    #[error("program:\n{0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("entry call for robot {robot}: {error}")]
    Entry { robot: u32, error: RuntimeError },
    #[error("robot {robot}, tick {tick}: {error}")]
    Runtime { tick: u64, robot: u32, error: RuntimeError },
}

impl SimError {
    /// Runtime failures happen mid-run; everything else is a bad input.
    pub fn is_runtime(&self) -> bool {
        matches!(self, SimError::Runtime { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorldSpec {
    Inline(World),
    Path(String),
}

/// One robot's controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub robot: u32,
    pub entry: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub world: WorldSpec,
    /// Path of a `.tr` file, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<String>,
    /// Inline program source; used when `program` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Entry call for the lowest-id robot, e.g. `goto(point(10, 10))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agents: Vec<AgentSpec>,
    pub ticks: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub events: Vec<ExogenousEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceTable>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Schema(e.to_string()))
    }

    /// Loads a scenario and inlines the world and program files it refers to.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let mut s = Self::from_json(&read(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        s.resolve_files(&base)?;
        Ok(s)
    }

    pub fn resolve_files(&mut self, base: &Path) -> Result<(), SimError> {
        if let WorldSpec::Path(p) = &self.world {
            let w = World::from_json(&read(&base.join(p))?)?;
            self.world = WorldSpec::Inline(w);
        }
        if let Some(p) = self.program.take() {
            self.source = Some(read(&base.join(p))?);
        }
        Ok(())
    }

    pub fn world(&self) -> Result<&World, SimError> {
        match &self.world {
            WorldSpec::Inline(w) => Ok(w),
            WorldSpec::Path(p) => Err(SimError::Schema(format!("world file `{p}` has not been loaded"))),
        }
    }
}

fn read(path: &Path) -> Result<String, SimError> {
    std::fs::read_to_string(path).map_err(|source| SimError::Io { path: PathBuf::from(path).display().to_string(), source })
}

/// Parses a program for botworld and checks it against botworld's symbols.
pub fn load_library(source: &str, symbols: &BotSymbols) -> Result<Arc<ProgramLibrary>, SimError> {
    let mut lib = parse(source)?;
    lib.declare_symbols(symbols.table());
    let diags = validate(&lib);
    if !diags.is_empty() {
        return Err(ParseError(diags).into());
    }
    Ok(Arc::new(lib))
}

struct Agent {
    robot: u32,
    machine: Machine,
}

/// A running scenario: the world, one machine per controlled robot, the
/// pending events and the single seeded random stream.
pub struct Sim {
    world: World,
    agents: Vec<Agent>,
    symbols: BotSymbols,
    library: Arc<ProgramLibrary>,
    noise: NoiseConfig,
    rng: WorldRng,
    pending: Vec<ExogenousEvent>,
    warnings: Vec<String>,
}

impl Sim {
    pub fn new(scenario: &Scenario) -> Result<Sim, SimError> {
        let world = scenario.world()?.clone();
        world.validate()?;
        let source = scenario.source.as_deref().ok_or_else(|| SimError::Schema("no program given".into()))?;
        let symbols = BotSymbols::new(&world.params);
        let library = load_library(source, &symbols)?;
        let config = MachineConfig { tolerances: scenario.tolerances.unwrap_or_default(), ..MachineConfig::default() };
        let mut specs = scenario.agents.clone();
        if let Some(entry) = &scenario.entry {
            let robot = world.robots.iter().map(|r| r.id).min().ok_or_else(|| SimError::Schema("world has no robot".into()))?;
            specs.push(AgentSpec { robot, entry: entry.clone() });
        }
        if specs.is_empty() {
            return Err(SimError::Schema("no entry call given".into()));
        }
        specs.sort_by_key(|a| a.robot);
        let mut agents = Vec::with_capacity(specs.len());
        for spec in &specs {
            if agents.iter().any(|a: &Agent| a.robot == spec.robot) {
                return Err(SimError::Schema(format!("robot {} has two controllers", spec.robot)));
            }
            let r = world.robot(spec.robot).ok_or(WorldError::UnknownRobot(spec.robot))?;
            let entry: ActionTerm = parse_action(&spec.entry, &library)?;
            let sensed = crate::botworld::Sensed { robot: r.id, position: r.position, heading: r.heading };
            let env = RobotEnv { world: &world, sensed, symbols: &symbols };
            let machine = Machine::with_config(library.clone(), &entry, &env, config)
                .map_err(|error| SimError::Entry { robot: r.id, error })?;
            agents.push(Agent { robot: spec.robot, machine });
        }
        let mut sim = Sim {
            world,
            agents,
            symbols,
            library,
            noise: scenario.noise,
            rng: WorldRng::seed_from_u64(scenario.seed),
            pending: Vec::new(),
            warnings: tolerance_warnings(&config.tolerances, &scenario.world()?.params),
        };
        for e in &scenario.events {
            sim.inject(e.clone())?;
        }
        Ok(sim)
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// Configuration that is legal but likely to misbehave.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn tick(&self) -> u64 {
        self.world.tick
    }

    pub fn library(&self) -> &Arc<ProgramLibrary> {
        &self.library
    }

    pub fn machine(&self, robot: u32) -> Option<&Machine> {
        self.agents.iter().find(|a| a.robot == robot).map(|a| &a.machine)
    }

    pub fn controlled_robots(&self) -> Vec<u32> {
        self.agents.iter().map(|a| a.robot).collect()
    }

    pub fn pending_events(&self) -> &[ExogenousEvent] {
        &self.pending
    }

    /// Queues an event; it is applied at the end of tick `at_tick`, after the
    /// robots' increments. Events for the same tick keep injection order.
    pub fn inject(&mut self, event: ExogenousEvent) -> Result<(), SimError> {
        if event.at_tick < self.world.tick {
            return Err(SimError::Schema(format!(
                "event for tick {} injected at tick {}",
                event.at_tick, self.world.tick
            )));
        }
        self.check_event(&event.kind, event.at_tick)?;
        let at = self.pending.partition_point(|e| e.at_tick <= event.at_tick);
        self.pending.insert(at, event);
        Ok(())
    }

    fn check_event(&self, e: &EventKind, at_tick: u64) -> Result<(), SimError> {
        match e {
            EventKind::SetEntryArg { index, value } => {
                parse_expr(value)?;
                let arity = self.agents[0].machine.entry_args().len();
                if *index >= arity {
                    return Err(SimError::Schema(format!("entry takes {arity} argument(s); index {index} is out of range")));
                }
                Ok(())
            }
            _ => {
                // Dry run against a scratch world that already has the earlier
                // events, so ids added by those are known.
                let mut scratch = self.world.clone();
                for p in self.pending.iter().filter(|p| p.at_tick <= at_tick) {
                    let _ = scratch.apply_event(&p.kind);
                }
                scratch.apply_event(e)?;
                Ok(())
            }
        }
    }

    /// One tick: every controlled robot senses and picks an increment (in
    /// robot-id order), the world applies the increments and the events due,
    /// and the tick record comes back.
    pub fn step(&mut self) -> Result<TraceRecord, SimError> {
        let tick = self.world.tick;
        let mut commands = Vec::with_capacity(self.agents.len());
        let mut activations = Vec::with_capacity(self.agents.len());
        for agent in &mut self.agents {
            let sensed = self.world.sense(agent.robot, &self.noise, &mut self.rng)?;
            let env = RobotEnv { world: &self.world, sensed, symbols: &self.symbols };
            let (cmd, trace) =
                agent.machine.tick(&env).map_err(|error| SimError::Runtime { tick, robot: agent.robot, error })?;
            commands.push((agent.robot, cmd));
            activations.push((agent.robot, trace.levels));
        }
        let due = self.pending.partition_point(|e| e.at_tick <= tick);
        let events: Vec<EventKind> = self.pending.drain(..due).map(|e| e.kind).collect();
        for e in &events {
            if let EventKind::SetEntryArg { index, value } = e {
                let expr = parse_expr(value)?;
                self.agents[0]
                    .machine
                    .set_entry_arg(*index, expr)
                    .map_err(|error| SimError::Runtime { tick, robot: self.agents[0].robot, error })?;
            }
        }
        let before = self.world.clone();
        let log = self.world.step(&commands, &events, &self.noise, &mut self.rng)?;
        Ok(TraceRecord::build(tick, &before, &self.world, &commands, activations, log))
    }

    /// Runs to `ticks`, handing each record to `sink`.
    pub fn run(&mut self, ticks: u64, mut sink: impl FnMut(&TraceRecord)) -> Result<(), SimError> {
        while self.world.tick < ticks {
            let rec = self.step()?;
            sink(&rec);
        }
        Ok(())
    }

    /// Command of each controlled robot in the last record, for convenience.
    pub fn last_actions(&self) -> Vec<(u32, Option<ActionCommand>)> {
        self.agents.iter().map(|a| (a.robot, a.machine.trace().ok().map(|t| t.action.clone()))).collect()
    }
}

/// A heading band narrower than half a rotate increment can be stepped over,
/// and `rotate` (one direction only) then circles forever.
fn tolerance_warnings(t: &ToleranceTable, p: &crate::botworld::Params) -> Vec<String> {
    let half_turn = p.omega * p.dt / 2.0;
    if t.angle.eps_in > half_turn {
        return Vec::new();
    }
    vec![format!(
        "angle tolerance {:.2} deg is not wider than half a rotate step ({:.2} deg); headings may never match",
        t.angle.eps_in.to_degrees(),
        half_turn.to_degrees()
    )]
}

/// Runs a whole scenario, writing one JSON line per tick. A runtime error is
/// written as a final error line and also returned.
pub fn run_headless(scenario: &Scenario, out: &mut dyn std::io::Write) -> Result<u64, SimError> {
    let mut sim = Sim::new(scenario)?;
    let io = |e: std::io::Error| SimError::Io { path: "trace".into(), source: e };
    while sim.tick() < scenario.ticks {
        match sim.step() {
            Ok(rec) => writeln!(out, "{}", rec.to_json_line()).map_err(io)?,
            Err(err) => {
                if let SimError::Runtime { tick, robot, error } = &err {
                    let rec = ErrorRecord { tick: *tick, robot: *robot, error: error.to_string() };
                    writeln!(out, "{}", serde_json::to_string(&rec).expect("serialisable")).map_err(io)?;
                }
                return Err(err);
            }
        }
    }
    Ok(sim.tick())
}

/// Re-runs `scenario` and compares it line by line with a recorded trace.
pub fn replay(scenario: &Scenario, recorded: &str) -> Result<usize, ReplayMismatch> {
    let mut fresh = Vec::new();
    let _ = run_headless(scenario, &mut fresh);
    let fresh = String::from_utf8(fresh).expect("traces are UTF-8");
    let mut a = recorded.lines();
    let mut b = fresh.lines();
    let mut line = 0;
    loop {
        match (a.next(), b.next()) {
            (None, None) => return Ok(line),
            (x, y) if x == y => line += 1,
            (x, y) => {
                return Err(ReplayMismatch {
                    line: line + 1,
                    recorded: x.map(str::to_string),
                    replayed: y.map(str::to_string),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::botworld::{Params, Robot};
    use crate::geom::Vec2;

    fn goto_scenario(ticks: u64) -> Scenario {
        let mut w = World::new(Params::default());
        w.robots.push(Robot::new(1, Vec2::new(0.0, 0.0), 0.0));
        Scenario {
            world: WorldSpec::Inline(w),
            program: None,
            source: Some(stock::GOTO.to_string()),
            entry: Some("goto(point(3, 4))".into()),
            agents: vec![],
            ticks,
            seed: 0,
            noise: NoiseConfig::default(),
            events: vec![],
            tolerances: None,
        }
    }

    #[test]
    fn goto_reaches_target() {
        let mut sim = Sim::new(&goto_scenario(400)).unwrap();
        sim.run(400, |_| {}).unwrap();
        let p = sim.world().robots[0].position;
        assert!(p.dist(Vec2::new(3.0, 4.0)) < 0.1, "{p:?}");
        assert_eq!(sim.last_actions()[0].1, Some(ActionCommand::Nil));
    }

    #[test]
    fn narrow_heading_band_is_flagged() {
        assert!(Sim::new(&goto_scenario(1)).unwrap().warnings().is_empty());
        let mut s = goto_scenario(1);
        let mut t = ToleranceTable::default();
        t.angle = crate::runtime::Band::new(2f64.to_radians(), 4f64.to_radians());
        s.tolerances = Some(t);
        assert_eq!(Sim::new(&s).unwrap().warnings().len(), 1);
    }

    #[test]
    fn unknown_entry_is_rejected() {
        let mut s = goto_scenario(10);
        s.entry = Some("wander()".into());
        assert!(Sim::new(&s).is_err());
    }

    #[test]
    fn late_events_are_rejected() {
        let mut sim = Sim::new(&goto_scenario(10)).unwrap();
        sim.step().unwrap();
        let e = ExogenousEvent { at_tick: 0, kind: EventKind::ForceRelease { robot: 1 } };
        assert!(sim.inject(e).is_err());
    }

    #[test]
    fn set_entry_arg_retargets() {
        let mut s = goto_scenario(600);
        s.events.push(ExogenousEvent { at_tick: 5, kind: EventKind::SetEntryArg { index: 0, value: "point(-2, 1)".into() } });
        let mut sim = Sim::new(&s).unwrap();
        sim.run(600, |_| {}).unwrap();
        assert!(sim.world().robots[0].position.dist(Vec2::new(-2.0, 1.0)) < 0.1);
    }

    #[test]
    fn headless_is_deterministic_and_replays() {
        let mut s = goto_scenario(300);
        s.noise = NoiseConfig { exec_p: 0.2, sense_sigma: 0.01 };
        s.seed = 7;
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_headless(&s, &mut a).unwrap();
        run_headless(&s, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert_eq!(text.lines().count(), 300);
        assert_eq!(replay(&s, &text), Ok(300));
        let tampered = text.replacen("\"tick\":3,", "\"tick\":4,", 1);
        assert_eq!(replay(&s, &tampered).unwrap_err().line, 4);
    }
}
