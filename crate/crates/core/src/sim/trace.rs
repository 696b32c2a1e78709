use serde::{Deserialize, Serialize};

use crate::botworld::{Bar, EventKind, Obstacle, StepLog, World};
use crate::geom::Vec2;
use crate::runtime::{ActionCommand, LevelRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotRecord {
    pub id: u32,
    /// Pose at the end of the tick.
    pub position: Vec2,
    pub heading: f64,
    pub holding: Option<u32>,
    /// `None` for robots nobody controls.
    pub action: Option<ActionCommand>,
    /// Root-to-leaf activation path the action came from.
    pub activation: Vec<LevelRecord>,
}

/// Bars and obstacles that changed during the tick.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WorldDelta {
    pub bars: Vec<Bar>,
    pub obstacles: Vec<Obstacle>,
    pub removed: Vec<u32>,
}

impl WorldDelta {
    pub fn between(before: &World, after: &World) -> Self {
        let bars = after.bars.iter().filter(|b| before.bar(b.id) != Some(b)).cloned().collect();
        let obstacles = after.obstacles.iter().filter(|o| before.obstacle(o.id) != Some(o)).cloned().collect();
        let removed = before
            .bars
            .iter()
            .map(|b| b.id)
            .chain(before.obstacles.iter().map(|o| o.id))
            .chain(before.robots.iter().map(|r| r.id))
            .filter(|&id| !after.contains_id(id))
            .collect();
        WorldDelta { bars, obstacles, removed }
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty() && self.obstacles.is_empty() && self.removed.is_empty()
    }
}

/// One line of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    /// Simulated seconds at the start of the tick.
    pub time: f64,
    pub robots: Vec<RobotRecord>,
    pub world_delta: WorldDelta,
    /// Events applied at the end of this tick, in order.
    pub events_applied: Vec<EventKind>,
    pub notes: Vec<String>,
}

impl TraceRecord {
    pub(super) fn build(
        tick: u64,
        before: &World,
        after: &World,
        commands: &[(u32, ActionCommand)],
        mut activations: Vec<(u32, Vec<LevelRecord>)>,
        log: StepLog,
    ) -> Self {
        let robots = after
            .robots
            .iter()
            .map(|r| {
                let action = commands.iter().find(|(id, _)| *id == r.id).map(|(_, c)| c.clone());
                let activation = activations
                    .iter_mut()
                    .find(|(id, _)| *id == r.id)
                    .map(|(_, l)| std::mem::take(l))
                    .unwrap_or_default();
                RobotRecord { id: r.id, position: r.position, heading: r.heading, holding: r.holding, action, activation }
            })
            .collect();
        TraceRecord {
            tick,
            time: tick as f64 * before.params.dt,
            robots,
            world_delta: WorldDelta::between(before, after),
            events_applied: log.events_applied,
            notes: log.notes,
        }
    }

    pub fn robot(&self, id: u32) -> Option<&RobotRecord> {
        self.robots.iter().find(|r| r.id == id)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialise")
    }
}

/// Final line of a trace that stopped on a runtime error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub tick: u64,
    pub robot: u32,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("trace diverges at line {line}")]
pub struct ReplayMismatch {
    pub line: usize,
    pub recorded: Option<String>,
    pub replayed: Option<String>,
}
