//! A deterministic fixed-timestep 2D world of unicycle robots, graspable bars
//! and circular obstacles.

mod geometry;
mod sense;

use std::collections::BTreeSet;

use rand::RngExt;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::runtime::{normalize_angle, ActionCommand, Value};

pub use geometry::{clear_path, course, new_point, Blocker};
pub use sense::{BotSymbols, RobotEnv, Sensed};

pub type WorldRng = rand::rngs::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("unknown robot #{0}")]
    UnknownRobot(u32),
    #[error("unknown object #{0}")]
    UnknownObject(u32),
    #[error("object id #{0} is used twice")]
    DuplicateId(u32),
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error("`{0}` is not a botworld action")]
    UnknownAction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    /// Linear speed, units/s.
    pub v: f64,
    /// Turn rate, rad/s (counter-clockwise).
    pub omega: f64,
    pub dt: f64,
    pub reach: f64,
    /// Extra margin kept between a robot and anything it plans to pass.
    pub clearance: f64,
    /// Near and far end of the approach zone on a bar's perpendicular bisector.
    pub zone_near: f64,
    pub zone_far: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            v: 1.0,
            omega: std::f64::consts::FRAC_PI_2,
            dt: 0.05,
            reach: 1.0,
            clearance: 0.5,
            zone_near: 2.0,
            zone_far: 6.0,
        }
    }
}

/// A held bar's endpoints in the holder's body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grip {
    pub p: Vec2,
    pub q: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Robot {
    pub id: u32,
    pub position: Vec2,
    /// Radians in (-pi, pi].
    pub heading: f64,
    #[serde(default)]
    pub holding: Option<u32>,
    #[serde(default = "default_robot_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grip: Option<Grip>,
}

fn default_robot_radius() -> f64 {
    0.5
}

impl Robot {
    pub fn new(id: u32, position: Vec2, heading: f64) -> Self {
        Robot { id, position, heading: normalize_angle(heading), holding: None, radius: default_robot_radius(), grip: None }
    }

    fn to_world(&self, local: Vec2) -> Vec2 {
        self.position + local.rotated(self.heading)
    }

    fn to_local(&self, world: Vec2) -> Vec2 {
        (world - self.position).rotated(-self.heading)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub id: u32,
    pub p: Vec2,
    pub q: Vec2,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

fn default_half_width() -> f64 {
    0.1
}

impl Bar {
    pub fn new(id: u32, p: Vec2, q: Vec2) -> Self {
        Bar { id, p, q, half_width: default_half_width() }
    }

    pub fn center(&self) -> Vec2 {
        (self.p + self.q) * 0.5
    }

    pub fn half_length(&self) -> f64 {
        self.p.dist(self.q) * 0.5
    }

    /// Unit normal of the bar (left of p -> q).
    pub fn normal(&self) -> Vec2 {
        (self.q - self.p).normalized().perp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: u32,
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub robots: Vec<Robot>,
    #[serde(default)]
    pub bars: Vec<Bar>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Per-tick probability that an action increment is replaced by a random one of the same size.
    pub exec_p: f64,
    /// Standard deviation of Gaussian noise on sensed position (units) and heading (radians).
    pub sense_sigma: f64,
}

/// A world change that is not caused by any robot's own action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    /// Moves an obstacle or bar so its center lands on `center`; bars may also be turned to `heading`.
    MoveObject {
        id: u32,
        center: Vec2,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        heading: Option<f64>,
    },
    AddObstacle { id: u32, center: Vec2, radius: f64 },
    RemoveObject { id: u32 },
    TeleportRobot { id: u32, position: Vec2, heading: f64 },
    /// Replaces an entry argument of the running program; the value is expression source.
    SetEntryArg { index: usize, value: String },
    ForceRelease { robot: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExogenousEvent {
    pub at_tick: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// What a step did beyond plain kinematics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepLog {
    pub notes: Vec<String>,
    pub events_applied: Vec<EventKind>,
}

pub const PRIMITIVES: &[(&str, usize)] = &[("move", 0), ("rotate", 0), ("grab-bar", 1), ("release-bar", 0)];

impl World {
    pub fn new(params: Params) -> Self {
        World { params, robots: Vec::new(), bars: Vec::new(), obstacles: Vec::new(), tick: 0 }
    }

    pub fn from_json(text: &str) -> Result<Self, WorldError> {
        let w: World = serde_json::from_str(text).map_err(|e| WorldError::Invalid(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let p = &self.params;
        if !(p.dt > 0.0) || !(p.v >= 0.0) || !(p.omega >= 0.0) || !(p.reach > 0.0) || !(p.clearance >= 0.0) {
            return Err(WorldError::Invalid("dt and reach must be positive; v, omega and clearance non-negative".into()));
        }
        if !(p.zone_far > p.zone_near && p.zone_near >= 0.0) {
            return Err(WorldError::Invalid("zone_far must exceed zone_near >= 0".into()));
        }
        let mut seen = BTreeSet::new();
        let ids = self.robots.iter().map(|r| r.id).chain(self.bars.iter().map(|b| b.id)).chain(self.obstacles.iter().map(|o| o.id));
        for id in ids {
            if !seen.insert(id) {
                return Err(WorldError::DuplicateId(id));
            }
        }
        if self.robots.iter().any(|r| !(r.radius > 0.0))
            || self.bars.iter().any(|b| !(b.half_width > 0.0) || b.p.dist(b.q) < 1e-9)
            || self.obstacles.iter().any(|o| !(o.radius > 0.0))
        {
            return Err(WorldError::Invalid("all radii and bar lengths must be positive".into()));
        }
        for r in &self.robots {
            if let Some(b) = r.holding {
                if self.bar(b).is_none() {
                    return Err(WorldError::UnknownObject(b));
                }
            }
        }
        Ok(())
    }

    pub fn robot(&self, id: u32) -> Option<&Robot> {
        self.robots.iter().find(|r| r.id == id)
    }

    fn robot_mut(&mut self, id: u32) -> Option<&mut Robot> {
        self.robots.iter_mut().find(|r| r.id == id)
    }

    pub fn bar(&self, id: u32) -> Option<&Bar> {
        self.bars.iter().find(|b| b.id == id)
    }

    pub fn obstacle(&self, id: u32) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| o.id == id)
    }

    pub fn holder_of(&self, bar: u32) -> Option<u32> {
        self.robots.iter().find(|r| r.holding == Some(bar)).map(|r| r.id)
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.params.dt
    }

    pub fn contains_id(&self, id: u32) -> bool {
        self.robot(id).is_some() || self.bar(id).is_some() || self.obstacle(id).is_some()
    }

    /// Obstacles and bars nobody holds.
    pub fn blockers(&self) -> Vec<Blocker> {
        let obstacles = self.obstacles.iter().map(|o| Blocker::Circle { id: o.id, center: o.center, radius: o.radius });
        let bars = self
            .bars
            .iter()
            .filter(|b| self.holder_of(b.id).is_none())
            .map(|b| Blocker::Capsule { id: b.id, p: b.p, q: b.q, radius: b.half_width });
        obstacles.chain(bars).collect()
    }

    /// Sensed view for one robot: its own pose with optional Gaussian noise.
    pub fn sense(&self, robot: u32, noise: &NoiseConfig, rng: &mut WorldRng) -> Result<Sensed, WorldError> {
        let r = self.robot(robot).ok_or(WorldError::UnknownRobot(robot))?;
        let (mut position, mut heading) = (r.position, r.heading);
        if noise.sense_sigma > 0.0 {
            let s = noise.sense_sigma;
            let (dx, dy, dh): (f64, f64, f64) =
                (StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng));
            position = position + Vec2::new(dx * s, dy * s);
            heading = normalize_angle(heading + dh * s);
        }
        Ok(Sensed { robot, position, heading })
    }

    /// One tick: action increments in the order given, then events in order,
    /// then the clock advances.
    pub fn step(
        &mut self,
        commands: &[(u32, ActionCommand)],
        events: &[EventKind],
        noise: &NoiseConfig,
        rng: &mut WorldRng,
    ) -> Result<StepLog, WorldError> {
        for (id, _) in commands {
            if self.robot(*id).is_none() {
                return Err(WorldError::UnknownRobot(*id));
            }
        }
        let mut log = StepLog::default();
        for (id, cmd) in commands {
            self.apply_command(*id, cmd, noise, rng, &mut log)?;
        }
        for e in events {
            self.apply_event(e)?;
            log.events_applied.push(e.clone());
        }
        self.tick += 1;
        Ok(log)
    }

    fn apply_command(
        &mut self,
        id: u32,
        cmd: &ActionCommand,
        noise: &NoiseConfig,
        rng: &mut WorldRng,
        log: &mut StepLog,
    ) -> Result<(), WorldError> {
        let p = self.params;
        let (name, args) = match cmd {
            ActionCommand::Nil => return Ok(()),
            ActionCommand::Primitive { name, args } => (name.as_str(), args.as_slice()),
        };
        let perturb = noise.exec_p > 0.0 && matches!(name, "move" | "rotate") && rng.random_bool(noise.exec_p.min(1.0));
        match name {
            "move" => {
                let r = self.robot(id).expect("checked");
                let dir = if perturb {
                    Vec2::from_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
                } else {
                    Vec2::from_angle(r.heading)
                };
                let step = dir * (p.v * p.dt);
                let t = geometry::contact_fraction(r.position, step, r.radius, &self.blockers());
                if t < 1.0 {
                    log.notes.push(format!("robot {id}: move blocked"));
                }
                let r = self.robot_mut(id).expect("checked");
                r.position = r.position + step * t;
            }
            "rotate" => {
                let turn = if perturb && rng.random_bool(0.5) { -p.omega * p.dt } else { p.omega * p.dt };
                let r = self.robot_mut(id).expect("checked");
                r.heading = normalize_angle(r.heading + turn);
            }
            "grab-bar" => {
                let bar_id = match args {
                    [Value::ObjectRef(b)] => *b,
                    [Value::Real(b)] if *b >= 0.0 && b.fract() == 0.0 => *b as u32,
                    _ => return Err(WorldError::UnknownAction(format!("grab-bar with arguments {args:?}"))),
                };
                let bar = self.bar(bar_id).ok_or(WorldError::UnknownObject(bar_id))?.clone();
                let r = self.robot(id).expect("checked");
                let center = bar.center();
                let d = r.position.dist(center);
                let facing = d > 1e-9 && normalize_angle((center - r.position).angle() - r.heading).abs() <= self.grab_angle();
                let taken = self.holder_of(bar_id).is_some_and(|h| h != id);
                if d <= p.reach && facing && !taken && r.holding.is_none() {
                    let grip = Grip { p: r.to_local(bar.p), q: r.to_local(bar.q) };
                    let r = self.robot_mut(id).expect("checked");
                    r.holding = Some(bar_id);
                    r.grip = Some(grip);
                } else if r.holding != Some(bar_id) {
                    log.notes.push(format!("robot {id}: grab-failed on bar {bar_id}"));
                }
            }
            "release-bar" => {
                let r = self.robot_mut(id).expect("checked");
                r.holding = None;
                r.grip = None;
            }
            other => return Err(WorldError::UnknownAction(other.to_string())),
        }
        self.carry(id);
        Ok(())
    }

    /// Largest heading error at which a grab still succeeds.
    pub fn grab_angle(&self) -> f64 {
        6f64.to_radians()
    }

    /// Moves a held bar rigidly with its holder.
    fn carry(&mut self, robot: u32) {
        let Some(r) = self.robot(robot) else { return };
        let (Some(bar), Some(grip)) = (r.holding, r.grip) else { return };
        let (p, q) = (r.to_world(grip.p), r.to_world(grip.q));
        if let Some(b) = self.bars.iter_mut().find(|b| b.id == bar) {
            b.p = p;
            b.q = q;
        }
    }

    pub fn apply_event(&mut self, e: &EventKind) -> Result<(), WorldError> {
        match e {
            EventKind::MoveObject { id, center, heading } => {
                if let Some(o) = self.obstacles.iter_mut().find(|o| o.id == *id) {
                    o.center = *center;
                } else if let Some(b) = self.bars.iter_mut().find(|b| b.id == *id) {
                    let half = (b.q - b.p) * 0.5;
                    let half = match heading {
                        Some(h) => Vec2::from_angle(*h) * half.norm(),
                        None => half,
                    };
                    b.p = *center - half;
                    b.q = *center + half;
                    let holder = self.robots.iter_mut().find(|r| r.holding == Some(*id));
                    if let Some(r) = holder {
                        r.holding = None;
                        r.grip = None;
                    }
                } else if let Some(r) = self.robot_mut(*id) {
                    r.position = *center;
                    if let Some(h) = heading {
                        r.heading = normalize_angle(*h);
                    }
                    self.carry(*id);
                } else {
                    return Err(WorldError::UnknownObject(*id));
                }
            }
            EventKind::AddObstacle { id, center, radius } => {
                if self.contains_id(*id) {
                    return Err(WorldError::DuplicateId(*id));
                }
                if !(*radius > 0.0) {
                    return Err(WorldError::Invalid("obstacle radius must be positive".into()));
                }
                self.obstacles.push(Obstacle { id: *id, center: *center, radius: *radius });
            }
            EventKind::RemoveObject { id } => {
                if let Some(i) = self.obstacles.iter().position(|o| o.id == *id) {
                    self.obstacles.remove(i);
                } else if let Some(i) = self.bars.iter().position(|b| b.id == *id) {
                    self.bars.remove(i);
                    for r in self.robots.iter_mut().filter(|r| r.holding == Some(*id)) {
                        r.holding = None;
                        r.grip = None;
                    }
                } else if let Some(i) = self.robots.iter().position(|r| r.id == *id) {
                    self.robots.remove(i);
                } else {
                    return Err(WorldError::UnknownObject(*id));
                }
            }
            EventKind::TeleportRobot { id, position, heading } => {
                let r = self.robot_mut(*id).ok_or(WorldError::UnknownRobot(*id))?;
                r.position = *position;
                r.heading = normalize_angle(*heading);
                self.carry(*id);
            }
            EventKind::SetEntryArg { .. } => {}
            EventKind::ForceRelease { robot } => {
                let r = self.robot_mut(*robot).ok_or(WorldError::UnknownRobot(*robot))?;
                r.holding = None;
                r.grip = None;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> WorldRng {
        WorldRng::seed_from_u64(0)
    }

    fn prim(name: &str, args: Vec<Value>) -> ActionCommand {
        ActionCommand::Primitive { name: name.into(), args }
    }

    fn one_robot(x: f64, y: f64, heading: f64) -> World {
        let mut w = World::new(Params::default());
        w.robots.push(Robot::new(1, Vec2::new(x, y), heading));
        w
    }

    #[test]
    fn move_increment() {
        let mut w = one_robot(0.0, 0.0, 0.0);
        w.step(&[(1, prim("move", vec![]))], &[], &NoiseConfig::default(), &mut rng()).unwrap();
        assert!((w.robots[0].position.x - 0.05).abs() < 1e-12);
        assert_eq!(w.robots[0].position.y, 0.0);
        assert_eq!(w.tick, 1);
    }

    #[test]
    fn rotate_wraps() {
        let step = Params::default().omega * Params::default().dt;
        let mut w = one_robot(0.0, 0.0, std::f64::consts::PI - step / 2.0);
        w.step(&[(1, prim("rotate", vec![]))], &[], &NoiseConfig::default(), &mut rng()).unwrap();
        let h = w.robots[0].heading;
        assert!(h > -std::f64::consts::PI && h <= std::f64::consts::PI);
        assert!((h - (-std::f64::consts::PI + step / 2.0)).abs() < 1e-9);
    }

    #[test]
    fn grab_out_of_reach_fails_with_note() {
        let mut w = one_robot(0.0, -3.0, std::f64::consts::FRAC_PI_2);
        w.bars.push(Bar::new(2, Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)));
        let log = w.step(&[(1, prim("grab-bar", vec![Value::ObjectRef(2)]))], &[], &NoiseConfig::default(), &mut rng()).unwrap();
        assert_eq!(w.robots[0].holding, None);
        assert!(log.notes.iter().any(|n| n.contains("grab-failed")));
    }

    #[test]
    fn held_bar_moves_rigidly() {
        let mut w = one_robot(0.0, -0.8, std::f64::consts::FRAC_PI_2);
        w.bars.push(Bar::new(2, Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)));
        let mut r = rng();
        let nn = NoiseConfig::default();
        w.step(&[(1, prim("grab-bar", vec![Value::ObjectRef(2)]))], &[], &nn, &mut r).unwrap();
        assert_eq!(w.robots[0].holding, Some(2));
        for _ in 0..7 {
            w.step(&[(1, prim("rotate", vec![]))], &[], &nn, &mut r).unwrap();
            w.step(&[(1, prim("move", vec![]))], &[], &nn, &mut r).unwrap();
        }
        let rb = &w.robots[0];
        let b = &w.bars[0];
        let expect_p = rb.position + rb.grip.unwrap().p.rotated(rb.heading);
        assert!(b.p.dist(expect_p) < 1e-9);
        assert!((b.p.dist(b.q) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn blocked_move_stops_at_contact() {
        let mut w = one_robot(0.0, 0.0, 0.0);
        w.obstacles.push(Obstacle { id: 9, center: Vec2::new(1.6, 0.0), radius: 1.0 });
        let mut r = rng();
        for _ in 0..40 {
            w.step(&[(1, prim("move", vec![]))], &[], &NoiseConfig::default(), &mut r).unwrap();
        }
        let x = w.robots[0].position.x;
        assert!(x <= 0.1 + 1e-9 && x > 0.1 - 1e-6, "x = {x}");
    }

    #[test]
    fn events_and_errors() {
        let mut w = one_robot(0.0, 0.0, 0.0);
        w.obstacles.push(Obstacle { id: 9, center: Vec2::new(5.0, 5.0), radius: 2.0 });
        let nn = NoiseConfig::default();
        let log = w.step(&[], &[EventKind::RemoveObject { id: 9 }], &nn, &mut rng()).unwrap();
        assert!(w.obstacles.is_empty());
        assert_eq!(log.events_applied.len(), 1);
        assert_eq!(w.step(&[], &[EventKind::RemoveObject { id: 9 }], &nn, &mut rng()), Err(WorldError::UnknownObject(9)));
        assert_eq!(w.step(&[(7, ActionCommand::Nil)], &[], &nn, &mut rng()), Err(WorldError::UnknownRobot(7)));
        assert!(w.apply_event(&EventKind::AddObstacle { id: 1, center: Vec2::new(0.0, 0.0), radius: 1.0 }).is_err());
    }

    #[test]
    fn sense_noise_statistics() {
        let w = one_robot(0.0, 0.0, 0.0);
        let noise = NoiseConfig { exec_p: 0.0, sense_sigma: 0.1 };
        let mut r = rng();
        let xs: Vec<f64> = (0..10_000).map(|_| w.sense(1, &noise, &mut r).unwrap().position.x).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((var.sqrt() - 0.1).abs() < 0.01, "std = {}", var.sqrt());
        let exact = w.sense(1, &NoiseConfig::default(), &mut r).unwrap();
        assert_eq!((exact.position, exact.heading), (Vec2::new(0.0, 0.0), 0.0));
    }

    #[test]
    fn world_json_round_trip() {
        let mut w = one_robot(1.0, 2.0, 0.5);
        w.bars.push(Bar::new(2, Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0)));
        let text = serde_json::to_string(&w).unwrap();
        assert_eq!(World::from_json(&text).unwrap(), w);
        let ev: ExogenousEvent = serde_json::from_str(r#"{"at_tick":5,"type":"remove_object","id":3}"#).unwrap();
        assert_eq!(ev.kind, EventKind::RemoveObject { id: 3 });
    }
}
