//! Browser bindings for the demo page in `www/`: a live amble world the user
//! can steer, a static checker and a threshold-net playground. Everything
//! crosses the boundary as JSON strings; errors come back as strings too.

use serde_json::json;
use tr_core::analysis::{check_universal, ModelsDoc, PropSequence};
use tr_core::botworld::{EventKind, ExogenousEvent, NoiseConfig, Obstacle, Params, Robot, World};
use tr_core::geom::Vec2;
use tr_core::lang::{parse, ProgramLibrary};
use tr_core::netcomp::{compile, input_vector, verify_equivalence, ThresholdNet};
use tr_core::sim::{stock, Scenario, Sim, WorldSpec};
use wasm_bindgen::prelude::*;

fn first_sequence(source: &str) -> Result<(String, PropSequence), String> {
    let lib: ProgramLibrary = parse(source).map_err(|e| e.to_string())?;
    let name = lib.order.iter().find(|n| lib.programs.contains_key(*n)).ok_or("no `prog` declaration found")?;
    let seq = PropSequence::from_program(&lib.programs[name], None).map_err(|e| e.to_string())?;
    Ok((name.clone(), seq))
}

/// A running scenario plus the goal the user last dropped.
#[wasm_bindgen]
pub struct WebSim {
    sim: Sim,
    last: Option<String>,
}

#[wasm_bindgen]
impl WebSim {
    /// The amble demo: one robot, one obstacle between it and the goal.
    #[wasm_bindgen(js_name = ambleDemo)]
    pub fn amble_demo() -> WebSim {
        let mut world = World::new(Params::default());
        world.robots.push(Robot::new(1, Vec2::new(0.0, 0.0), 0.0));
        world.obstacles.push(Obstacle { id: 5, center: Vec2::new(5.0, 5.0), radius: 2.0 });
        let scenario = Scenario {
            world: WorldSpec::Inline(world),
            program: None,
            source: Some(stock::AMBLE.to_string()),
            entry: Some("amble(point(10, 10))".into()),
            agents: vec![],
            ticks: u64::MAX,
            seed: 0,
            noise: NoiseConfig::default(),
            events: vec![],
            tolerances: None,
        };
        WebSim { sim: Sim::new(&scenario).expect("the demo scenario is valid"), last: None }
    }

    /// Any scenario document with an inline world and program source.
    #[wasm_bindgen(constructor)]
    pub fn new(scenario_json: &str) -> Result<WebSim, String> {
        let s = Scenario::from_json(scenario_json).map_err(|e| e.to_string())?;
        Ok(WebSim { sim: Sim::new(&s).map_err(|e| e.to_string())?, last: None })
    }

    /// Advances `n` ticks and returns the last trace record.
    pub fn step(&mut self, n: u32) -> Result<String, String> {
        for _ in 0..n {
            let rec = self.sim.step().map_err(|e| e.to_string())?;
            self.last = Some(rec.to_json_line());
        }
        Ok(self.last.clone().unwrap_or_else(|| "null".into()))
    }

    pub fn tick(&self) -> f64 {
        self.sim.tick() as f64
    }

    #[wasm_bindgen(js_name = worldJson)]
    pub fn world_json(&self) -> String {
        serde_json::to_string(self.sim.world()).expect("worlds serialise")
    }

    /// Moves an obstacle or bar at the end of the next tick.
    #[wasm_bindgen(js_name = moveObject)]
    pub fn move_object(&mut self, id: u32, x: f64, y: f64) -> Result<(), String> {
        self.inject(EventKind::MoveObject { id, center: Vec2::new(x, y), heading: None })
    }

    /// Re-targets the entry program's first argument.
    #[wasm_bindgen(js_name = setGoal)]
    pub fn set_goal(&mut self, x: f64, y: f64) -> Result<(), String> {
        self.inject(EventKind::SetEntryArg { index: 0, value: format!("point({x:?}, {y:?})") })
    }

    fn inject(&mut self, kind: EventKind) -> Result<(), String> {
        let at_tick = self.sim.tick();
        self.sim.inject(ExogenousEvent { at_tick, kind }).map_err(|e| e.to_string())
    }
}

/// Checks the first `prog` in `source` against a models document; returns the report as JSON.
#[wasm_bindgen(js_name = checkProgram)]
pub fn check_program(source: &str, models_json: &str) -> Result<String, String> {
    let (name, seq) = first_sequence(source)?;
    let doc = ModelsDoc::from_json(models_json).map_err(|e| e.to_string())?;
    let (features, models) = doc.resolve(&seq.features).map_err(|e| e.to_string())?;
    let lib = parse(source).map_err(|e| e.to_string())?;
    let seq = PropSequence::from_program(&lib.programs[&name], Some(&features)).map_err(|e| e.to_string())?;
    let report = check_universal(&seq, &models).map_err(|e| e.to_string())?;
    Ok(json!({ "program": name, "text": report.render(), "report": report }).to_string())
}

/// Compiles the first `prog` to a threshold net; the reply lists the features
/// (input order) and the net itself.
#[wasm_bindgen(js_name = compileNet)]
pub fn compile_net(source: &str) -> Result<String, String> {
    let (name, seq) = first_sequence(source)?;
    let net = compile(&seq);
    let eq = verify_equivalence(&net, &seq).map_err(|e| e.to_string())?;
    Ok(json!({
        "program": name,
        "features": seq.features.names(),
        "net": net,
        "equivalent": eq.equivalent,
        "inputs_checked": eq.inputs_checked,
    })
    .to_string())
}

/// Layer activations of a compiled net (as returned in `compileNet().net`) for an input bitmask.
#[wasm_bindgen(js_name = evalNet)]
pub fn eval_net(net_json: &str, state: u32) -> Result<String, String> {
    let net: ThresholdNet = serde_json::from_str(net_json).map_err(|e| e.to_string())?;
    let acts = net.activations(&input_vector(state, net.n)).map_err(|e| e.to_string())?;
    let action = acts.action.map(|i| net.action_names[i].clone());
    Ok(json!({ "layer1": acts.layer1, "layer2": acts.layer2, "layer3": acts.layer3, "action": action }).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_RULE: &str = "prog three-rule() { x1 and x2 -> b1; x1 -> b2; T -> b1; }";

    #[test]
    fn demo_sim_steps_and_takes_drags() {
        let mut s = WebSim::amble_demo();
        let rec: serde_json::Value = serde_json::from_str(&s.step(5).unwrap()).unwrap();
        assert_eq!(rec["tick"], 4);
        s.move_object(5, 20.0, -20.0).unwrap();
        let rec: serde_json::Value = serde_json::from_str(&s.step(1).unwrap()).unwrap();
        assert_eq!(rec["events_applied"][0]["type"], "move_object");
        assert!(s.move_object(99, 0.0, 0.0).is_err());
        s.set_goal(-3.0, 4.0).unwrap();
        s.step(1).unwrap();
        assert!(s.world_json().contains("\"obstacles\""));
        assert_eq!(s.tick(), 7.0);
    }

    #[test]
    fn net_compiles_and_evaluates() {
        let out: serde_json::Value = serde_json::from_str(&compile_net(THREE_RULE).unwrap()).unwrap();
        assert_eq!(out["features"], json!(["x1", "x2"]));
        assert_eq!(out["equivalent"], true);
        let net = out["net"].to_string();
        let eval = |s| serde_json::from_str::<serde_json::Value>(&eval_net(&net, s).unwrap()).unwrap()["action"].clone();
        assert_eq!(eval(0b11), "b1");
        assert_eq!(eval(0b01), "b2");
        assert_eq!(eval(0b00), "b1");
        assert!(compile_net("prog p() { a or b -> c; }").is_err());
    }

    #[test]
    fn checks_the_stock_abstraction() {
        let out: serde_json::Value =
            serde_json::from_str(&check_program(stock::GOTO_ABSTRACT, stock::GOTO_ABSTRACT_MODELS).unwrap()).unwrap();
        assert_eq!(out["report"]["universal"], true);
        assert!(check_program("prog p() { a -> b; }", "{").is_err());
    }
}
