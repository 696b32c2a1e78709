//! Wire format of the control service: one JSON object per websocket text
//! message, discriminated by `type`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tr_core::botworld::{EventKind, World};
use tr_core::sim::{Scenario, TraceRecord};

/// Client to server. Every request may carry an `id`, echoed by the reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Load {
        scenario: Box<Scenario>,
    },
    Start,
    Pause,
    Step {
        #[serde(default = "one")]
        n: u64,
    },
    /// Ticks per second; 0 runs unpaced.
    SetRate {
        rate: f64,
    },
    /// Applied at the end of tick `at_tick`, by default the next tick to run.
    Inject {
        event: EventKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        at_tick: Option<u64>,
    },
    /// Replaces this connection's subscription.
    Subscribe {
        #[serde(default = "one")]
        decimation: u64,
        /// Attach the full world to every Nth snapshot (the first always has it).
        #[serde(default = "ten")]
        world_every: u64,
    },
}

fn one() -> u64 {
    1
}

fn ten() -> u64 {
    10
}

/// Server to client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Ack {
        id: Value,
    },
    Error {
        id: Value,
        reason: String,
    },
    Snapshot {
        record: Box<TraceRecord>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        world: Option<Box<World>>,
    },
    Finished {
        tick: u64,
        reason: String,
    },
}

impl Reply {
    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("replies always serialise")
    }
}

/// Splits a raw message into its id and request. The id is recovered even
/// when the rest is malformed, so the error reply can still carry it.
pub fn decode(text: &str) -> (Value, Result<Request, String>) {
    let v: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return (Value::Null, Err(format!("not JSON: {e}"))),
    };
    let id = v.get("id").cloned().unwrap_or(Value::Null);
    let req = serde_json::from_value(v).map_err(|e| format!("bad request: {e}"));
    (id, req)
}

/// A request with an id, ready to send.
pub fn encode(id: impl Into<Value>, req: &Request) -> String {
    let mut v = serde_json::to_value(req).expect("requests always serialise");
    v["id"] = id.into();
    v.to_string()
}
