//! JSON messages exchanged with a live-session client over a WebSocket.
//!
//! Every message is one text frame holding a flat JSON object:
//!
//! ```json
//! {"v":1,"seq":7,"type":"input","p_i":[0.5,0.0],"button":false}
//! ```
//!
//! `v` is the protocol version and `seq` a per-sender counter that must
//! strictly increase. `type` selects the body. Clients send `input` and
//! `control`; the server sends `scene`, `state`, `ack` and `error`.
//! The full schema is in `docs/protocol.md` at the repository root.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{EnvironmentSpec, HallwayExit, TargetSpec};
use crate::geometry::{Segment, Vec2};
use crate::scaling::{JoystickInput, Method};
use crate::session::Session;
use crate::trial::{TrialPhase, TrialSummary};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("malformed message: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported protocol version {0} (expected {PROTOCOL_VERSION})")]
    Version(u32),
}

/// A message with its version and sequence number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub v: u32,
    pub seq: u64,
    #[serde(flatten)]
    pub body: Message,
}

impl Envelope {
    pub fn new(seq: u64, body: Message) -> Self {
        Envelope { v: PROTOCOL_VERSION, seq, body }
    }

    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("wire messages always serialize")
    }

    /// Parses one message and checks its version.
    pub fn decode(text: &str) -> Result<Self, WireError> {
        let env: Envelope = serde_json::from_str(text)?;
        if env.v != PROTOCOL_VERSION {
            return Err(WireError::Version(env.v));
        }
        Ok(env)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Input(InputMsg),
    Control(ControlMsg),
    Scene(Box<SceneMsg>),
    State(Box<StateMsg>),
    Ack { of_seq: u64 },
    Error(ErrorMsg),
}

impl Message {
    /// True for the kinds a client may send.
    pub fn from_client(&self) -> bool {
        matches!(self, Message::Input(_) | Message::Control(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputMsg {
    pub p_i: Vec2,
    pub button: bool,
}

impl From<InputMsg> for JoystickInput {
    fn from(m: InputMsg) -> Self {
        JoystickInput { p_i: m.p_i, button: m.button }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum ControlMsg {
    /// Fresh trial with the current method and environment.
    Start,
    /// Abandon the current trial and return to the start.
    Reset,
    SetMethod { method: Method },
    /// A shipped map name or a map file path readable by the server.
    SetEnv { env: String },
}

/// Static description of the environment, sent on connect and after `set_env`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneMsg {
    pub env: String,
    pub method: Method,
    pub walls: Vec<Segment>,
    pub start: Vec2,
    pub targets: Vec<TargetSpec>,
    pub hallway_exit: HallwayExit,
    pub robot_radius: f64,
    pub dt: f64,
}

impl SceneMsg {
    pub fn new(env: &EnvironmentSpec, method: Method, robot_radius: f64, dt: f64) -> Self {
        SceneMsg {
            env: env.name().to_string(),
            method,
            walls: env.map.walls.clone(),
            start: env.start,
            targets: env.targets.to_vec(),
            hallway_exit: env.hallway_exit,
            robot_radius,
            dt,
        }
    }
}

/// Per-tick snapshot of the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMsg {
    pub time: f64,
    pub position: Vec2,
    pub velocity: Vec2,
    pub input: Vec2,
    pub command: Vec2,
    pub s_human: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub c_r: f64,
    pub c_rx: f64,
    pub c_ry: f64,
    /// Risk frame X-axis angle, radians from global +x.
    pub frame_angle: f64,
    /// Critical region spine and radius.
    pub spine: Segment,
    pub radius: f64,
    pub field_extent: f64,
    pub contact: bool,
    pub phase: TrialPhase,
    pub next_target: usize,
    pub method: Method,
    pub env: String,
    /// Present once the trial has completed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<TrialSummary>,
}

impl StateMsg {
    /// Snapshot after the session's latest tick; `None` before the first tick.
    pub fn from_session(session: &Session, operator: &str) -> Option<Self> {
        let out = session.last()?;
        let d = &out.command.diagnostics;
        let trial = session.trial();
        Some(StateMsg {
            time: out.step.state.time,
            position: out.step.state.position,
            velocity: out.step.state.velocity,
            input: out.input.p_i,
            command: out.command.v,
            s_human: d.s_human,
            s_x: d.s_x,
            s_y: d.s_y,
            c_r: out.log.c_r,
            c_rx: out.log.c_rx,
            c_ry: out.log.c_ry,
            frame_angle: d.frame.angle(),
            spine: d.risk.capsule.spine(),
            radius: d.risk.capsule.radius(),
            field_extent: d.risk.d,
            contact: out.step.in_contact,
            phase: trial.phase,
            next_target: trial.next_target_index,
            method: session.config().method,
            env: session.config().env.name().to_string(),
            summary: trial.is_complete().then(|| session.trial_log(operator).summary),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// Another client already drives this session.
    Busy,
    /// Unparseable message, wrong version, non-increasing `seq` or a
    /// server-only message type. The connection is closed.
    Protocol,
    /// Well-formed but not allowed now, e.g. `set_method` mid-trial.
    Rejected,
    /// Bad argument, e.g. an unknown environment or a non-finite input.
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMsg {
    pub code: ErrorCode,
    pub message: String,
    /// Sequence number of the offending client message, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub of_seq: Option<u64>,
}

/// Tracks one sender's sequence numbers.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeqCheck {
    last: Option<u64>,
}

impl SeqCheck {
    /// Accepts `seq` if it is larger than every earlier one.
    pub fn accept(&mut self, seq: u64) -> bool {
        if self.last.is_some_and(|l| seq <= l) {
            return false;
        }
        self.last = Some(seq);
        true
    }
}
