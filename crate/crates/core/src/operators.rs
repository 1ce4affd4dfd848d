//! Scripted operators standing in for a human at the joystick.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::EnvironmentSpec;
use crate::geometry::Vec2;
use crate::riskfield::RobotState;
use crate::scaling::{JoystickInput, Method};
use crate::trial::{TickLog, TrialLog, TrialState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("replay mismatch: log was recorded with {field} `{logged}`, replaying with `{requested}`")]
    HeaderMismatch { field: &'static str, logged: String, requested: String },
    #[error("unknown operator `{0}` (expected waypoint, adversarial or replay)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Waypoint,
    Adversarial,
    Replay,
}

impl OperatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::Waypoint => "waypoint",
            OperatorKind::Adversarial => "adversarial",
            OperatorKind::Replay => "replay",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatorKind {
    type Err = OperatorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "waypoint" => Ok(OperatorKind::Waypoint),
            "adversarial" => Ok(OperatorKind::Adversarial),
            "replay" => Ok(OperatorKind::Replay),
            _ => Err(OperatorError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaypointParams {
    /// Deflection per meter of distance to the aim point.
    pub gain: f64,
    /// Presses only this close to the target, m.
    pub press_tolerance: f64,
    /// ...and only below this speed, m/s.
    pub stop_speed: f64,
    /// Intermediate waypoints count as reached this close, m.
    pub capture_radius: f64,
}

impl Default for WaypointParams {
    fn default() -> Self {
        WaypointParams { gain: 5.0, press_tolerance: 0.1, stop_speed: 0.2, capture_radius: 0.3 }
    }
}

/// Deflection toward `aim`, saturated to the unit disc.
pub fn seek(position: Vec2, aim: Vec2, gain: f64) -> Vec2 {
    ((aim - position) * gain).clamp_norm(1.0)
}

/// Stateless core of the waypoint operator: seek the current target directly,
/// and press once close and slow.
pub fn waypoint_policy(state: &RobotState, trial: &TrialState, env: &EnvironmentSpec, params: &WaypointParams) -> JoystickInput {
    if trial.is_complete() {
        return JoystickInput::NEUTRAL;
    }
    let target = env.targets[trial.next_target_index].position;
    aim_at(state, target, true, params)
}

fn aim_at(state: &RobotState, aim: Vec2, is_target: bool, params: &WaypointParams) -> JoystickInput {
    let press = is_target
        && state.position.distance(aim) <= params.press_tolerance
        && state.velocity.norm() < params.stop_speed;
    JoystickInput { p_i: seek(state.position, aim, params.gain), button: press }
}

/// Waypoint operator following the map's `route` between targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointOperator {
    pub params: WaypointParams,
    leg: usize,
    waypoint: usize,
}

impl WaypointOperator {
    pub fn new(params: WaypointParams) -> Self {
        WaypointOperator { params, leg: 0, waypoint: 0 }
    }

    pub fn next_input(&mut self, state: &RobotState, trial: &TrialState, env: &EnvironmentSpec) -> JoystickInput {
        if trial.is_complete() {
            return JoystickInput::NEUTRAL;
        }
        if trial.next_target_index != self.leg {
            self.leg = trial.next_target_index;
            self.waypoint = 0;
        }
        let route: &[Vec2] = env.route.as_ref().map_or(&[], |r| &r[self.leg]);
        while let Some(&wp) = route.get(self.waypoint) {
            if state.position.distance(wp) > self.params.capture_radius {
                return aim_at(state, wp, false, &self.params);
            }
            self.waypoint += 1;
        }
        waypoint_policy(state, trial, env, &self.params)
    }
}

/// Full deflection toward the nearest wall point. Never presses.
pub fn adversarial_policy(state: &RobotState, env: &EnvironmentSpec) -> JoystickInput {
    let Some((q, wall)) = env.map.nearest_point(state.position) else {
        return JoystickInput::NEUTRAL;
    };
    let dir = (q - state.position).normalized().unwrap_or_else(|| {
        // Sitting exactly on the wall: push along its normal.
        env.map.walls[wall].direction().normalized().map_or(Vec2::X, Vec2::perp)
    });
    JoystickInput { p_i: dir, button: false }
}

/// Raw inputs recorded in a tick log.
pub fn replay_policy(ticks: &[TickLog]) -> Vec<JoystickInput> {
    ticks.iter().map(|t| JoystickInput { p_i: t.input, button: t.button }).collect()
}

/// Recorded inputs, after checking the log was made with this method and environment.
pub fn replay_inputs(log: &TrialLog, method: Method, env: &str) -> Result<Vec<JoystickInput>, OperatorError> {
    if log.header.method != method {
        return Err(OperatorError::HeaderMismatch {
            field: "method",
            logged: log.header.method.to_string(),
            requested: method.to_string(),
        });
    }
    if log.header.env != env {
        return Err(OperatorError::HeaderMismatch { field: "env", logged: log.header.env.clone(), requested: env.to_string() });
    }
    Ok(replay_policy(&log.ticks))
}

/// An operator driving a session tick by tick.
#[derive(Debug, Clone)]
pub enum OperatorPolicy {
    Waypoint(WaypointOperator),
    Adversarial,
    Replay { inputs: Vec<JoystickInput>, cursor: usize },
}

impl OperatorPolicy {
    pub fn waypoint() -> Self {
        OperatorPolicy::Waypoint(WaypointOperator::new(WaypointParams::default()))
    }

    pub fn replay(inputs: Vec<JoystickInput>) -> Self {
        OperatorPolicy::Replay { inputs, cursor: 0 }
    }

    pub fn kind(&self) -> OperatorKind {
        match self {
            OperatorPolicy::Waypoint(_) => OperatorKind::Waypoint,
            OperatorPolicy::Adversarial => OperatorKind::Adversarial,
            OperatorPolicy::Replay { .. } => OperatorKind::Replay,
        }
    }

    /// Inputs past the end of a replay are neutral.
    pub fn next_input(&mut self, state: &RobotState, trial: &TrialState, env: &EnvironmentSpec) -> JoystickInput {
        match self {
            OperatorPolicy::Waypoint(op) => op.next_input(state, trial, env),
            OperatorPolicy::Adversarial => adversarial_policy(state, env),
            OperatorPolicy::Replay { inputs, cursor } => {
                let i = inputs.get(*cursor).copied().unwrap_or(JoystickInput::NEUTRAL);
                *cursor += 1;
                i
            }
        }
    }

    /// True once a replay has emitted every recorded input.
    pub fn exhausted(&self) -> bool {
        matches!(self, OperatorPolicy::Replay { inputs, cursor } if *cursor >= inputs.len())
    }
}
