//! Point-robot dynamics at a fixed step.
//!
//! The robot takes the commanded velocity whenever that is reachable within
//! one step at `a_max`; otherwise it accelerates at exactly `a_max` toward it.
//! Positions advance by explicit Euler on the updated velocity. Walls are
//! permeable: contact is reported, never resolved.

use serde::{Deserialize, Serialize};

use crate::environment::{robot_wall_contact, WallMap};
use crate::geometry::Vec2;
use crate::riskfield::RobotState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub robot_radius: f64,
    pub a_max: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 0.01, robot_radius: 0.2, a_max: 35.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub state: RobotState,
    pub applied_accel: Vec2,
    pub clamped: bool,
    pub in_contact: bool,
}

/// Advances one step toward the commanded velocity `command`.
pub fn step(state: &RobotState, command: Vec2, config: &SimConfig, map: &WallMap) -> StepResult {
    let dv = command - state.velocity;
    let max_dv = config.a_max * config.dt;
    let dv_norm = dv.norm();
    let (velocity, applied_accel, clamped) = if dv_norm <= max_dv {
        (command, dv / config.dt, false)
    } else {
        let unit = dv / dv_norm;
        (state.velocity + unit * max_dv, unit * config.a_max, true)
    };
    let position = state.position + velocity * config.dt;
    StepResult {
        state: RobotState { position, velocity, time: state.time + config.dt },
        applied_accel,
        clamped,
        in_contact: robot_wall_contact(position, config.robot_radius, map),
    }
}

/// Folds [`step`] over a command stream.
pub fn run(
    initial: RobotState,
    commands: impl IntoIterator<Item = Vec2>,
    config: &SimConfig,
    map: &WallMap,
) -> Vec<StepResult> {
    let mut state = initial;
    commands
        .into_iter()
        .map(|c| {
            let r = step(&state, c, config, map);
            state = r.state;
            r
        })
        .collect()
}
