//! Forward-control methods: joystick deflection to commanded velocity.
//!
//! All five methods share the rate-control form `v = S * p_i`; they differ in
//! how the scale is composed:
//!
//! | method | `S_x`                          | `S_y`                          |
//! |--------|--------------------------------|--------------------------------|
//! | `c`    | `S_c`                          | `S_c`                          |
//! | `h`    | `S_c S_human`                  | `S_c S_human`                  |
//! | `r1`   | `S_c S_human (1 - C_r)`        | `S_c S_human (1 - C_r)`        |
//! | `r2`   | `S_c S_human (1 - C_rx)`       | `S_c S_human (1 - C_ry)`       |
//! | `r3`   | `S_c S_human (1 - C_rx^dir)`   | `S_c S_human (1 - C_ry^dir)`   |
//!
//! `r2` and `r3` apply the scales in the risk frame, whose X-axis points at the
//! riskiest obstacle point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::ObstacleCloud;
use crate::geometry::Vec2;
use crate::riskfield::{self, ControlParams, LocalFrame, RiskError, RiskReport, RobotState, Sign};

/// Largest deflection norm accepted from a 2-axis device (full diagonal).
pub const MAX_RAW_DEFLECTION: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("joystick deflection is not finite")]
    NonFinite,
    #[error("joystick deflection norm {0} exceeds the device range")]
    OutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown method `{0}` (expected one of c, h, r1, r2, r3)")]
pub struct ParseMethodError(String);

/// One sample of the operator's device.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JoystickInput {
    pub p_i: Vec2,
    pub button: bool,
}

impl JoystickInput {
    pub const NEUTRAL: JoystickInput = JoystickInput { p_i: Vec2::ZERO, button: false };

    pub fn new(p_i: Vec2, button: bool) -> Result<Self, InputError> {
        if !p_i.is_finite() {
            return Err(InputError::NonFinite);
        }
        let n = p_i.norm();
        if n > MAX_RAW_DEFLECTION + 1e-9 {
            return Err(InputError::OutOfRange(n));
        }
        Ok(JoystickInput { p_i, button })
    }

    /// Deflection limited to the unit disc.
    pub fn clamped(&self) -> Vec2 {
        self.p_i.clamp_norm(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    C,
    H,
    R1,
    R2,
    R3,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::C, Method::H, Method::R1, Method::R2, Method::R3];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::C => "c",
            Method::H => "h",
            Method::R1 => "r1",
            Method::R2 => "r2",
            Method::R3 => "r3",
        }
    }

    pub fn uses_risk(self) -> bool {
        matches!(self, Method::R1 | Method::R2 | Method::R3)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = ParseMethodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ParseMethodError(s.to_string()))
    }
}

/// The scale factors behind one command, plus the risk assessment they used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleDiagnostics {
    pub s_human: f64,
    /// `1 - C_r` from the isotropic risk, whatever the method.
    pub s_risk: f64,
    /// Applied scale along the frame's X-axis, m/s per unit deflection.
    pub s_x: f64,
    pub s_y: f64,
    /// Frame `s_x`/`s_y` act in; the global frame for `c`, `h`, `r1`.
    pub frame: LocalFrame,
    pub risk: RiskReport,
}

impl ScaleDiagnostics {
    /// Velocity these scales produce for a (clamped) deflection.
    pub fn apply(&self, p: Vec2) -> Vec2 {
        let local = self.frame.to_local(p);
        self.frame.to_global(Vec2::new(self.s_x * local.x, self.s_y * local.y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub v: Vec2,
    pub diagnostics: ScaleDiagnostics,
}

pub fn human_scale(p_i: Vec2, p_c: f64) -> f64 {
    (p_i.norm() / p_c).min(1.0)
}

/// Whether the risk field is evaluated for methods that do not use it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Assessment {
    /// Always assess, so diagnostics are comparable across methods.
    #[default]
    Always,
    /// Skip the field for `c` and `h`; their risk diagnostics read as clear.
    WhenUsed,
}

pub fn compute_command(
    method: Method,
    input: &JoystickInput,
    state: &RobotState,
    cloud: &ObstacleCloud,
    params: &ControlParams,
) -> Result<VelocityCommand, RiskError> {
    compute_command_over(method, input, state, &cloud.points, params, Assessment::Always)
}

/// [`compute_command`] over a bare slice of obstacle points.
pub fn compute_command_over(
    method: Method,
    input: &JoystickInput,
    state: &RobotState,
    points: &[Vec2],
    params: &ControlParams,
    assessment: Assessment,
) -> Result<VelocityCommand, RiskError> {
    let p = input.clamped();
    let s_human = human_scale(p, params.p_c);

    let risk = if method.uses_risk() || assessment == Assessment::Always {
        riskfield::assess_with(state, points, params, |frame| {
            let local = frame.to_local(p);
            (Sign::of(local.x), Sign::of(local.y))
        })?
    } else {
        let capsule = riskfield::critical_region(state, params);
        RiskReport::clear(capsule, riskfield::field_extent(state.velocity.norm(), params))
    };

    let base = params.s_c * s_human;
    let (s_x, s_y, frame) = match method {
        Method::C => (params.s_c, params.s_c, LocalFrame::GLOBAL),
        Method::H => (base, base, LocalFrame::GLOBAL),
        Method::R1 => {
            let s = base * (1.0 - risk.c_r);
            (s, s, LocalFrame::GLOBAL)
        }
        Method::R2 => (base * (1.0 - risk.c_rx), base * (1.0 - risk.c_ry), risk.frame),
        Method::R3 => (base * (1.0 - risk.c_rx_directed), base * (1.0 - risk.c_ry_directed), risk.frame),
    };
    let diagnostics = ScaleDiagnostics { s_human, s_risk: 1.0 - risk.c_r, s_x, s_y, frame, risk };
    Ok(VelocityCommand { v: diagnostics.apply(p), diagnostics })
}

/// Caps how fast `s_x` and `s_y` may grow: by at most `rate * s_c * dt` per step.
/// Decreases pass through untouched.
pub fn slew_limit(prev: &ScaleDiagnostics, next: &ScaleDiagnostics, dt: f64, rate: f64, s_c: f64) -> ScaleDiagnostics {
    let step = rate * s_c * dt;
    let cap = |before: f64, after: f64| if after > before + step { before + step } else { after };
    ScaleDiagnostics { s_x: cap(prev.s_x, next.s_x), s_y: cap(prev.s_y, next.s_y), ..*next }
}

/// Stateful wrapper applying [`slew_limit`] across consecutive commands.
#[derive(Debug, Clone, Default)]
pub struct SlewLimiter {
    prev: Option<ScaleDiagnostics>,
}

impl SlewLimiter {
    pub fn new() -> Self {
        SlewLimiter::default()
    }

    pub fn reset(&mut self) {
        self.prev = None;
    }

    /// Limits `cmd` against the previous command and recomputes its velocity.
    pub fn limit(&mut self, cmd: VelocityCommand, input: &JoystickInput, dt: f64, rate: f64, s_c: f64) -> VelocityCommand {
        // A limiter at rest starts from zero scale: nothing may jump straight to full speed.
        let prev = self.prev.unwrap_or(ScaleDiagnostics { s_x: 0.0, s_y: 0.0, ..cmd.diagnostics });
        let diagnostics = slew_limit(&prev, &cmd.diagnostics, dt, rate, s_c);
        self.prev = Some(diagnostics);
        VelocityCommand { v: diagnostics.apply(input.clamped()), diagnostics }
    }
}
