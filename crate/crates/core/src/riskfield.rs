//! Parametric risk field around the stopping region of a moving robot.
//!
//! The critical region is a capsule of radius `R_UAV` whose spine runs from the
//! robot along its current velocity for the braking distance `|V|^2 / (2 a_max)`.
//! Around it a band of thickness `d = d_c + s_d |V|` assigns every obstacle point
//! a risk that falls linearly from 1 on the capsule boundary to 0 at the band's
//! outer edge. The isotropic risk is the maximum over all obstacle points; the
//! directional risks repeat the construction per axis of a frame whose X-axis
//! points at the riskiest obstacle, counting only field points whose
//! axis-parallel line meets the capsule and measuring their distance along that
//! axis alone.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{ObstacleCloud, DEFAULT_SAMPLE_RESOLUTION};
use crate::geometry::{Capsule, GeometryError, Segment, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("risk frame is undefined: highest-risk obstacle point coincides with the robot at ({0}, {1})")]
    DegenerateFrame(f64, f64),
    #[error("invalid control parameter `{name}`: {reason}")]
    Param { name: &'static str, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Tunable constants of the controller and the risk field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlParams {
    /// Constant scale factor, m/s per unit deflection.
    pub s_c: f64,
    /// Deflection below which the human scale factor reduces the gain.
    pub p_c: f64,
    /// Radius of the circle circumscribing the robot, m.
    pub r_uav: f64,
    /// Maximum acceleration magnitude, m/s^2.
    pub a_max: f64,
    /// Field extent at rest, m.
    pub d_c: f64,
    /// Field growth per unit speed, s.
    pub s_d: f64,
    /// Obstacle sampling resolution along walls, m.
    pub sample_resolution: f64,
    /// Optional cap on how fast the per-axis scale may grow, fraction of `s_c` per second.
    #[serde(default)]
    pub slew_limit: Option<f64>,
}

impl Default for ControlParams {
    fn default() -> Self {
        ControlParams {
            s_c: 5.0,
            p_c: 0.5,
            r_uav: 0.2,
            a_max: 35.0,
            d_c: 0.3,
            s_d: 1.0,
            sample_resolution: DEFAULT_SAMPLE_RESOLUTION,
            slew_limit: None,
        }
    }
}

/// Environment variables that override [`ControlParams`] fields.
pub const PARAM_ENV_VARS: [(&str, &str); 8] = [
    ("RATESCALE_S_C", "s_c"),
    ("RATESCALE_P_C", "p_c"),
    ("RATESCALE_R_UAV", "r_uav"),
    ("RATESCALE_A_MAX", "a_max"),
    ("RATESCALE_D_C", "d_c"),
    ("RATESCALE_S_D", "s_d"),
    ("RATESCALE_SAMPLE_RESOLUTION", "sample_resolution"),
    ("RATESCALE_SLEW_LIMIT", "slew_limit"),
];

impl ControlParams {
    pub fn validate(&self) -> Result<(), RiskError> {
        let fields = [
            ("s_c", self.s_c),
            ("p_c", self.p_c),
            ("r_uav", self.r_uav),
            ("a_max", self.a_max),
            ("d_c", self.d_c),
            ("s_d", self.s_d),
            ("sample_resolution", self.sample_resolution),
        ];
        for (name, v) in fields.into_iter().chain(self.slew_limit.map(|r| ("slew_limit", r))) {
            if !(v.is_finite() && v > 0.0) {
                return Err(RiskError::Param { name, reason: format!("must be positive and finite, got {v}") });
            }
        }
        Ok(())
    }

    /// Applies overrides from a variable lookup (normally `std::env::var`).
    pub fn with_overrides(
        mut self,
        lookup: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, RiskError> {
        for (var, name) in PARAM_ENV_VARS {
            let Some(raw) = lookup(var) else { continue };
            let value: f64 = raw.trim().parse().map_err(|_| RiskError::Param {
                name,
                reason: format!("{var}={raw:?} is not a number"),
            })?;
            match name {
                "s_c" => self.s_c = value,
                "p_c" => self.p_c = value,
                "r_uav" => self.r_uav = value,
                "a_max" => self.a_max = value,
                "d_c" => self.d_c = value,
                "s_d" => self.s_d = value,
                "sample_resolution" => self.sample_resolution = value,
                "slew_limit" => self.slew_limit = Some(value),
                _ => unreachable!(),
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn from_env() -> Result<Self, RiskError> {
        Self::default().with_overrides(|k| std::env::var(k).ok())
    }
}

/// Kinematic state of the simulated point robot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub time: f64,
}

impl RobotState {
    pub fn at_rest(position: Vec2) -> Self {
        RobotState { position, velocity: Vec2::ZERO, time: 0.0 }
    }
}

/// Orthonormal frame; `y_hat` is `x_hat` rotated by +90 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    pub x_hat: Vec2,
    pub y_hat: Vec2,
}

impl Default for LocalFrame {
    fn default() -> Self {
        LocalFrame::GLOBAL
    }
}

impl LocalFrame {
    pub const GLOBAL: LocalFrame = LocalFrame { x_hat: Vec2::X, y_hat: Vec2::Y };

    pub fn from_x_axis(x_hat: Vec2) -> Self {
        LocalFrame { x_hat, y_hat: x_hat.perp() }
    }

    pub fn axis(&self, axis: Axis) -> Vec2 {
        match axis {
            Axis::X => self.x_hat,
            Axis::Y => self.y_hat,
        }
    }

    /// Global vector to `(x, y)` components in this frame.
    pub fn to_local(&self, v: Vec2) -> Vec2 {
        Vec2::new(v.dot(self.x_hat), v.dot(self.y_hat))
    }

    pub fn to_global(&self, local: Vec2) -> Vec2 {
        self.x_hat * local.x + self.y_hat * local.y
    }

    /// Heading of the X-axis in radians.
    pub fn angle(&self) -> f64 {
        self.x_hat.angle()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Half of an axis that the robot is being commanded toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    /// Zero counts as positive.
    pub fn of(v: f64) -> Sign {
        if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    fn admits(self, side: f64) -> bool {
        match self {
            Sign::Positive => side >= 0.0,
            Sign::Negative => side <= 0.0,
        }
    }
}

/// Everything the risk field knows about one robot state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub capsule: Capsule,
    /// Field extent, m.
    pub d: f64,
    pub c_r: f64,
    pub argmax_point: Option<Vec2>,
    pub frame: LocalFrame,
    pub c_rx: f64,
    pub c_ry: f64,
    pub c_rx_directed: f64,
    pub c_ry_directed: f64,
    /// Motion signs the directed risks were evaluated for.
    pub motion_signs: (Sign, Sign),
}

impl RiskReport {
    /// Report for a scene with nothing inside the field.
    pub fn clear(capsule: Capsule, d: f64) -> Self {
        RiskReport {
            capsule,
            d,
            c_r: 0.0,
            argmax_point: None,
            frame: LocalFrame::GLOBAL,
            c_rx: 0.0,
            c_ry: 0.0,
            c_rx_directed: 0.0,
            c_ry_directed: 0.0,
            motion_signs: (Sign::Positive, Sign::Positive),
        }
    }
}

/// Stopping capsule for the current velocity.
pub fn critical_region(state: &RobotState, params: &ControlParams) -> Capsule {
    let v = state.velocity;
    let braking = v.norm_sq() / (2.0 * params.a_max);
    let end = match v.normalized() {
        Some(dir) => state.position + dir * braking,
        None => state.position,
    };
    Capsule::new(Segment::new(state.position, end), params.r_uav).expect("validated radius and finite state")
}

pub fn field_extent(speed: f64, params: &ControlParams) -> f64 {
    params.d_c + params.s_d * speed
}

/// Risk of an obstacle `d_o` outside the region, for field extent `d`.
pub fn risk_at_distance(d_o: f64, d: f64) -> f64 {
    if d_o > d {
        0.0
    } else if d_o < 0.0 {
        1.0
    } else {
        (d - d_o) / d
    }
}

pub fn point_risk(p: Vec2, capsule: &Capsule, d: f64) -> f64 {
    risk_at_distance(capsule.signed_distance(p), d)
}

/// Maximum point risk over the cloud and the first point attaining it.
pub fn isotropic_risk(cloud: &ObstacleCloud, capsule: &Capsule, d: f64) -> (f64, Option<Vec2>) {
    isotropic_over(&cloud.points, capsule, d)
}

fn isotropic_over(points: &[Vec2], capsule: &Capsule, d: f64) -> (f64, Option<Vec2>) {
    let mut best = 0.0;
    let mut arg = None;
    for &p in points {
        let r = point_risk(p, capsule, d);
        if r > best {
            best = r;
            arg = Some(p);
        }
    }
    (best, arg)
}

pub fn build_frame(robot_pos: Vec2, argmax_point: Option<Vec2>) -> Result<LocalFrame, RiskError> {
    match argmax_point {
        None => Ok(LocalFrame::GLOBAL),
        Some(p) => (p - robot_pos)
            .normalized()
            .map(LocalFrame::from_x_axis)
            .ok_or(RiskError::DegenerateFrame(p.x, p.y)),
    }
}

/// Per-point quantities reused by the directional passes.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    /// Obstacle point minus its closest spine point.
    offset: Vec2,
    /// Signed distance to the capsule.
    sd: f64,
    p: Vec2,
}

impl Candidate {
    fn new(p: Vec2, capsule: &Capsule) -> Self {
        let m = crate::geometry::closest_point_on_segment(p, capsule.spine());
        let offset = p - m;
        Candidate { offset, sd: offset.norm() - capsule.radius(), p }
    }

    /// Directional risk along `axis`, or `None` when the point is not in the eligible set.
    fn axis_risk(&self, capsule: &Capsule, d: f64, axis: Vec2) -> Option<f64> {
        if self.sd <= 0.0 {
            return Some(1.0);
        }
        if !crate::geometry::line_intersects_capsule(self.p, axis, capsule) {
            return None;
        }
        // p - q, with q the closest boundary point, is the offset shortened by the radius.
        let gap = self.offset * (self.sd / (self.sd + capsule.radius()));
        Some(risk_at_distance(gap.dot(axis).abs(), d))
    }

    fn side(&self, axis: Vec2) -> f64 {
        self.offset.dot(axis)
    }
}

/// Points inside the field, i.e. closer than `d` to the critical region.
/// Only these carry any risk, isotropic or directional.
fn candidates(points: &[Vec2], capsule: &Capsule, d: f64) -> Vec<Candidate> {
    points
        .iter()
        .map(|&p| Candidate::new(p, capsule))
        .filter(|c| c.sd < d)
        .collect()
}

fn max_axis_risk<'a>(
    cands: impl IntoIterator<Item = &'a Candidate>,
    capsule: &Capsule,
    d: f64,
    axis: Vec2,
    side: Option<Sign>,
) -> f64 {
    cands
        .into_iter()
        .filter(|c| side.is_none_or(|s| s.admits(c.side(axis))))
        .filter_map(|c| c.axis_risk(capsule, d, axis))
        .fold(0.0, f64::max)
}

pub fn directional_risk(cloud: &ObstacleCloud, capsule: &Capsule, d: f64, frame: &LocalFrame, axis: Axis) -> f64 {
    let cands = candidates(&cloud.points, capsule, d);
    max_axis_risk(&cands, capsule, d, frame.axis(axis), None)
}

pub fn directed_risk(
    cloud: &ObstacleCloud,
    capsule: &Capsule,
    d: f64,
    frame: &LocalFrame,
    axis: Axis,
    motion_sign: Sign,
) -> f64 {
    let cands = candidates(&cloud.points, capsule, d);
    max_axis_risk(&cands, capsule, d, frame.axis(axis), Some(motion_sign))
}

/// Full risk assessment with fixed motion signs for the directed risks.
pub fn assess(
    state: &RobotState,
    cloud: &ObstacleCloud,
    params: &ControlParams,
    motion_signs: (Sign, Sign),
) -> Result<RiskReport, RiskError> {
    assess_with(state, &cloud.points, params, |_| motion_signs)
}

/// Full risk assessment where the motion signs are chosen once the frame is known.
pub fn assess_with(
    state: &RobotState,
    points: &[Vec2],
    params: &ControlParams,
    motion_signs: impl FnOnce(&LocalFrame) -> (Sign, Sign),
) -> Result<RiskReport, RiskError> {
    let capsule = critical_region(state, params);
    let d = field_extent(state.velocity.norm(), params);
    let cands = candidates(points, &capsule, d);

    let mut c_r = 0.0;
    let mut argmax_point = None;
    for c in &cands {
        let r = risk_at_distance(c.sd, d);
        if r > c_r {
            c_r = r;
            argmax_point = Some(c.p);
        }
    }
    let frame = build_frame(state.position, argmax_point)?;
    let signs = motion_signs(&frame);

    let (x, y) = (frame.x_hat, frame.y_hat);
    Ok(RiskReport {
        capsule,
        d,
        c_r,
        argmax_point,
        frame,
        c_rx: max_axis_risk(&cands, &capsule, d, x, None),
        c_ry: max_axis_risk(&cands, &capsule, d, y, None),
        c_rx_directed: max_axis_risk(&cands, &capsule, d, x, Some(signs.0)),
        c_ry_directed: max_axis_risk(&cands, &capsule, d, y, Some(signs.1)),
        motion_signs: signs,
    })
}
