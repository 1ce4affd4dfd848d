//! Study environments: wall maps, targets, hallway exit, and obstacle sampling.
//!
//! Maps are JSON documents:
//!
//! ```json
//! {
//!   "name": "env1",
//!   "walls": [[[0, 0], [4, 0]], [[4, 0], [4, 3]]],
//!   "start": [1, 1],
//!   "targets": [{"pos": [2, 2], "radius": 0.15}, ...],
//!   "hallway_exit": {"point": [10, 6.5], "dir": [1, 0]},
//!   "hallway_width": 1.0,
//!   "route": [[], [[3.6, 3.5]], [], []]
//! }
//! ```
//!
//! `route` is optional: `route[i]` lists intermediate waypoints a scripted
//! operator passes through on its way to target `i`. Walls are zero-thickness
//! segments and never constrain the robot; they only feed the risk field and
//! the contact check.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Segment, Vec2};

/// Number of targets in every trial.
pub const TARGET_COUNT: usize = 4;

/// Default obstacle sampling resolution, one tenth of the robot radius.
pub const DEFAULT_SAMPLE_RESOLUTION: f64 = 0.02;

pub const DEFAULT_TARGET_RADIUS: f64 = 0.15;

/// Every coordinate of a map must lie within this many meters of the origin.
pub const WORLD_LIMIT: f64 = 1.0e4;

const SHIPPED: [(&str, &str); 4] = [
    ("env1", include_str!("../maps/env1.json")),
    ("env2", include_str!("../maps/env2.json")),
    ("env3", include_str!("../maps/env3.json")),
    ("env4", include_str!("../maps/env4.json")),
];

#[derive(Debug, Error)]
pub enum EnvironmentError {
    #[error("malformed map document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("failed to read map: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid map field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unknown shipped environment `{0}` (expected env1..env4)")]
    UnknownShipped(String),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> EnvironmentError {
    EnvironmentError::Invalid { field, reason: reason.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallMap {
    pub name: String,
    pub walls: Vec<Segment>,
}

impl WallMap {
    /// Axis-aligned bounds `(min, max)` of all wall endpoints.
    pub fn bounds(&self) -> Option<(Vec2, Vec2)> {
        let mut it = self.walls.iter().flat_map(|w| [w.a, w.b]);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            (Vec2::new(lo.x.min(p.x), lo.y.min(p.y)), Vec2::new(hi.x.max(p.x), hi.y.max(p.y)))
        }))
    }

    /// Nearest point on any wall, with the wall index. Ties go to the lower index.
    pub fn nearest_point(&self, pos: Vec2) -> Option<(Vec2, usize)> {
        let mut best: Option<(Vec2, usize, f64)> = None;
        for (i, w) in self.walls.iter().enumerate() {
            let q = crate::geometry::closest_point_on_segment(pos, *w);
            let d = pos.distance(q);
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((q, i, d));
            }
        }
        best.map(|(q, i, _)| (q, i))
    }

    pub fn min_distance(&self, pos: Vec2) -> f64 {
        self.walls.iter().map(|w| w.distance_to(pos)).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    #[serde(rename = "pos")]
    pub position: Vec2,
    pub radius: f64,
}

/// Plane through which the robot leaves the hallway; `dir` points out of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HallwayExit {
    #[serde(rename = "point")]
    pub plane_point: Vec2,
    #[serde(rename = "dir")]
    pub exit_dir: Vec2,
}

impl HallwayExit {
    pub fn is_past(&self, pos: Vec2) -> bool {
        (pos - self.plane_point).dot(self.exit_dir) > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    pub map: WallMap,
    pub start: Vec2,
    pub targets: [TargetSpec; TARGET_COUNT],
    pub hallway_exit: HallwayExit,
    pub hallway_width: f64,
    pub route: Option<[Vec<Vec2>; TARGET_COUNT]>,
}

/// On-disk form of [`EnvironmentSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDocument {
    name: String,
    walls: Vec<Segment>,
    start: Vec2,
    targets: Vec<TargetSpec>,
    hallway_exit: HallwayExit,
    hallway_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    route: Option<Vec<Vec<Vec2>>>,
}

fn in_world(p: Vec2) -> bool {
    p.is_finite() && p.x.abs() <= WORLD_LIMIT && p.y.abs() <= WORLD_LIMIT
}

impl TryFrom<MapDocument> for EnvironmentSpec {
    type Error = EnvironmentError;

    fn try_from(doc: MapDocument) -> Result<Self, Self::Error> {
        if doc.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        if doc.walls.is_empty() {
            return Err(invalid("walls", "at least one wall segment is required"));
        }
        if let Some(i) = doc.walls.iter().position(|w| !in_world(w.a) || !in_world(w.b)) {
            return Err(invalid("walls", format!("wall {i} has a coordinate outside ±{WORLD_LIMIT} m")));
        }
        if !in_world(doc.start) {
            return Err(invalid("start", "coordinate outside the world bounds"));
        }
        if doc.targets.len() != TARGET_COUNT {
            return Err(invalid(
                "targets",
                format!("expected exactly {TARGET_COUNT} targets, found {}", doc.targets.len()),
            ));
        }
        for (i, t) in doc.targets.iter().enumerate() {
            if !in_world(t.position) {
                return Err(invalid("targets", format!("target {i} position outside the world bounds")));
            }
            if !(t.radius.is_finite() && t.radius > 0.0) {
                return Err(invalid("targets", format!("target {i} radius must be positive")));
            }
        }
        let exit = doc.hallway_exit;
        if !in_world(exit.plane_point) {
            return Err(invalid("hallway_exit", "point outside the world bounds"));
        }
        if !exit.exit_dir.is_finite() || (exit.exit_dir.norm() - 1.0).abs() > 1e-9 {
            return Err(invalid("hallway_exit", "dir must be a unit vector"));
        }
        if !(doc.hallway_width.is_finite() && doc.hallway_width > 0.0) {
            return Err(invalid("hallway_width", "must be positive"));
        }
        let route = match doc.route {
            None => None,
            Some(legs) => {
                if legs.len() != TARGET_COUNT {
                    return Err(invalid("route", format!("expected {TARGET_COUNT} legs, found {}", legs.len())));
                }
                if legs.iter().flatten().any(|p| !in_world(*p)) {
                    return Err(invalid("route", "waypoint outside the world bounds"));
                }
                let mut it = legs.into_iter();
                Some(std::array::from_fn(|_| it.next().unwrap_or_default()))
            }
        };
        let targets: [TargetSpec; TARGET_COUNT] = doc.targets.try_into().expect("length checked");
        Ok(EnvironmentSpec {
            map: WallMap { name: doc.name, walls: doc.walls },
            start: doc.start,
            targets,
            hallway_exit: exit,
            hallway_width: doc.hallway_width,
            route,
        })
    }
}

impl EnvironmentSpec {
    pub fn name(&self) -> &str {
        &self.map.name
    }

    pub fn final_target(&self) -> &TargetSpec {
        &self.targets[TARGET_COUNT - 1]
    }

    /// Loads one of the four bundled maps by name (`env1`..`env4`).
    pub fn shipped(name: &str) -> Result<Self, EnvironmentError> {
        let (_, text) = SHIPPED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| EnvironmentError::UnknownShipped(name.to_string()))?;
        load_environment(text.as_bytes())
    }

    pub fn shipped_names() -> impl Iterator<Item = &'static str> {
        SHIPPED.iter().map(|(n, _)| *n)
    }

    /// Accepts either a shipped map name or a path to a map file.
    pub fn resolve(name_or_path: &str) -> Result<Self, EnvironmentError> {
        if SHIPPED.iter().any(|(n, _)| *n == name_or_path) {
            return Self::shipped(name_or_path);
        }
        load_environment(std::fs::File::open(name_or_path)?)
    }

    pub fn to_json(&self) -> String {
        let doc = MapDocument {
            name: self.map.name.clone(),
            walls: self.map.walls.clone(),
            start: self.start,
            targets: self.targets.to_vec(),
            hallway_exit: self.hallway_exit,
            hallway_width: self.hallway_width,
            route: self.route.as_ref().map(|r| r.to_vec()),
        };
        serde_json::to_string_pretty(&doc).expect("map serializes")
    }
}

pub fn load_environment(mut source: impl Read) -> Result<EnvironmentSpec, EnvironmentError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let doc: MapDocument = serde_json::from_str(&text)?;
    doc.try_into()
}

/// Wall points sampled at a fixed maximum spacing, in wall then arclength order.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleCloud {
    pub points: Vec<Vec2>,
    pub resolution: f64,
}

impl ObstacleCloud {
    pub fn from_points(points: Vec<Vec2>) -> Self {
        ObstacleCloud { points, resolution: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn sample_obstacles(map: &WallMap, resolution: f64) -> Result<ObstacleCloud, EnvironmentError> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(EnvironmentError::Argument(format!("sample resolution must be positive, got {resolution}")));
    }
    // Arc-length grid from `a`, then `b`: refining by an integer factor keeps every point.
    let mut points = Vec::new();
    for w in &map.walls {
        let len = w.length();
        let n = (len / resolution).ceil() as usize;
        points.push(w.a);
        for k in 1..n {
            points.push(w.at(k as f64 * resolution / len));
        }
        if n > 0 {
            points.push(w.b);
        }
    }
    Ok(ObstacleCloud { points, resolution })
}

pub fn robot_wall_contact(pos: Vec2, robot_radius: f64, map: &WallMap) -> bool {
    map.walls.iter().any(|w| w.distance_to(pos) <= robot_radius)
}
