//! Variable-scaling rate control for teleoperated mobile robots.
//!
//! A joystick deflection `p_i` is mapped to a commanded velocity through a
//! scale factor that can shrink with the operator's deflection and with the
//! risk of collision measured by a parametric risk field around the robot's
//! stopping region. The crate contains the five control methods, a
//! deterministic point-robot simulator, trial bookkeeping and metrics,
//! scripted operators, a batch experiment runner and a WebSocket session
//! server for live steering.
//!
//! ```
//! use ratescale::prelude::*;
//!
//! let env = EnvironmentSpec::shipped("env1").unwrap();
//! let cloud = sample_obstacles(&env.map, 0.02).unwrap();
//! let state = RobotState::at_rest(env.start);
//! let input = JoystickInput::new(Vec2::new(1.0, 0.0), false).unwrap();
//! let cmd = compute_command(Method::R3, &input, &state, &cloud, &ControlParams::default()).unwrap();
//! assert!(cmd.v.norm() <= 5.0);
//! ```

pub mod batch;
pub mod environment;
pub mod geometry;
pub mod operators;
pub mod riskfield;
pub mod scaling;
pub mod service;
pub mod session;
pub mod simulator;
pub mod trial;
pub mod wire;


pub mod prelude {
    pub use crate::environment::{load_environment, sample_obstacles, EnvironmentSpec, ObstacleCloud, WallMap};
    pub use crate::geometry::{Capsule, Segment, Vec2};
    pub use crate::operators::{OperatorKind, OperatorPolicy};
    pub use crate::riskfield::{assess, ControlParams, LocalFrame, RiskReport, RobotState, Sign};
    pub use crate::scaling::{compute_command, JoystickInput, Method, VelocityCommand};
    pub use crate::session::{run_trial, Session, SessionConfig};
    pub use crate::simulator::SimConfig;
    pub use crate::trial::{PressRule, TrialMetrics};
}
