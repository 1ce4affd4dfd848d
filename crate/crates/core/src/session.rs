//! One teleoperation session: the per-tick pipeline shared by batch runs,
//! replay verification and the live server.
//!
//! Each tick takes the operator's input, computes the command from the
//! pre-step state, advances the simulator, logs the tick and updates the trial.

use thiserror::Error;

use crate::environment::{sample_obstacles, EnvironmentError, EnvironmentSpec, ObstacleCloud};
use crate::geometry::Vec2;
use crate::operators::OperatorPolicy;
use crate::riskfield::{ControlParams, RiskError, RobotState};
use crate::scaling::{compute_command_over, Assessment, JoystickInput, Method, SlewLimiter, VelocityCommand};
use crate::simulator::{step, SimConfig, StepResult};
use crate::trial::{finalize, update, LogHeader, PressRule, TickLog, TrialLog, TrialState, TrialSummary, LOG_SCHEMA};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub method: Method,
    pub env: EnvironmentSpec,
    pub params: ControlParams,
    pub sim: SimConfig,
    pub press_rule: PressRule,
}

impl SessionConfig {
    /// Default parameters; the simulated robot shares the controller's radius and `a_max`.
    pub fn new(method: Method, env: EnvironmentSpec) -> Self {
        Self::with_params(method, env, ControlParams::default())
    }

    pub fn with_params(method: Method, env: EnvironmentSpec, params: ControlParams) -> Self {
        let sim = SimConfig { dt: SimConfig::default().dt, robot_radius: params.r_uav, a_max: params.a_max };
        SessionConfig { method, env, params, sim, press_rule: PressRule::WithinTarget }
    }
}

/// Everything produced by one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickOutcome {
    pub input: JoystickInput,
    pub command: VelocityCommand,
    pub step: StepResult,
    pub log: TickLog,
}

pub struct Session {
    config: SessionConfig,
    cloud: ObstacleCloud,
    state: RobotState,
    trial: TrialState,
    ticks: Vec<TickLog>,
    limiter: SlewLimiter,
    last: Option<TickOutcome>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, SessionError> {
        config.params.validate()?;
        let cloud = sample_obstacles(&config.env.map, config.params.sample_resolution)?;
        let state = RobotState::at_rest(config.env.start);
        let trial = TrialState::new(config.press_rule);
        Ok(Session { config, cloud, state, trial, ticks: Vec::new(), limiter: SlewLimiter::new(), last: None })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn state(&self) -> &RobotState {
        &self.state
    }

    pub fn trial(&self) -> &TrialState {
        &self.trial
    }

    pub fn ticks(&self) -> &[TickLog] {
        &self.ticks
    }

    pub fn cloud(&self) -> &ObstacleCloud {
        &self.cloud
    }

    pub fn last(&self) -> Option<&TickOutcome> {
        self.last.as_ref()
    }

    /// Robot back at the start, fresh trial, empty log.
    pub fn reset(&mut self) {
        self.state = RobotState::at_rest(self.config.env.start);
        self.trial = TrialState::new(self.config.press_rule);
        self.ticks.clear();
        self.limiter.reset();
        self.last = None;
    }

    /// Switches method or environment; implies [`Session::reset`].
    pub fn reconfigure(&mut self, method: Method, env: EnvironmentSpec) -> Result<(), SessionError> {
        if env != self.config.env {
            self.cloud = sample_obstacles(&env.map, self.config.params.sample_resolution)?;
            self.config.env = env;
        }
        self.config.method = method;
        self.reset();
        Ok(())
    }

    pub fn command_for(&self, input: &JoystickInput) -> Result<VelocityCommand, SessionError> {
        let c = &self.config;
        Ok(compute_command_over(c.method, input, &self.state, &self.cloud.points, &c.params, Assessment::Always)?)
    }

    pub fn tick(&mut self, input: JoystickInput) -> Result<&TickOutcome, SessionError> {
        let mut command = self.command_for(&input)?;
        let c = &self.config;
        if let Some(rate) = c.params.slew_limit {
            command = self.limiter.limit(command, &input, c.sim.dt, rate, c.params.s_c);
        }
        let result = step(&self.state, command.v, &c.sim, &c.env.map);
        let d = &command.diagnostics;
        let (c_rx, c_ry) = match c.method {
            Method::R3 => (d.risk.c_rx_directed, d.risk.c_ry_directed),
            _ => (d.risk.c_rx, d.risk.c_ry),
        };
        let log = TickLog {
            t: result.state.time,
            position: result.state.position,
            velocity: result.state.velocity,
            input: input.p_i,
            command: command.v,
            s_human: d.s_human,
            s_x: d.s_x,
            s_y: d.s_y,
            c_r: d.risk.c_r,
            c_rx,
            c_ry,
            contact: result.in_contact,
            button: input.button,
            method: c.method,
            env: c.env.name().to_string(),
        };
        self.state = result.state;
        if !self.trial.is_complete() {
            self.trial = update(self.trial, &log, &c.env);
            self.ticks.push(log.clone());
        }
        Ok(self.last.insert(TickOutcome { input, command, step: result, log }))
    }

    pub fn header(&self, operator: &str) -> LogHeader {
        let c = &self.config;
        LogHeader {
            schema: LOG_SCHEMA,
            version: env!("CARGO_PKG_VERSION").to_string(),
            method: c.method,
            env: c.env.name().to_string(),
            env_document: c.env.to_json(),
            operator: operator.to_string(),
            params: c.params,
            sim: c.sim,
            press_rule: c.press_rule,
        }
    }

    /// Log of the trial so far, finalized as incomplete if it has not finished.
    pub fn trial_log(&self, operator: &str) -> TrialLog {
        let header = self.header(operator);
        let m = finalize(&self.ticks, &self.trial, &self.config.env, self.config.sim.dt);
        let summary = TrialSummary::new(&header, &m);
        TrialLog { header, ticks: self.ticks.clone(), summary }
    }
}

/// Statistics gathered while running a scripted trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRun {
    pub log: TrialLog,
    /// Largest applied acceleration over every tick, m/s^2.
    pub max_accel: f64,
    /// Ticks simulated, including any after completion.
    pub ticks: usize,
    pub final_position: Vec2,
}

/// Drives a fresh trial with a scripted operator until it completes or `cap_seconds` elapse.
pub fn run_trial(config: SessionConfig, operator: &mut OperatorPolicy, cap_seconds: f64) -> Result<TrialRun, SessionError> {
    let mut session = Session::new(config)?;
    let max_ticks = (cap_seconds / session.config.sim.dt).round() as usize;
    let mut max_accel: f64 = 0.0;
    let mut n = 0;
    while n < max_ticks && !session.trial.is_complete() {
        if matches!(operator, OperatorPolicy::Replay { .. }) && operator.exhausted() {
            break;
        }
        let input = operator.next_input(&session.state, &session.trial, &session.config.env);
        let out = session.tick(input)?;
        max_accel = max_accel.max(out.step.applied_accel.norm());
        n += 1;
    }
    Ok(TrialRun {
        log: session.trial_log(operator.kind().as_str()),
        max_accel,
        ticks: n,
        final_position: session.state.position,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn idle_session_holds_position() {
        let mut s = Session::new(SessionConfig::new(Method::R3, EnvironmentSpec::shipped("env1").unwrap())).unwrap();
        for _ in 0..100 {
            s.tick(JoystickInput::NEUTRAL).unwrap();
        }
        assert_eq!(s.state().position, s.config().env.start);
        assert!(!s.trial().is_complete());
        assert_eq!(s.ticks().len(), 100);
    }

    #[test]
    fn reset_restores_start() {
        let mut s = Session::new(SessionConfig::new(Method::C, EnvironmentSpec::shipped("env2").unwrap())).unwrap();
        for _ in 0..20 {
            s.tick(JoystickInput { p_i: Vec2::new(0.5, 0.5), button: false }).unwrap();
        }
        assert_ne!(s.state().position, s.config().env.start);
        s.reset();
        assert_eq!(s.state().position, s.config().env.start);
        assert!(s.ticks().is_empty());
    }

    #[test]
    fn waypoint_completes_env1_with_constant_scale() {
        let cfg = SessionConfig::new(Method::C, EnvironmentSpec::shipped("env1").unwrap());
        let run = run_trial(cfg, &mut OperatorPolicy::waypoint(), 120.0).unwrap();
        assert!(run.log.summary.completed, "{:?}", run.log.summary);
        assert!(run.max_accel <= 35.0 + 1e-9);
    }
}
