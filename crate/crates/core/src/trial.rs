//! Trial state machine, per-tick logs and trial metrics.
//!
//! A trial visits the environment's four targets in order. The clock starts at
//! the first nonzero deflection and stops when the button is pressed at the
//! final target. Each tick is logged; the metrics are a pure function of the
//! tick log and the environment.
//!
//! Log files are JSON lines: a `{"header": ...}` line, one flat object per tick,
//! and a closing `{"summary": ...}` line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{EnvironmentSpec, TARGET_COUNT};
use crate::geometry::Vec2;
use crate::riskfield::ControlParams;
use crate::scaling::Method;
use crate::simulator::SimConfig;

/// Version of the log layout; bumped on incompatible changes.
pub const LOG_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum TrialError {
    #[error("trial never started: no nonzero input was issued")]
    NotStarted,
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log is empty")]
    Empty,
    #[error("log line {line}: missing summary record (truncated log?)")]
    MissingSummary { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialPhase {
    AwaitingFirstInput,
    Running,
    Complete,
}

/// How button presses are validated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PressRule {
    /// A press counts only within the current target's radius.
    #[default]
    WithinTarget,
    /// Any press advances to the next target.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialState {
    pub phase: TrialPhase,
    pub next_target_index: usize,
    /// Time the first command was issued.
    pub started_at: Option<f64>,
    pub completed_at: Option<f64>,
    pub exited_hallway: bool,
    pub press_rule: PressRule,
    last_button: bool,
    last_t: f64,
    ticks_seen: usize,
    start_tick: Option<usize>,
    end_tick: Option<usize>,
    exit_tick: Option<usize>,
}

impl TrialState {
    pub fn new(press_rule: PressRule) -> Self {
        TrialState {
            phase: TrialPhase::AwaitingFirstInput,
            next_target_index: 0,
            started_at: None,
            completed_at: None,
            exited_hallway: false,
            press_rule,
            last_button: false,
            last_t: 0.0,
            ticks_seen: 0,
            start_tick: None,
            end_tick: None,
            exit_tick: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.phase == TrialPhase::Complete
    }

    /// Index of the tick that started the trial.
    pub fn start_tick(&self) -> Option<usize> {
        self.start_tick
    }
}

/// One simulation tick as logged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TickRecord", into = "TickRecord")]
pub struct TickLog {
    /// Time at the end of the tick, s.
    pub t: f64,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Raw device deflection.
    pub input: Vec2,
    /// Commanded velocity.
    pub command: Vec2,
    pub s_human: f64,
    pub s_x: f64,
    pub s_y: f64,
    pub c_r: f64,
    /// Directional risks as applied by the method (directed for `r3`).
    pub c_rx: f64,
    pub c_ry: f64,
    pub contact: bool,
    pub button: bool,
    pub method: Method,
    pub env: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TickRecord {
    t: f64,
    px: f64,
    py: f64,
    vx: f64,
    vy: f64,
    ix: f64,
    iy: f64,
    cx: f64,
    cy: f64,
    s_human: f64,
    s_x: f64,
    s_y: f64,
    c_r: f64,
    c_rx: f64,
    c_ry: f64,
    contact: bool,
    button: bool,
    method: Method,
    env: String,
}

impl From<TickRecord> for TickLog {
    fn from(r: TickRecord) -> Self {
        TickLog {
            t: r.t,
            position: Vec2::new(r.px, r.py),
            velocity: Vec2::new(r.vx, r.vy),
            input: Vec2::new(r.ix, r.iy),
            command: Vec2::new(r.cx, r.cy),
            s_human: r.s_human,
            s_x: r.s_x,
            s_y: r.s_y,
            c_r: r.c_r,
            c_rx: r.c_rx,
            c_ry: r.c_ry,
            contact: r.contact,
            button: r.button,
            method: r.method,
            env: r.env,
        }
    }
}

impl From<TickLog> for TickRecord {
    fn from(l: TickLog) -> Self {
        TickRecord {
            t: l.t,
            px: l.position.x,
            py: l.position.y,
            vx: l.velocity.x,
            vy: l.velocity.y,
            ix: l.input.x,
            iy: l.input.y,
            cx: l.command.x,
            cy: l.command.y,
            s_human: l.s_human,
            s_x: l.s_x,
            s_y: l.s_y,
            c_r: l.c_r,
            c_rx: l.c_rx,
            c_ry: l.c_ry,
            contact: l.contact,
            button: l.button,
            method: l.method,
            env: l.env,
        }
    }
}

/// Advances the trial by one logged tick. Ticks after completion are ignored.
pub fn update(trial: TrialState, tick: &TickLog, env: &EnvironmentSpec) -> TrialState {
    let mut s = trial;
    if s.phase == TrialPhase::Complete {
        return s;
    }
    let k = s.ticks_seen;

    if s.phase == TrialPhase::AwaitingFirstInput && tick.input != Vec2::ZERO {
        s.phase = TrialPhase::Running;
        s.started_at = Some(s.last_t);
        s.start_tick = Some(k);
    }
    if !s.exited_hallway && env.hallway_exit.is_past(tick.position) {
        s.exited_hallway = true;
        s.exit_tick = Some(k);
    }
    let pressed = tick.button && !s.last_button;
    if pressed && s.phase == TrialPhase::Running {
        let target = &env.targets[s.next_target_index];
        let valid = match s.press_rule {
            PressRule::Lenient => true,
            PressRule::WithinTarget => tick.position.distance(target.position) <= target.radius,
        };
        if valid {
            if s.next_target_index + 1 == TARGET_COUNT {
                s.phase = TrialPhase::Complete;
                s.completed_at = Some(tick.t);
                s.end_tick = Some(k);
            } else {
                s.next_target_index += 1;
            }
        }
    }
    s.last_button = tick.button;
    s.last_t = tick.t;
    s.ticks_seen += 1;
    s
}

/// Folds [`update`] over a whole log.
pub fn replay_trial(logs: &[TickLog], env: &EnvironmentSpec, press_rule: PressRule) -> TrialState {
    logs.iter().fold(TrialState::new(press_rule), |s, t| update(s, t, env))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub t_trial: f64,
    pub d_total: f64,
    pub t_collision: f64,
    pub d_overshoot: f64,
    pub completed: bool,
}

/// Length of the polyline through `points`.
pub fn path_length(points: impl IntoIterator<Item = Vec2>) -> f64 {
    let mut it = points.into_iter();
    let Some(mut prev) = it.next() else { return 0.0 };
    let mut total = 0.0;
    for p in it {
        total += p.distance(prev);
        prev = p;
    }
    total
}

/// Metrics over the running span of a trial. An incomplete trial is measured up to
/// its last tick and flagged `completed = false`.
pub fn metrics(logs: &[TickLog], trial: &TrialState, env: &EnvironmentSpec, dt: f64) -> Result<TrialMetrics, TrialError> {
    let (Some(start), Some(started_at)) = (trial.start_tick, trial.started_at) else {
        return Err(TrialError::NotStarted);
    };
    let completed = trial.is_complete();
    let end = trial.end_tick.unwrap_or(logs.len().saturating_sub(1)).min(logs.len().saturating_sub(1));
    let span = &logs[start.min(end)..=end];
    let stop_time = if completed { trial.completed_at.unwrap_or(logs[end].t) } else { logs[end].t };

    let anchor = if start == 0 { env.start } else { logs[start - 1].position };
    let d_total = path_length(std::iter::once(anchor).chain(span.iter().map(|l| l.position)));
    let t_collision = dt * span.iter().filter(|l| l.contact).count() as f64;

    let final_target = env.final_target().position;
    let exit_dir = env.hallway_exit.exit_dir;
    let d_overshoot = match trial.exit_tick {
        Some(ex) if ex <= end => logs[ex..=end]
            .iter()
            .map(|l| (l.position - final_target).dot(exit_dir).max(0.0))
            .fold(0.0, f64::max),
        _ => 0.0,
    };

    Ok(TrialMetrics { t_trial: stop_time - started_at, d_total, t_collision, d_overshoot, completed })
}

/// Like [`metrics`], but a trial that never started yields all-zero metrics.
pub fn finalize(logs: &[TickLog], trial: &TrialState, env: &EnvironmentSpec, dt: f64) -> TrialMetrics {
    metrics(logs, trial, env, dt).unwrap_or(TrialMetrics {
        t_trial: 0.0,
        d_total: 0.0,
        t_collision: 0.0,
        d_overshoot: 0.0,
        completed: false,
    })
}

/// First line of a log file: everything needed to re-simulate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub schema: u32,
    /// Version of the code that wrote the log.
    pub version: String,
    pub method: Method,
    pub env: String,
    /// The environment the log was recorded in, as a map document.
    pub env_document: String,
    pub operator: String,
    pub params: ControlParams,
    pub sim: SimConfig,
    pub press_rule: PressRule,
}

/// Trial summary: the last line of a log file and a standalone JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSummary {
    pub method: Method,
    pub env: String,
    pub operator: String,
    pub completed: bool,
    pub t_trial: f64,
    pub d_total: f64,
    pub t_collision: f64,
    pub d_overshoot: f64,
}

impl TrialSummary {
    pub fn new(header: &LogHeader, m: &TrialMetrics) -> Self {
        TrialSummary {
            method: header.method,
            env: header.env.clone(),
            operator: header.operator.clone(),
            completed: m.completed,
            t_trial: m.t_trial,
            d_total: m.d_total,
            t_collision: m.t_collision,
            d_overshoot: m.d_overshoot,
        }
    }

    pub fn metrics(&self) -> TrialMetrics {
        TrialMetrics {
            t_trial: self.t_trial,
            d_total: self.d_total,
            t_collision: self.t_collision,
            d_overshoot: self.d_overshoot,
            completed: self.completed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub header: LogHeader,
    pub ticks: Vec<TickLog>,
    pub summary: TrialSummary,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderLine {
    header: LogHeader,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SummaryLine {
    summary: TrialSummary,
}

pub fn write_tick(sink: &mut impl Write, tick: &TickLog) -> std::io::Result<()> {
    serde_json::to_writer(&mut *sink, tick)?;
    sink.write_all(b"\n")
}

pub fn write_log(log: &TrialLog, mut sink: impl Write) -> std::io::Result<()> {
    serde_json::to_writer(&mut sink, &HeaderLine { header: log.header.clone() })?;
    sink.write_all(b"\n")?;
    for t in &log.ticks {
        write_tick(&mut sink, t)?;
    }
    serde_json::to_writer(&mut sink, &SummaryLine { summary: log.summary.clone() })?;
    sink.write_all(b"\n")?;
    sink.flush()
}

pub fn read_log(source: impl BufRead) -> Result<TrialLog, LogError> {
    let mut header = None;
    let mut ticks = Vec::new();
    let mut summary = None;
    let mut line_no = 0;
    for line in source.lines() {
        line_no += 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: serde_json::Error| LogError::Parse { line: line_no, message: e.to_string() };
        if summary.is_some() {
            return Err(LogError::Parse { line: line_no, message: "data after the summary record".into() });
        }
        if header.is_none() {
            let h: HeaderLine = serde_json::from_str(&line).map_err(parse_err)?;
            header = Some(h.header);
        } else if line.starts_with("{\"summary\"") {
            let s: SummaryLine = serde_json::from_str(&line).map_err(parse_err)?;
            summary = Some(s.summary);
        } else {
            ticks.push(serde_json::from_str(&line).map_err(parse_err)?);
        }
    }
    let header = header.ok_or(LogError::Empty)?;
    let summary = summary.ok_or(LogError::MissingSummary { line: line_no })?;
    Ok(TrialLog { header, ticks, summary })
}
