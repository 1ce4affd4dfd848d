//! Headless experiments: grid runs, summary tables and replay verification.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{load_environment, EnvironmentError, EnvironmentSpec};
use crate::operators::{replay_policy, OperatorKind, OperatorPolicy};
use crate::riskfield::ControlParams;
use crate::scaling::Method;
use crate::session::{run_trial, SessionConfig, SessionError, TrialRun};
use crate::trial::{read_log, write_log, LogError, PressRule, TickLog, TrialLog, TrialSummary, LOG_SCHEMA};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Log { path: PathBuf, source: LogError },
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("the replay operator needs a recorded log; run grids take waypoint or adversarial")]
    ReplayInGrid,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BatchError + '_ {
    move |source| BatchError::Io { path: path.to_path_buf(), source }
}

/// Methods × environments × operators × repeats.
#[derive(Debug, Clone)]
pub struct BatchGrid {
    pub methods: Vec<Method>,
    pub envs: Vec<EnvironmentSpec>,
    pub operators: Vec<OperatorKind>,
    pub repeats: usize,
    /// Trials still running after this long are recorded as incomplete.
    pub cap_seconds: f64,
    pub params: ControlParams,
    pub press_rule: PressRule,
}

impl BatchGrid {
    pub fn new(methods: Vec<Method>, envs: Vec<EnvironmentSpec>, operators: Vec<OperatorKind>, repeats: usize) -> Self {
        BatchGrid {
            methods,
            envs,
            operators,
            repeats,
            cap_seconds: 120.0,
            params: ControlParams::default(),
            press_rule: PressRule::WithinTarget,
        }
    }

    /// Cells in output order: environment, then method, operator, repeat.
    pub fn cells(&self) -> Vec<Cell<'_>> {
        let mut out = Vec::new();
        for env in &self.envs {
            for &method in &self.methods {
                for &operator in &self.operators {
                    for repeat in 0..self.repeats {
                        out.push(Cell { env, method, operator, repeat });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Cell<'a> {
    pub env: &'a EnvironmentSpec,
    pub method: Method,
    pub operator: OperatorKind,
    pub repeat: usize,
}

impl Cell<'_> {
    pub fn stem(&self) -> String {
        format!("{}_{}_{}_{:02}", self.env.name(), self.method, self.operator, self.repeat)
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub log_path: PathBuf,
    pub summary: TrialSummary,
    pub max_accel: f64,
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub cells: Vec<CellResult>,
    pub table: Vec<AggregateRow>,
    pub csv_path: PathBuf,
}

pub const SUMMARY_CSV: &str = "summary.csv";

/// Runs every cell, in parallel, writing `<stem>.jsonl` and `<stem>.summary.json`
/// per cell plus an aggregate `summary.csv` into `out_dir`.
pub fn run_batch(grid: &BatchGrid, out_dir: &Path) -> Result<BatchReport, BatchError> {
    if grid.operators.contains(&OperatorKind::Replay) {
        return Err(BatchError::ReplayInGrid);
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let cells = grid.cells();
    let results = cells
        .par_iter()
        .map(|cell| {
            let config = SessionConfig {
                press_rule: grid.press_rule,
                ..SessionConfig::with_params(cell.method, cell.env.clone(), grid.params)
            };
            let mut op = match cell.operator {
                OperatorKind::Waypoint => OperatorPolicy::waypoint(),
                _ => OperatorPolicy::Adversarial,
            };
            let run = run_trial(config, &mut op, grid.cap_seconds)?;
            save_cell(&run, out_dir, &cell.stem())
        })
        .collect::<Result<Vec<_>, _>>()?;

    let summaries: Vec<TrialSummary> = results.iter().map(|r| r.summary.clone()).collect();
    let table = aggregate(&summaries);
    let csv_path = out_dir.join(SUMMARY_CSV);
    write_table(&table, &csv_path)?;
    Ok(BatchReport { cells: results, table, csv_path })
}

fn save_cell(run: &TrialRun, dir: &Path, stem: &str) -> Result<CellResult, BatchError> {
    let log_path = dir.join(format!("{stem}.jsonl"));
    save_log(&run.log, &log_path)?;
    let summary_path = dir.join(format!("{stem}.summary.json"));
    let text = serde_json::to_string_pretty(&run.log.summary)
        .map_err(|source| BatchError::Json { path: summary_path.clone(), source })?;
    fs::write(&summary_path, text + "\n").map_err(io_err(&summary_path))?;
    Ok(CellResult { log_path, summary: run.log.summary.clone(), max_accel: run.max_accel })
}

pub fn save_log(log: &TrialLog, path: &Path) -> Result<(), BatchError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_log(log, BufWriter::new(file)).map_err(io_err(path))
}

pub fn load_log(path: &Path) -> Result<TrialLog, BatchError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_log(BufReader::new(file)).map_err(|source| BatchError::Log { path: path.to_path_buf(), source })
}

/// Mean and sample standard deviation of the four metrics for one (method, env).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub env: String,
    pub trials: usize,
    pub completed: usize,
    pub t_trial_mean: f64,
    pub t_trial_std: f64,
    pub d_total_mean: f64,
    pub d_total_std: f64,
    pub t_collision_mean: f64,
    pub t_collision_std: f64,
    pub d_overshoot_mean: f64,
    pub d_overshoot_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups summaries by (method, env), ordered by method then first appearance of env.
pub fn aggregate(summaries: &[TrialSummary]) -> Vec<AggregateRow> {
    let mut envs: Vec<&str> = Vec::new();
    for s in summaries {
        if !envs.contains(&s.env.as_str()) {
            envs.push(&s.env);
        }
    }
    let mut rows = Vec::new();
    for method in Method::ALL {
        for env in &envs {
            let group: Vec<&TrialSummary> = summaries.iter().filter(|s| s.method == method && s.env == *env).collect();
            if group.is_empty() {
                continue;
            }
            let col = |f: fn(&TrialSummary) -> f64| mean_std(&group.iter().map(|s| f(s)).collect::<Vec<_>>());
            let (t_trial_mean, t_trial_std) = col(|s| s.t_trial);
            let (d_total_mean, d_total_std) = col(|s| s.d_total);
            let (t_collision_mean, t_collision_std) = col(|s| s.t_collision);
            let (d_overshoot_mean, d_overshoot_std) = col(|s| s.d_overshoot);
            rows.push(AggregateRow {
                method,
                env: env.to_string(),
                trials: group.len(),
                completed: group.iter().filter(|s| s.completed).count(),
                t_trial_mean,
                t_trial_std,
                d_total_mean,
                d_total_std,
                t_collision_mean,
                t_collision_std,
                d_overshoot_mean,
                d_overshoot_std,
            });
        }
    }
    rows
}

pub fn write_table(rows: &[AggregateRow], path: &Path) -> Result<(), BatchError> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        // serde only emits headers alongside the first record.
        w.write_record([
            "method", "env", "trials", "completed", "t_trial_mean", "t_trial_std", "d_total_mean", "d_total_std",
            "t_collision_mean", "t_collision_std", "d_overshoot_mean", "d_overshoot_std",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))
}

/// Summaries from every `*.summary.json` in `dir`, in file-name order.
pub fn read_summaries(dir: &Path) -> Result<Vec<TrialSummary>, BatchError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".summary.json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|source| BatchError::Json { path: p.clone(), source })
        })
        .collect()
}

/// Rebuilds the aggregate table from a directory of per-trial summaries.
pub fn table(dir: &Path, out: &Path) -> Result<Vec<AggregateRow>, BatchError> {
    let rows = aggregate(&read_summaries(dir)?);
    write_table(&rows, out)?;
    Ok(rows)
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("log schema {found} is not readable by this build (schema {LOG_SCHEMA})")]
    Schema { found: u32 },
    #[error("logged environment: {0}")]
    Environment(#[from] EnvironmentError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Load(#[from] BatchError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReplayOutcome {
    /// Every tick and the summary reproduce bit for bit.
    Match { ticks: usize },
    /// First tick (0-based) whose re-simulation differs from the log.
    Diverged { tick: usize, field: &'static str, logged: String, replayed: String },
    /// Ticks agree but the recorded summary does not.
    SummaryMismatch { logged: Box<TrialSummary>, replayed: Box<TrialSummary> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayReport {
    pub outcome: ReplayOutcome,
    pub warnings: Vec<String>,
}

impl ReplayReport {
    pub fn is_match(&self) -> bool {
        matches!(self.outcome, ReplayOutcome::Match { .. })
    }
}

/// First field in which two ticks differ, compared bit for bit.
pub fn first_difference(a: &TickLog, b: &TickLog) -> Option<(&'static str, String, String)> {
    let floats = [
        ("t", a.t, b.t),
        ("px", a.position.x, b.position.x),
        ("py", a.position.y, b.position.y),
        ("vx", a.velocity.x, b.velocity.x),
        ("vy", a.velocity.y, b.velocity.y),
        ("ix", a.input.x, b.input.x),
        ("iy", a.input.y, b.input.y),
        ("cx", a.command.x, b.command.x),
        ("cy", a.command.y, b.command.y),
        ("s_human", a.s_human, b.s_human),
        ("s_x", a.s_x, b.s_x),
        ("s_y", a.s_y, b.s_y),
        ("c_r", a.c_r, b.c_r),
        ("c_rx", a.c_rx, b.c_rx),
        ("c_ry", a.c_ry, b.c_ry),
    ];
    for (name, x, y) in floats {
        if x.to_bits() != y.to_bits() {
            return Some((name, x.to_string(), y.to_string()));
        }
    }
    if a.contact != b.contact {
        return Some(("contact", a.contact.to_string(), b.contact.to_string()));
    }
    if a.button != b.button {
        return Some(("button", a.button.to_string(), b.button.to_string()));
    }
    if a.method != b.method {
        return Some(("method", a.method.to_string(), b.method.to_string()));
    }
    if a.env != b.env {
        return Some(("env", a.env.clone(), b.env.clone()));
    }
    None
}

/// Re-simulates a log from its header and recorded inputs.
pub fn replay_log(log: &TrialLog) -> Result<ReplayReport, ReplayError> {
    let h = &log.header;
    if h.schema != LOG_SCHEMA {
        return Err(ReplayError::Schema { found: h.schema });
    }
    let mut warnings = Vec::new();
    let ours = env!("CARGO_PKG_VERSION");
    if h.version != ours {
        warnings.push(format!("log written by version {}, replaying with {ours}", h.version));
    }
    let env = load_environment(h.env_document.as_bytes())?;
    let config = SessionConfig { method: h.method, env, params: h.params, sim: h.sim, press_rule: h.press_rule };
    let mut op = OperatorPolicy::replay(replay_policy(&log.ticks));
    let cap = log.ticks.len() as f64 * h.sim.dt + 1.0;
    let run = run_trial(config, &mut op, cap)?;

    let replayed = &run.log.ticks;
    for (k, logged) in log.ticks.iter().enumerate() {
        let Some(r) = replayed.get(k) else {
            return Ok(ReplayReport {
                outcome: ReplayOutcome::Diverged {
                    tick: k,
                    field: "trial",
                    logged: "running".into(),
                    replayed: "complete".into(),
                },
                warnings,
            });
        };
        if let Some((field, a, b)) = first_difference(logged, r) {
            return Ok(ReplayReport {
                outcome: ReplayOutcome::Diverged { tick: k, field, logged: a, replayed: b },
                warnings,
            });
        }
    }
    let mut summary = run.log.summary;
    summary.operator.clone_from(&log.summary.operator);
    if summary != log.summary {
        return Ok(ReplayReport {
            outcome: ReplayOutcome::SummaryMismatch { logged: Box::new(log.summary.clone()), replayed: Box::new(summary) },
            warnings,
        });
    }
    Ok(ReplayReport { outcome: ReplayOutcome::Match { ticks: log.ticks.len() }, warnings })
}

pub fn replay_cmd(log_path: &Path) -> Result<ReplayReport, ReplayError> {
    replay_log(&load_log(log_path)?)
}
