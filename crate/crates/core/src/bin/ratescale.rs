//! Command-line front end: live server, batch grids, replay checks, tables.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ratescale::batch::{replay_cmd, run_batch, table, BatchGrid, ReplayError, ReplayOutcome};
use ratescale::environment::EnvironmentSpec;
use ratescale::operators::OperatorKind;
use ratescale::riskfield::ControlParams;
use ratescale::scaling::Method;
use ratescale::service::{serve, ServeConfig};
use ratescale::session::SessionConfig;
use ratescale::trial::PressRule;

#[derive(Parser)]
#[command(version, about = "Variable-scaling rate control: live sessions and headless experiments")]
#[command(after_help = "Control parameters can be overridden with RATESCALE_S_C, RATESCALE_P_C, RATESCALE_R_UAV, \
RATESCALE_A_MAX, RATESCALE_D_C, RATESCALE_S_D, RATESCALE_SAMPLE_RESOLUTION and RATESCALE_SLEW_LIMIT.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve one live session over a WebSocket.
    Serve {
        /// Shipped map name (env1..env4) or a map file.
        #[arg(long)]
        env: String,
        #[arg(long, default_value = "r3")]
        method: Method,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Cap on scale increases, in units of S_c per second.
        #[arg(long)]
        slew: Option<f64>,
        /// Accept target presses anywhere.
        #[arg(long)]
        lenient_press: bool,
        /// Where finished trial logs go.
        #[arg(long, default_value = "logs")]
        log_dir: PathBuf,
        #[arg(long, default_value_t = 25)]
        broadcast_rate: u32,
    },
    /// Run a grid of scripted trials and write logs plus a summary table.
    Run {
        /// Comma-separated map names or files.
        #[arg(long, value_delimiter = ',', required = true)]
        env: Vec<String>,
        /// Comma-separated methods.
        #[arg(long, value_delimiter = ',', default_value = "c,h,r1,r2,r3")]
        method: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_value = "waypoint")]
        operator: Vec<OperatorKind>,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 120.0)]
        cap_seconds: f64,
        #[arg(long)]
        lenient_press: bool,
    },
    /// Re-simulate a log and check it reproduces bit for bit.
    Replay { log: PathBuf },
    /// Rebuild the mean/std table from a directory of trial summaries.
    Table {
        dir: PathBuf,
        #[arg(long, default_value = "summary.csv")]
        out: PathBuf,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn press_rule(lenient: bool) -> PressRule {
    if lenient {
        PressRule::Lenient
    } else {
        PressRule::WithinTarget
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Serve { env, method, port, host, slew, lenient_press, log_dir, broadcast_rate } => {
            let mut params = ControlParams::from_env().map_err(config_err)?;
            if slew.is_some() {
                params.slew_limit = slew;
                params.validate().map_err(config_err)?;
            }
            let env = EnvironmentSpec::resolve(&env).map_err(config_err)?;
            let mut config = ServeConfig::new(SessionConfig {
                press_rule: press_rule(lenient_press),
                ..SessionConfig::with_params(method, env, params)
            });
            config.broadcast_rate = broadcast_rate;
            config.log_dir = Some(log_dir);
            config.validate().map_err(config_err)?;

            let rt = tokio::runtime::Runtime::new().map_err(runtime_err)?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .map_err(|e| config_err(format!("cannot bind {host}:{port}: {e}")))?;
                eprintln!("serving on ws://{}", listener.local_addr().map_err(runtime_err)?);
                let shutdown = async {
                    let _ = tokio::signal::ctrl_c().await;
                };
                let report = serve(config, listener, shutdown).await.map_err(runtime_err)?;
                for p in &report.logs_written {
                    eprintln!("wrote {}", p.display());
                }
                Ok(())
            })
        }
        Command::Run { env, method, operator, repeats, out, cap_seconds, lenient_press } => {
            let envs = env.iter().map(|e| EnvironmentSpec::resolve(e)).collect::<Result<Vec<_>, _>>().map_err(config_err)?;
            if !(cap_seconds > 0.0) {
                return Err(config_err("--cap-seconds must be positive"));
            }
            let mut grid = BatchGrid::new(method, envs, operator, repeats);
            grid.cap_seconds = cap_seconds;
            grid.params = ControlParams::from_env().map_err(config_err)?;
            grid.press_rule = press_rule(lenient_press);
            let report = run_batch(&grid, &out).map_err(runtime_err)?;
            let incomplete = report.cells.iter().filter(|c| !c.summary.completed).count();
            println!("{} trials ({} incomplete), table at {}", report.cells.len(), incomplete, report.csv_path.display());
            Ok(())
        }
        Command::Replay { log } => {
            let report = replay_cmd(&log).map_err(|e| match e {
                ReplayError::Session(_) => runtime_err(e),
                _ => config_err(e),
            })?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            match report.outcome {
                ReplayOutcome::Match { ticks } => {
                    println!("match ({ticks} ticks)");
                    Ok(())
                }
                ReplayOutcome::Diverged { tick, field, logged, replayed } => Err(runtime_err(format!(
                    "diverged at tick {tick}: {field} logged {logged}, replayed {replayed}"
                ))),
                ReplayOutcome::SummaryMismatch { logged, replayed } => {
                    Err(runtime_err(format!("summary mismatch: logged {logged:?}, replayed {replayed:?}")))
                }
            }
        }
        Command::Table { dir, out } => {
            let rows = table(&dir, &out).map_err(config_err)?;
            println!("{} rows written to {}", rows.len(), out.display());
            Ok(())
        }
    }
}
