//! Records one trial, writes it as a log, and re-simulates it from the file.
//! A matching replay means the run is reproducible bit for bit.

use ratescale::batch::{replay_cmd, save_log};
use ratescale::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = EnvironmentSpec::shipped("env3")?;
    let run = run_trial(SessionConfig::new(Method::R2, env), &mut OperatorPolicy::waypoint(), 120.0)?;
    let s = &run.log.summary;
    println!("{} ticks, T_trial {:.2} s, D_total {:.2} m, completed {}", run.ticks, s.t_trial, s.d_total, s.completed);

    let dir = std::env::temp_dir().join("ratescale-replay");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("env3-r2.jsonl");
    save_log(&run.log, &path)?;
    let report = replay_cmd(&path)?;
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!("{}: {:?}", path.display(), report.outcome);
    Ok(())
}
