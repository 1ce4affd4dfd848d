//! Runs a small grid of scripted trials in parallel and prints the aggregate table.
//!
//! ```text
//! cargo run --release --example batch_grid -- [out_dir] [repeats]
//! ```

use std::path::PathBuf;

use ratescale::batch::{run_batch, BatchGrid};
use ratescale::environment::EnvironmentSpec;
use ratescale::operators::OperatorKind;
use ratescale::scaling::Method;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("ratescale-grid"));
    let repeats: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let envs = EnvironmentSpec::shipped_names().map(EnvironmentSpec::shipped).collect::<Result<Vec<_>, _>>()?;
    let grid = BatchGrid::new(Method::ALL.to_vec(), envs, vec![OperatorKind::Waypoint], repeats);
    let report = run_batch(&grid, &out)?;

    println!("{:<4} {:<5} {:>3} {:>9} {:>9} {:>9} {:>11}", "env", "meth", "n", "T_trial", "D_total", "T_coll", "D_overshoot");
    for row in &report.table {
        println!(
            "{:<4} {:<5} {:>3} {:>9.3} {:>9.3} {:>9.3} {:>11.4}",
            row.env, row.method, row.trials, row.t_trial_mean, row.d_total_mean, row.t_collision_mean, row.d_overshoot_mean
        );
    }
    println!("logs and {} in {}", report.csv_path.file_name().unwrap().to_string_lossy(), out.display());
    Ok(())
}
