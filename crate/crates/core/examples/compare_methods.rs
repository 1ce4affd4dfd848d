//! Runs the waypoint operator once per method on each map and prints the four
//! trial metrics side by side, followed by the per-method means.
//!
//! ```text
//! cargo run --release --example compare_methods -- [--gain G] [env1 path/to/map.json ...]
//! ```

use ratescale::operators::{WaypointOperator, WaypointParams};
use ratescale::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut params = WaypointParams::default();
    let mut envs = Vec::new();
    let mut args = std::env::args().skip(1);
    while let Some(a) = args.next() {
        if a == "--gain" {
            params.gain = args.next().ok_or("--gain needs a value")?.parse()?;
        } else {
            envs.push(a);
        }
    }
    if envs.is_empty() {
        envs = EnvironmentSpec::shipped_names().map(String::from).collect();
    }

    let mut sums = [[0.0; 4]; 5];
    println!("{:<6} {:>6} {:>9} {:>9} {:>9} {:>10} {:>5}", "env", "method", "t_trial", "d_total", "t_coll", "overshoot", "done");
    for name in &envs {
        let env = EnvironmentSpec::resolve(name)?;
        for (k, method) in Method::ALL.into_iter().enumerate() {
            let mut op = OperatorPolicy::Waypoint(WaypointOperator::new(params));
            let m = run_trial(SessionConfig::new(method, env.clone()), &mut op, 120.0)?.log.summary.metrics();
            for (s, v) in sums[k].iter_mut().zip([m.t_trial, m.d_total, m.t_collision, m.d_overshoot]) {
                *s += v / envs.len() as f64;
            }
            println!(
                "{:<6} {:>6} {:>9.2} {:>9.2} {:>9.2} {:>10.3} {:>5}",
                env.name(),
                method.as_str(),
                m.t_trial,
                m.d_total,
                m.t_collision,
                m.d_overshoot,
                m.completed
            );
        }
    }
    for (method, s) in Method::ALL.iter().zip(sums) {
        println!("{:<6} {:>6} {:>9.2} {:>9.2} {:>9.2} {:>10.3}", "mean", method.as_str(), s[0], s[1], s[2], s[3]);
    }
    Ok(())
}
