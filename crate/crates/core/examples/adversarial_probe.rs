//! Drives the adversarial operator (full deflection at the nearest wall) for
//! 60 simulated seconds under every method and shipped map, and reports how
//! long the robot spent touching a wall.
//!
//! ```text
//! cargo run --release --example adversarial_probe
//! ```

use ratescale::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<6} {:>6} {:>12} {:>12} {:>14}", "env", "method", "t_contact", "first_hit", "min_clearance");
    for name in EnvironmentSpec::shipped_names() {
        let env = EnvironmentSpec::shipped(name)?;
        for method in Method::ALL {
            let config = SessionConfig::new(method, env.clone());
            let radius = config.sim.robot_radius;
            let mut session = Session::new(config)?;
            let mut op = OperatorPolicy::Adversarial;
            let mut first_hit = None;
            let mut clearance = f64::INFINITY;
            let mut contact_ticks = 0usize;
            for _ in 0..6000 {
                let input = op.next_input(session.state(), session.trial(), &env);
                let out = session.tick(input)?;
                let gap = env.map.min_distance(out.step.state.position) - radius;
                clearance = clearance.min(gap);
                if out.step.in_contact {
                    contact_ticks += 1;
                    first_hit.get_or_insert(out.step.state.time);
                }
            }
            let hit = first_hit.map_or("-".to_string(), |t| format!("{t:.2}s"));
            println!(
                "{:<6} {:>6} {:>11.2}s {:>12} {:>14.3e}",
                name,
                method.as_str(),
                contact_ticks as f64 * 0.01,
                hit,
                clearance
            );
        }
    }
    Ok(())
}
