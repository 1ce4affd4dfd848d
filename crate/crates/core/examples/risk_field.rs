//! Evaluates the risk field for a robot moving down a straight 1 m hallway and
//! prints what each method would command for a full push along the hallway.
//!
//! ```text
//! cargo run --example risk_field -- [speed_m_per_s]
//! ```

use ratescale::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let speed: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2.0);
    let map = WallMap {
        name: "hallway".into(),
        walls: vec![
            Segment::new(Vec2::new(-10.0, 0.5), Vec2::new(10.0, 0.5)),
            Segment::new(Vec2::new(-10.0, -0.5), Vec2::new(10.0, -0.5)),
        ],
    };
    let params = ControlParams::default();
    let cloud = sample_obstacles(&map, params.sample_resolution)?;
    let state = RobotState { position: Vec2::ZERO, velocity: Vec2::new(speed, 0.0), time: 0.0 };
    let input = JoystickInput::new(Vec2::X, false)?;

    let report = assess(&state, &cloud, &params, (Sign::Positive, Sign::Positive))?;
    println!("speed {speed} m/s, {} obstacle points", cloud.len());
    println!("critical region length {:.4} m, field extent {:.4} m", report.capsule.total_length(), report.d);
    println!("c_r {:.4}  argmax {:?}", report.c_r, report.argmax_point);
    println!("frame x_hat {:?}  ({:.2} deg)", report.frame.x_hat, report.frame.angle().to_degrees());
    println!("c_rx {:.4}  c_ry {:.4}", report.c_rx, report.c_ry);
    for method in Method::ALL {
        let cmd = compute_command(method, &input, &state, &cloud, &params)?;
        let d = &cmd.diagnostics;
        println!(
            "{:>3}: v = ({:+.4}, {:+.4})  |v| = {:.4}  s_x {:.4}  s_y {:.4}",
            method.as_str(),
            cmd.v.x,
            cmd.v.y,
            cmd.v.norm(),
            d.s_x,
            d.s_y
        );
    }
    Ok(())
}
