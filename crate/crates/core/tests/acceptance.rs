//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::io::Cursor;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use common::{random_scene, ref_assess, rng, RefParams};
use ratescale::batch::{replay_cmd, run_batch, BatchGrid, CellResult};
use ratescale::environment::{EnvironmentSpec, ObstacleCloud};
use ratescale::geometry::{Capsule, Segment, Vec2};
use ratescale::operators::{OperatorKind, OperatorPolicy};
use ratescale::riskfield::{assess, point_risk, ControlParams, RobotState, Sign};
use ratescale::scaling::{compute_command, JoystickInput, Method};
use ratescale::session::{run_trial, SessionConfig};
use ratescale::trial::{read_log, write_log};

const ENVS: [&str; 4] = ["env1", "env2", "env3", "env4"];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn a1() -> Verdict {
    let started = Instant::now();
    let mut problems = Vec::new();
    for env in ENVS {
        let spec = EnvironmentSpec::shipped(env).unwrap();
        for method in [Method::R1, Method::R2, Method::R3] {
            let run = run_trial(SessionConfig::new(method, spec.clone()), &mut OperatorPolicy::Adversarial, 60.0).unwrap();
            if run.log.summary.t_collision != 0.0 {
                problems.push(format!("{env}/{method}: T_collision {}", run.log.summary.t_collision));
            }
        }
        let run = run_trial(SessionConfig::new(Method::C, spec.clone()), &mut OperatorPolicy::Adversarial, 5.0).unwrap();
        match run.log.ticks.iter().find(|t| t.contact) {
            Some(t) if t.t <= 5.0 => {}
            _ => problems.push(format!("{env}/c: no contact within 5 s")),
        }
    }
    let secs = started.elapsed().as_secs_f64();
    if secs >= 10.0 {
        problems.push(format!("took {secs:.2} s"));
    }
    let pass = problems.is_empty();
    verdict(pass, if pass { format!("r1/r2/r3 contact-free for 60 s, c hits within 5 s, {secs:.2} s") } else { problems.join("; ") })
}

fn a2() -> Verdict {
    let capsule = Capsule::circle(Vec2::ZERO, 0.2).unwrap();
    let mut worst: f64 = 0.0;
    for d in [0.3, 1.3, 4.0] {
        let eps = 1e-6;
        for (d_o, expected) in [(-eps, 1.0), (0.0, 1.0), (d / 2.0, 0.5), (d, 0.0), (d + eps, 0.0)] {
            let p = Vec2::new(0.2 + d_o, 0.0);
            worst = worst.max((point_risk(p, &capsule, d) - expected).abs());
        }
    }
    verdict(worst <= 1e-12, format!("max branch error {worst:.1e}"))
}

fn a3() -> Verdict {
    let params = ControlParams::default();
    let k = RefParams::default();
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    let mut frame_mismatch = 0;
    for i in 0..100 {
        let scene = random_scene(&mut r, 500, i % 10 == 9);
        let state = RobotState { position: scene.position, velocity: scene.velocity, time: 0.0 };
        let cloud = ObstacleCloud::from_points(scene.points.clone());
        let signs = (
            if r.random_bool(0.5) { Sign::Positive } else { Sign::Negative },
            if r.random_bool(0.5) { Sign::Positive } else { Sign::Negative },
        );
        let got = assess(&state, &cloud, &params, signs).unwrap();
        let want = ref_assess(scene.pos(), scene.vel(), &scene.raw_points(), &k, (signs.0 == Sign::Positive, signs.1 == Sign::Positive));
        for (a, b) in [
            (got.c_r, want.c_r),
            (got.c_rx, want.c_rx),
            (got.c_ry, want.c_ry),
            (got.c_rx_directed, want.c_rx_directed),
            (got.c_ry_directed, want.c_ry_directed),
        ] {
            worst = worst.max((a - b).abs());
        }
        let fx = (got.frame.x_hat.x - want.x_hat.0).abs().max((got.frame.x_hat.y - want.x_hat.1).abs());
        if fx > 1e-6 {
            frame_mismatch += 1;
        }
    }
    verdict(
        worst <= 1e-6 && frame_mismatch == 0,
        format!("max deviation {worst:.1e} over 100 scenes x 500 points, {frame_mismatch} frame mismatches"),
    )
}

fn a4() -> Verdict {
    let params = ControlParams::default();
    let mut r = rng(4);
    let mut failures = Vec::new();
    let mut clear_cases = 0;
    let mut saturated = 0;
    for i in 0..1000 {
        let scene = random_scene(&mut r, 200, i % 5 == 4);
        let state = RobotState { position: scene.position, velocity: scene.velocity, time: 0.0 };
        let cloud = ObstacleCloud::from_points(scene.points);
        let mag = if i % 4 == 0 { r.random_range(0.5..1.0) } else { r.random_range(0.0..1.0) };
        let ang: f64 = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let input = JoystickInput::new(Vec2::new(mag * ang.cos(), mag * ang.sin()), false).unwrap();
        let cmd = |m| compute_command(m, &input, &state, &cloud, &params).unwrap();
        let (c, h, r1, r2, r3) = (cmd(Method::C), cmd(Method::H), cmd(Method::R1), cmd(Method::R2), cmd(Method::R3));

        if !(r1.v.norm() <= h.v.norm() && h.v.norm() <= c.v.norm()) {
            failures.push(format!("case {i}: |r1| {} |h| {} |c| {}", r1.v.norm(), h.v.norm(), c.v.norm()));
        }
        // Same frame for both; compare the per-axis scales and components.
        let (d2, d3) = (&r2.diagnostics, &r3.diagnostics);
        let l2 = d2.frame.to_local(r2.v);
        let l3 = d3.frame.to_local(r3.v);
        if d2.frame != d3.frame || !(d2.s_x <= d3.s_x && d2.s_y <= d3.s_y) || l2.x.abs() > l3.x.abs() + 1e-9 || l2.y.abs() > l3.y.abs() + 1e-9 {
            failures.push(format!("case {i}: r2 axis exceeds r3"));
        }
        if input.p_i.norm() >= 0.5 {
            saturated += 1;
            if (h.v - c.v).norm() > 1e-9 {
                failures.push(format!("case {i}: h != c at |p| {}", input.p_i.norm()));
            }
        }
        if h.diagnostics.risk.c_r == 0.0 {
            clear_cases += 1;
            for (m, v) in [("r1", r1.v), ("r2", r2.v), ("r3", r3.v)] {
                if (v - h.v).norm() > 1e-9 {
                    failures.push(format!("case {i}: {m} != h with c_r = 0"));
                }
            }
        }
    }
    let pass = failures.is_empty() && clear_cases > 0 && saturated > 0;
    verdict(
        pass,
        if pass {
            format!("1000 triples ({saturated} saturated inputs, {clear_cases} clear scenes)")
        } else {
            format!("{} violations, first: {}", failures.len(), failures.first().map(String::as_str).unwrap_or("coverage"))
        },
    )
}

fn mean_of(cells: &[CellResult], method: Method, f: impl Fn(&CellResult) -> f64) -> f64 {
    let xs: Vec<f64> = cells.iter().filter(|c| c.summary.method == method).map(f).collect();
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn a5(cells: &[CellResult], secs: f64) -> Verdict {
    let t = |m| mean_of(cells, m, |c| c.summary.t_trial);
    let (c, r1, r2, r3) = (t(Method::C), t(Method::R1), t(Method::R2), t(Method::R3));
    let incomplete = cells.iter().filter(|c| !c.summary.completed).count();
    let order = r1 > r2 && r2 > r3;
    let bound = r3 <= 1.15 * c;
    let pass = order && bound && secs < 60.0 && incomplete == 0;
    verdict(
        pass,
        format!(
            "mean T_trial c {c:.2} r1 {r1:.2} r2 {r2:.2} r3 {r3:.2}; r1>r2>r3 {order}; r3 <= 1.15 c {bound} (ratio {:.2}); {incomplete} incomplete; {secs:.1} s",
            r3 / c
        ),
    )
}

fn a6(cells: &[CellResult]) -> Verdict {
    let o = |m| mean_of(cells, m, |c| c.summary.d_overshoot);
    let (r1, r3) = (o(Method::R1), o(Method::R3));
    verdict(r3 < r1, format!("mean D_overshoot r1 {r1:.4} m, r3 {r3:.4} m"))
}

fn a7(cells: &[CellResult]) -> Verdict {
    let mut problems = Vec::new();
    let worst = cells.iter().map(|c| c.max_accel).fold(0.0, f64::max);
    if worst > 35.0 + 1e-9 {
        problems.push(format!("max accel {worst}"));
    }
    for cell in cells {
        match replay_cmd(&cell.log_path) {
            Ok(rep) if rep.is_match() => {}
            Ok(rep) => problems.push(format!("{}: {:?}", cell.log_path.display(), rep.outcome)),
            Err(e) => problems.push(format!("{}: {e}", cell.log_path.display())),
        }
        let log = ratescale::batch::load_log(&cell.log_path).unwrap();
        let mut buf = Vec::new();
        write_log(&log, &mut buf).unwrap();
        let back = read_log(Cursor::new(&buf)).unwrap();
        let mut again = Vec::new();
        write_log(&back, &mut again).unwrap();
        if back != log || again != buf {
            problems.push(format!("{}: round trip lossy", cell.log_path.display()));
        }
    }
    let pass = problems.is_empty();
    verdict(
        pass,
        if pass { format!("max accel {worst:.6} m/s^2, {} logs replay bit-exact and round-trip", cells.len()) } else { problems.join("; ") },
    )
}

fn a8() -> Verdict {
    let mut r = rng(8);
    let mut worst_lip: f64 = f64::NEG_INFINITY;
    let mut worst_rigid: f64 = 0.0;
    let pt = |r: &mut rand::rngs::StdRng| Vec2::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0));
    for _ in 0..10_000 {
        let a = pt(&mut r);
        let b = if r.random_bool(0.1) { a } else { pt(&mut r) };
        let rad = r.random_range(0.01..2.0);
        let cap = Capsule::new(Segment::new(a, b), rad).unwrap();
        let (p, q) = (pt(&mut r), pt(&mut r));
        let lip = (cap.signed_distance(p) - cap.signed_distance(q)).abs() - p.distance(q);
        worst_lip = worst_lip.max(lip);

        let theta = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        let shift = pt(&mut r);
        let m = |v: Vec2| v.rotated(theta) + shift;
        let moved = Capsule::new(Segment::new(m(a), m(b)), rad).unwrap();
        worst_rigid = worst_rigid.max((moved.signed_distance(m(p)) - cap.signed_distance(p)).abs());
    }
    verdict(
        worst_lip <= 1e-9 && worst_rigid <= 1e-9,
        format!("10^4 cases: Lipschitz excess {worst_lip:.1e}, rigid-motion deviation {worst_rigid:.1e}"),
    )
}

fn main() -> ExitCode {
    // Extra harness flags from `cargo test` are ignored.
    let mut results = vec![("A1", a1()), ("A2", a2()), ("A3", a3()), ("A4", a4())];

    let dir = tempfile::tempdir().unwrap();
    let envs = ENVS.iter().map(|e| EnvironmentSpec::shipped(e).unwrap()).collect();
    let grid = BatchGrid::new(Method::ALL.to_vec(), envs, vec![OperatorKind::Waypoint], 3);
    let started = Instant::now();
    let report = run_batch(&grid, dir.path()).unwrap();
    let secs = started.elapsed().as_secs_f64();
    results.push(("A5", a5(&report.cells, secs)));
    results.push(("A6", a6(&report.cells)));
    results.push(("A7", a7(&report.cells)));
    results.push(("A8", a8()));

    let mut failed = 0;
    for (id, v) in &results {
        println!("{id} {} {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
