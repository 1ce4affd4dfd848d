mod common;

use proptest::prelude::*;

use common::RefCapsule;
use ratescale::environment::{sample_obstacles, EnvironmentSpec, ObstacleCloud, WallMap};
use ratescale::geometry::{capsule_boundary_closest_point, line_intersects_capsule, Capsule, Segment, Vec2};
use ratescale::riskfield::{assess, point_risk, ControlParams, RobotState, Sign};
use ratescale::scaling::{compute_command, JoystickInput, Method};
use ratescale::simulator::{step, SimConfig};
use ratescale::trial::path_length;

fn coord() -> impl Strategy<Value = f64> {
    -20.0..20.0f64
}

fn vec2() -> impl Strategy<Value = Vec2> {
    (coord(), coord()).prop_map(|(x, y)| Vec2::new(x, y))
}

fn capsule() -> impl Strategy<Value = Capsule> {
    (vec2(), prop_oneof![Just(None), vec2().prop_map(Some)], 0.01..3.0f64).prop_map(|(a, b, r)| {
        Capsule::new(Segment::new(a, b.unwrap_or(a)), r).unwrap()
    })
}

fn unit() -> impl Strategy<Value = Vec2> {
    (-std::f64::consts::PI..std::f64::consts::PI).prop_map(|t: f64| Vec2::new(t.cos(), t.sin()))
}

fn deflection() -> impl Strategy<Value = Vec2> {
    (0.0..1.0f64, unit()).prop_map(|(m, u)| u * m)
}

fn state() -> impl Strategy<Value = RobotState> {
    ((-3.0..3.0f64), (-3.0..3.0f64), 0.0..6.0f64, unit()).prop_map(|(x, y, s, u)| RobotState {
        position: Vec2::new(x, y),
        velocity: u * s,
        time: 0.0,
    })
}

fn cloud() -> impl Strategy<Value = Vec<Vec2>> {
    prop::collection::vec(((-5.0..5.0f64), (-5.0..5.0f64)).prop_map(|(x, y)| Vec2::new(x, y)), 0..60)
}

fn refc(c: &Capsule) -> RefCapsule {
    let s = c.spine();
    RefCapsule::new((s.a.x, s.a.y), (s.b.x, s.b.y), c.radius())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn signed_distance_is_one_lipschitz(c in capsule(), p in vec2(), q in vec2()) {
        let gap = (c.signed_distance(p) - c.signed_distance(q)).abs();
        prop_assert!(gap <= p.distance(q) + 1e-9);
    }

    #[test]
    fn signed_distance_ignores_rigid_motion(c in capsule(), p in vec2(), theta in -3.2..3.2f64, shift in vec2()) {
        let m = |v: Vec2| v.rotated(theta) + shift;
        let s = c.spine();
        let moved = Capsule::new(Segment::new(m(s.a), m(s.b)), c.radius()).unwrap();
        prop_assert!((moved.signed_distance(m(p)) - c.signed_distance(p)).abs() <= 1e-9);
    }

    #[test]
    fn signed_distance_matches_sampled_spine(c in capsule(), p in vec2()) {
        prop_assume!(c.spine().length() < 15.0);
        let want = refc(&c).signed_distance((p.x, p.y));
        prop_assert!((c.signed_distance(p) - want).abs() <= 1e-9, "{} vs {}", c.signed_distance(p), want);
    }

    #[test]
    fn boundary_point_is_on_the_boundary_and_nearest(c in capsule(), p in vec2()) {
        match capsule_boundary_closest_point(p, &c) {
            Ok(q) => {
                prop_assert!(c.signed_distance(p) > 0.0);
                prop_assert!(c.signed_distance(q).abs() <= 1e-9);
                prop_assert!((p.distance(q) - c.signed_distance(p)).abs() <= 1e-9);
            }
            Err(_) => prop_assert!(c.signed_distance(p) <= 0.0),
        }
    }

    #[test]
    fn line_test_matches_reference(c in capsule(), p in vec2(), u in unit()) {
        // Stay clear of tangency, where rounding decides.
        let s = c.spine();
        let off = |e: Vec2| u.cross(e - p);
        let (oa, ob) = (off(s.a), off(s.b));
        let closest = if oa.signum() != ob.signum() { 0.0 } else { oa.abs().min(ob.abs()) };
        prop_assume!((closest - c.radius()).abs() > 1e-9);
        prop_assert_eq!(line_intersects_capsule(p, u, &c), refc(&c).line_hits((p.x, p.y), (u.x, u.y)));
    }

    #[test]
    fn point_risk_is_bounded_and_falls_with_distance(c in capsule(), d in 0.05..8.0f64, dir in unit(), a in 0.0..10.0f64, b in 0.0..10.0f64) {
        let s = c.spine();
        let anchor = s.at(0.5);
        let (near, far) = if a <= b { (a, b) } else { (b, a) };
        let rn = point_risk(anchor + dir * near, &c, d);
        let rf = point_risk(anchor + dir * far, &c, d);
        prop_assert!((0.0..=1.0).contains(&rn) && (0.0..=1.0).contains(&rf));
        // Along a ray from the spine the signed distance never shrinks.
        prop_assert!(rf <= rn + 1e-12);
    }

    #[test]
    fn risk_components_are_ordered(st in state(), pts in cloud(), sx in any::<bool>(), sy in any::<bool>()) {
        let sign = |b| if b { Sign::Positive } else { Sign::Negative };
        let r = assess(&st, &ObstacleCloud::from_points(pts), &ControlParams::default(), (sign(sx), sign(sy))).unwrap();
        for v in [r.c_r, r.c_rx, r.c_ry, r.c_rx_directed, r.c_ry_directed] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.c_rx_directed <= r.c_rx);
        prop_assert!(r.c_ry_directed <= r.c_ry);
        prop_assert_eq!(r.c_r == 0.0, r.argmax_point.is_none());
        if r.c_r == 0.0 {
            prop_assert_eq!((r.c_rx, r.c_ry), (0.0, 0.0));
        }
        let f = r.frame;
        prop_assert!((f.x_hat.norm() - 1.0).abs() < 1e-12 && f.x_hat.dot(f.y_hat).abs() < 1e-12);
    }

    #[test]
    fn denser_sampling_never_lowers_risk(st in state(), res in 0.02..0.4f64, k in 2usize..5, walls in prop::collection::vec((vec2(), vec2()), 1..6)) {
        let map = WallMap {
            name: "random".into(),
            walls: walls.into_iter().map(|(a, b)| Segment::new(a * 0.2, b * 0.2)).collect(),
        };
        let params = ControlParams::default();
        let signs = (Sign::Positive, Sign::Positive);
        let coarse = assess(&st, &sample_obstacles(&map, res).unwrap(), &params, signs).unwrap();
        let fine = assess(&st, &sample_obstacles(&map, res / k as f64).unwrap(), &params, signs).unwrap();
        // Fine grid points land on the coarse ones up to rounding in the arc-length parameter.
        prop_assert!(fine.c_r >= coarse.c_r - 1e-12, "{} < {}", fine.c_r, coarse.c_r);
    }

    #[test]
    fn method_magnitudes_are_nested(st in state(), pts in cloud(), p in deflection()) {
        let params = ControlParams::default();
        let cloud = ObstacleCloud::from_points(pts);
        let input = JoystickInput::new(p, false).unwrap();
        let v = |m| compute_command(m, &input, &st, &cloud, &params).unwrap();
        let (c, h, r1, r2, r3) = (v(Method::C), v(Method::H), v(Method::R1), v(Method::R2), v(Method::R3));
        prop_assert!(r1.v.norm() <= h.v.norm());
        prop_assert!(h.v.norm() <= c.v.norm());
        prop_assert!(c.v.norm() <= params.s_c * p.norm() + 1e-12);
        for cmd in [&r2, &r3] {
            let d = &cmd.diagnostics;
            prop_assert!(d.s_x >= 0.0 && d.s_x <= h.diagnostics.s_x);
            prop_assert!(d.s_y >= 0.0 && d.s_y <= h.diagnostics.s_y);
        }
        prop_assert!(r2.diagnostics.s_x <= r3.diagnostics.s_x);
        prop_assert!(r2.diagnostics.s_y <= r3.diagnostics.s_y);
    }

    #[test]
    fn zero_input_commands_zero(st in state(), pts in cloud()) {
        let params = ControlParams::default();
        let cloud = ObstacleCloud::from_points(pts);
        for m in Method::ALL {
            let cmd = compute_command(m, &JoystickInput::NEUTRAL, &st, &cloud, &params).unwrap();
            prop_assert_eq!(cmd.v, Vec2::ZERO);
        }
    }

    #[test]
    fn step_respects_acceleration_limit(st in state(), cmd in (-8.0..8.0f64, -8.0..8.0f64)) {
        let config = SimConfig::default();
        let map = WallMap { name: "empty".into(), walls: vec![] };
        let out = step(&st, Vec2::new(cmd.0, cmd.1), &config, &map);
        prop_assert!(out.applied_accel.norm() <= config.a_max + 1e-9);
        // Semi-implicit Euler: new velocity first, then position.
        let dv = out.state.velocity - st.velocity;
        prop_assert!((dv - out.applied_accel * config.dt).norm() <= 1e-9);
        prop_assert!((out.state.position - (st.position + out.state.velocity * config.dt)).norm() <= 1e-12);
        if !out.clamped {
            prop_assert_eq!(out.state.velocity, Vec2::new(cmd.0, cmd.1));
        }
    }

    #[test]
    fn contact_is_distance_at_most_radius(p in vec2(), walls in prop::collection::vec((vec2(), vec2()), 1..5)) {
        let map = WallMap { name: "random".into(), walls: walls.iter().map(|&(a, b)| Segment::new(a, b)).collect() };
        let config = SimConfig::default();
        let st = RobotState { position: p, velocity: Vec2::ZERO, time: 0.0 };
        let out = step(&st, Vec2::ZERO, &config, &map);
        let nearest = walls.iter().map(|&(a, b)| refc(&Capsule::new(Segment::new(a, b), 1e-3).unwrap()).signed_distance((p.x, p.y)) + 1e-3).fold(f64::INFINITY, f64::min);
        prop_assume!((nearest - config.robot_radius).abs() > 1e-9);
        prop_assert_eq!(out.in_contact, nearest <= config.robot_radius);
    }

    #[test]
    fn path_length_is_additive(pts in prop::collection::vec(vec2(), 2..30), cut in any::<prop::sample::Index>()) {
        let k = cut.index(pts.len());
        let whole = path_length(pts.iter().copied());
        let split = path_length(pts[..=k].iter().copied()) + path_length(pts[k..].iter().copied());
        prop_assert!((whole - split).abs() <= 1e-9 * (1.0 + whole));
    }
}

#[test]
fn shipped_maps_sample_every_wall_end() {
    for name in EnvironmentSpec::shipped_names() {
        let env = EnvironmentSpec::shipped(name).unwrap();
        let cloud = sample_obstacles(&env.map, 0.02).unwrap();
        for w in &env.map.walls {
            assert!(cloud.points.contains(&w.a) && cloud.points.contains(&w.b), "{name}");
        }
    }
}
