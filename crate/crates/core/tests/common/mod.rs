//! Brute-force reference computations shared by the integration tests.
//!
//! Nothing here calls into the crate's geometry or risk code. Distances come
//! from dense sampling of the capsule spine (1e-4 m spacing) followed by a
//! golden-section polish around the best sample.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ratescale::geometry::Vec2;

pub const SPINE_STEP: f64 = 1e-4;

pub type P = (f64, f64);

fn sub(a: P, b: P) -> P {
    (a.0 - b.0, a.1 - b.1)
}

fn dot(a: P, b: P) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn len(a: P) -> f64 {
    dot(a, a).sqrt()
}

/// Capsule described by spine endpoints and radius.
#[derive(Debug, Clone)]
pub struct RefCapsule {
    pub a: P,
    pub b: P,
    pub r: f64,
    samples: Vec<P>,
}

impl RefCapsule {
    pub fn new(a: P, b: P, r: f64) -> Self {
        let n = ((len(sub(b, a)) / SPINE_STEP).ceil() as usize).max(1);
        let samples = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
            })
            .collect();
        RefCapsule { a, b, r, samples }
    }

    fn at(&self, t: f64) -> P {
        (self.a.0 + (self.b.0 - self.a.0) * t, self.a.1 + (self.b.1 - self.a.1) * t)
    }

    /// Spine point nearest `p`.
    pub fn nearest_spine(&self, p: P) -> P {
        let n = self.samples.len() - 1;
        let (best, _) = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, &s)| (k, dot(sub(p, s), sub(p, s))))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if n == 0 || self.a == self.b {
            return self.samples[best];
        }
        // Distance along the spine is convex; polish inside the neighbouring samples.
        let mut lo = (best.saturating_sub(1)) as f64 / n as f64;
        let mut hi = ((best + 1).min(n)) as f64 / n as f64;
        let f = |t: f64| {
            let q = self.at(t);
            dot(sub(p, q), sub(p, q))
        };
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if f(m1) <= f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let t = 0.5 * (lo + hi);
        let q = self.at(t);
        let s = self.samples[best];
        if f(t) <= dot(sub(p, s), sub(p, s)) {
            q
        } else {
            s
        }
    }

    pub fn signed_distance(&self, p: P) -> f64 {
        len(sub(p, self.nearest_spine(p))) - self.r
    }

    /// Whether the infinite line through `p` along unit `u` comes within `r` of the spine.
    /// The signed offset from the line is linear along the spine, so its
    /// smallest magnitude is zero or sits at an end.
    pub fn line_hits(&self, p: P, u: P) -> bool {
        let off = |s: P| {
            let w = sub(s, p);
            w.0 * u.1 - w.1 * u.0
        };
        let (oa, ob) = (off(self.a), off(self.b));
        let closest = if oa.signum() != ob.signum() { 0.0 } else { oa.abs().min(ob.abs()) };
        closest <= self.r
    }
}

pub fn ref_risk(d_o: f64, d: f64) -> f64 {
    if d_o > d {
        0.0
    } else if d_o < 0.0 {
        1.0
    } else {
        (d - d_o) / d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefReport {
    pub c_r: f64,
    pub argmax: Option<usize>,
    pub x_hat: P,
    pub c_rx: f64,
    pub c_ry: f64,
    pub c_rx_directed: f64,
    pub c_ry_directed: f64,
}

/// Controller constants the reference needs.
#[derive(Debug, Clone, Copy)]
pub struct RefParams {
    pub r_uav: f64,
    pub a_max: f64,
    pub d_c: f64,
    pub s_d: f64,
}

impl Default for RefParams {
    fn default() -> Self {
        RefParams { r_uav: 0.2, a_max: 35.0, d_c: 0.3, s_d: 1.0 }
    }
}

pub fn ref_capsule(pos: P, vel: P, k: &RefParams) -> (RefCapsule, f64) {
    let speed = len(vel);
    let d = k.d_c + k.s_d * speed;
    let b = if speed > 0.0 {
        let l = speed * speed / (2.0 * k.a_max);
        (pos.0 + vel.0 / speed * l, pos.1 + vel.1 / speed * l)
    } else {
        pos
    };
    (RefCapsule::new(pos, b, k.r_uav), d)
}

/// Every risk quantity, point by point. `positive` selects the half-space per axis.
pub fn ref_assess(pos: P, vel: P, points: &[P], k: &RefParams, positive: (bool, bool)) -> RefReport {
    let (cap, d) = ref_capsule(pos, vel, k);
    let per_point: Vec<(P, P, f64)> = points
        .iter()
        .map(|&p| {
            let m = cap.nearest_spine(p);
            (p, m, len(sub(p, m)) - cap.r)
        })
        .collect();

    let risks: Vec<f64> = per_point.iter().map(|&(_, _, d_o)| ref_risk(d_o, d)).collect();
    let c_r = risks.iter().cloned().fold(0.0, f64::max);
    let argmax = if c_r > 0.0 { risks.iter().position(|&r| r == c_r) } else { None };
    let x_hat = match argmax {
        Some(i) => {
            let v = sub(points[i], pos);
            let n = len(v);
            (v.0 / n, v.1 / n)
        }
        None => (1.0, 0.0),
    };
    let y_hat = (-x_hat.1, x_hat.0);

    let axis_risk = |u: P, side: Option<bool>| {
        let mut best: f64 = 0.0;
        for &(p, m, d_o) in &per_point {
            if d_o >= d || !cap.line_hits(p, u) {
                continue;
            }
            if let Some(pos_side) = side {
                let s = dot(sub(p, m), u);
                if (pos_side && s < 0.0) || (!pos_side && s > 0.0) {
                    continue;
                }
            }
            let r = if d_o <= 0.0 {
                1.0
            } else {
                let w = sub(p, m);
                let wl = len(w);
                let q = (m.0 + w.0 / wl * cap.r, m.1 + w.1 / wl * cap.r);
                let along = dot(sub(p, q), u).abs();
                if along > d {
                    0.0
                } else {
                    (d - along) / d
                }
            };
            best = best.max(r);
        }
        best
    };
    RefReport {
        c_r,
        argmax,
        x_hat,
        c_rx: axis_risk(x_hat, None),
        c_ry: axis_risk(y_hat, None),
        c_rx_directed: axis_risk(x_hat, Some(positive.0)),
        c_ry_directed: axis_risk(y_hat, Some(positive.1)),
    }
}

/// A robot state and a point cloud around it.
#[derive(Debug, Clone)]
pub struct Scene {
    pub position: Vec2,
    pub velocity: Vec2,
    pub points: Vec<Vec2>,
}

impl Scene {
    pub fn pos(&self) -> P {
        (self.position.x, self.position.y)
    }

    pub fn vel(&self) -> P {
        (self.velocity.x, self.velocity.y)
    }

    pub fn raw_points(&self) -> Vec<P> {
        self.points.iter().map(|p| (p.x, p.y)).collect()
    }
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random scene: some points scattered in a box around the robot, the rest
/// within the field band. `far` moves the whole cloud out of reach.
pub fn random_scene(rng: &mut StdRng, n_points: usize, far: bool) -> Scene {
    let position = Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    let speed = if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..7.0) };
    let heading: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let velocity = Vec2::new(speed * heading.cos(), speed * heading.sin());
    let k = RefParams::default();
    let d = k.d_c + k.s_d * speed;
    let spine = speed * speed / (2.0 * k.a_max);
    let reach = k.r_uav + spine + d;
    let tip = position + Vec2::new(heading.cos(), heading.sin()) * spine;
    let points = (0..n_points)
        .map(|i| {
            let p = if i % 2 == 0 {
                position + Vec2::new(rng.random_range(-reach..reach), rng.random_range(-reach..reach))
            } else {
                let t: f64 = rng.random_range(0.0..1.0);
                let base = position + (tip - position) * t;
                let a: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let rad = k.r_uav + rng.random_range(-0.05..d);
                base + Vec2::new(a.cos(), a.sin()) * rad
            };
            if far {
                p + Vec2::new(100.0, 100.0)
            } else {
                p
            }
        })
        .collect();
    Scene { position, velocity, points }
}
