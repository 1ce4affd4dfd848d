//! Signed distance to a stopping capsule, its nearest boundary point, and the
//! axis-line test the directional risks use.

use ratescale::geometry::{capsule_boundary_closest_point, line_intersects_capsule, Capsule, Segment, Vec2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Robot at the origin doing 3 m/s along +x: spine 9/70 m, radius 0.2 m.
    let capsule = Capsule::new(Segment::new(Vec2::ZERO, Vec2::new(9.0 / 70.0, 0.0)), 0.2)?;
    println!("capsule length {:.4} m", capsule.total_length());
    for p in [Vec2::new(0.0, 0.5), Vec2::new(0.6, 0.0), Vec2::new(-0.5, -0.5), Vec2::new(0.05, 0.1)] {
        let sd = capsule.signed_distance(p);
        let nearest = capsule_boundary_closest_point(p, &capsule)
            .map(|q| format!("({:+.4}, {:+.4})", q.x, q.y))
            .unwrap_or_else(|_| "inside".into());
        let along_x = line_intersects_capsule(p, Vec2::X, &capsule);
        let along_y = line_intersects_capsule(p, Vec2::Y, &capsule);
        println!(
            "p = ({:+.2}, {:+.2})  sd {:+.4}  nearest {nearest}  x-line hits {along_x}  y-line hits {along_y}",
            p.x, p.y, sd
        );
    }
    Ok(())
}
