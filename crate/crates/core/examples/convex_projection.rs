//! Projections onto the simplex, the ball and the box, and the smooth
//! distance used by the ball penalty.

use obstacle_rd::{ConvexBody, SmoothDistance};

fn main() -> obstacle_rd::Result<()> {
    let bodies = [ConvexBody::simplex(3)?, ConvexBody::ball(vec![0.2, 0.0, 0.0], 1.0)?, ConvexBody::cube(3, 0.5)?];
    let points = [[0.9, 0.8, -0.3], [-1.0, 2.0, 0.5], [0.1, 0.2, 0.3]];
    for body in &bodies {
        println!("{} (diameter {:.4})", body.name(), body.diameter());
        for z in &points {
            let p = body.project(z);
            println!("  {z:?} -> [{:.4}, {:.4}, {:.4}]  distance {:.4}", p[0], p[1], p[2], body.distance(z));
        }
    }
    let s = SmoothDistance::new(&ConvexBody::ball(vec![0.0, 0.0], 1.0)?, 0.2)?;
    for r in [0.5, 0.8, 1.0, 1.5] {
        let (value, grad) = s.eval(&[r, 0.0]);
        println!("smooth distance at r={r}: {value:.4}, gradient [{:.4}, {:.4}]", grad[0], grad[1]);
    }
    Ok(())
}
