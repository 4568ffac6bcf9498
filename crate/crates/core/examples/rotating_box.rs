//! A non-gradient reaction with unequal diffusion coefficients, confined to
//! a box.

use std::sync::Arc;

use obstacle_rd::lagrange::multiplier_penalized;
use obstacle_rd::{rng, ConvexBody, DiffusionSpec, Grid, Integrator, PenaltyModel, ReactionSpec, Scheme};

fn main() -> obstacle_rd::Result<()> {
    let grid = Arc::new(Grid::rectangle(2.0, 2.0, 33, 33)?);
    let body = ConvexBody::cube(2, 1.0)?;
    let p = PenaltyModel::for_body(&body, 0.01, 0.0)?;
    let reaction = ReactionSpec::rotating(2.0, 3.0, body.diameter());
    let integ = Integrator::new(
        grid.clone(),
        body.clone(),
        Some(p.clone()),
        reaction,
        DiffusionSpec::Diagonal(vec![1.0, 0.2]),
        Scheme::Imex { dt: p.explicit_step_cap() },
    )?;
    let u0 = rng::field_in_body(&grid, &body, &mut rng::stream(5, 0));
    let traj = integ.integrate(&u0, 1.0, 100)?;
    let h = multiplier_penalized(&traj, &p)?;
    for (t, u) in traj.times.iter().zip(&traj.states) {
        let outside = u.nodes().map(|z| body.distance(z)).fold(0.0, f64::max);
        println!("t={t:.2}  max dist(u, K)={outside:.3e}");
    }
    println!("sup |h| = {:.3}", h.sup_linf());
    Ok(())
}
