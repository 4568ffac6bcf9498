//! IMEX runs of the penalized system across an ε decade: how far the state
//! leaves `K` and how large the multiplier `h_ε = F'_ε(u)` gets.

use std::sync::Arc;

use obstacle_rd::lagrange::multiplier_penalized;
use obstacle_rd::{rng, ConvexBody, Grid, Integrator, PenaltyModel, ReactionSpec, Scheme};

fn main() -> obstacle_rd::Result<()> {
    let grid = Arc::new(Grid::interval(4.0, 256)?);
    let body = ConvexBody::simplex(2)?;
    let u0 = rng::field_in_body(&grid, &body, &mut rng::stream(1, 0));
    let lambda = 5.0;
    for eps in [0.1, 0.01, 0.001] {
        let p = PenaltyModel::simplex(2, eps)?;
        let dt = PenaltyModel::simplex(2, 0.001)?.explicit_step_cap();
        let integ =
            Integrator::penalized(grid.clone(), p.clone(), ReactionSpec::LinearLambda(lambda), Scheme::Imex { dt })?;
        let traj = integ.integrate(&u0, 1.0, 40)?;
        let outside = traj.states.iter().flat_map(|u| u.nodes().map(|z| body.distance(z))).fold(0.0, f64::max);
        let h = multiplier_penalized(&traj, &p)?;
        println!(
            "eps={eps:e}  steps={}  max dist(u, K)={outside:.3e}  sup |h|={:.3}  (lambda*diam = {:.3})",
            traj.steps,
            h.sup_linf(),
            lambda * body.diameter()
        );
    }
    Ok(())
}
