//! Calibrates the region constant at `ε = 0.1` and checks
//! `F_ε(u) ≤ pε` at smaller ε.

use std::sync::Arc;

use obstacle_rd::verify::{check_invariant_region, region_constant, region_level};
use obstacle_rd::{rng, ConvexBody, Grid, Integrator, PenaltyModel, ReactionSpec, Scheme, ThetaConstants};

fn main() -> obstacle_rd::Result<()> {
    let grid = Arc::new(Grid::interval(4.0, 256)?);
    let body = ConvexBody::simplex(2)?;
    let u0 = rng::field_in_body(&grid, &body, &mut rng::stream(2, 0));
    let lambda = 5.0;
    let dt = PenaltyModel::simplex(2, 0.001)?.explicit_step_cap();
    let run = |eps: f64| -> obstacle_rd::Result<_> {
        let p = PenaltyModel::simplex(2, eps)?;
        let traj =
            Integrator::penalized(grid.clone(), p.clone(), ReactionSpec::LinearLambda(lambda), Scheme::Imex { dt })?
                .integrate(&u0, 1.0, 4)?;
        Ok((p, traj))
    };
    let (p, traj) = run(0.1)?;
    let c1 = region_constant(&traj, &p, lambda);
    let level = region_level(c1, &ThetaConstants::new(2));
    println!("C1 = {c1:.3}, p = {level:.3}");
    for eps in [0.01, 0.001] {
        let (p, traj) = run(eps)?;
        let r = check_invariant_region(&traj, &p, level, 0.05)?;
        println!("eps={eps:e}  max F/eps = {:.3} <= {:.3}: {}", r.left, r.right, if r.pass { "pass" } else { "fail" });
    }
    Ok(())
}
