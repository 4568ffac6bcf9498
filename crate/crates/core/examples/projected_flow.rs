//! The `ε = 0` limit by projected heat steps, and its two multiplier
//! oracles: the projection defect and the equation residual.

use std::sync::Arc;

use obstacle_rd::dynamics::heat_smooth;
use obstacle_rd::lagrange::{multiplier_l1_gap, multiplier_limit_residual};
use obstacle_rd::verify::inclusion_minimum;
use obstacle_rd::{rng, ConvexBody, Grid, Integrator, MultiplierTrack, ReactionSpec};

fn main() -> obstacle_rd::Result<()> {
    let grid = Arc::new(Grid::interval(4.0, 65)?);
    let body = ConvexBody::simplex(2)?;
    let u0 = heat_smooth(&rng::field_in_body(&grid, &body, &mut rng::stream(7, 0)), 0.002, 5);
    let reaction = ReactionSpec::LinearLambda(5.0);
    for dt in [2e-3, 1e-3, 5e-4] {
        let traj = Integrator::projected(grid.clone(), body.clone(), reaction.clone(), dt)?.integrate(&u0, 0.5, 1)?;
        let projection = MultiplierTrack::from_projection(&traj)?;
        let residual = multiplier_limit_residual(&traj, &reaction)?;
        let gap = multiplier_l1_gap(&projection, &residual, [dt, 0.5])?;
        println!(
            "dt={dt:e}  L1 gap {gap:.4e}  min (h, u - Z): projection {:.2e}, residual {:.2e}",
            inclusion_minimum(&projection, &traj, &body)?,
            inclusion_minimum(&residual, &traj, &body)?
        );
    }
    Ok(())
}
