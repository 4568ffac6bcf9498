//! The Lyapunov energy of the penalized flow and its dissipation balance.

use std::sync::Arc;

use obstacle_rd::dynamics::heat_smooth;
use obstacle_rd::verify::{check_energy_balance, check_energy_monotone, EnergyProfile};
use obstacle_rd::{rng, ConvexBody, Grid, Integrator, PenaltyModel, ReactionSpec, Scheme};

fn main() -> obstacle_rd::Result<()> {
    let grid = Arc::new(Grid::interval(4.0, 256)?);
    let body = ConvexBody::simplex(2)?;
    let u0 = heat_smooth(&rng::field_in_body(&grid, &body, &mut rng::stream(4, 0)), 0.002, 5);
    let lambda = 5.0;
    for eps in [0.1, 0.01] {
        let p = PenaltyModel::simplex(2, eps)?;
        let profile = |dt: f64| -> obstacle_rd::Result<EnergyProfile> {
            let integ = Integrator::penalized(
                grid.clone(),
                p.clone(),
                ReactionSpec::LinearLambda(lambda),
                Scheme::Imex { dt },
            )?;
            EnergyProfile::new(&integ.integrate(&u0, 1.0, 1)?, &p, lambda)
        };
        let (coarse, fine) = (profile(eps / 4.0)?, profile(eps / 8.0)?);
        let balance = check_energy_balance(&fine, 0.1);
        let monotone = check_energy_monotone(&coarse, &fine);
        println!(
            "eps={eps:e}  dE={:.4}  balance error {:.3e}  largest step increase {:.3e} ({})",
            fine.change(),
            balance.left,
            monotone.left,
            if balance.pass && monotone.pass { "pass" } else { "fail" }
        );
    }
    Ok(())
}
