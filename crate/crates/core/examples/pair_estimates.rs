//! One pair of solutions: contraction, smoothing, the Assumption 𝓛 ratio
//! and the squeezing constant.

use std::sync::Arc;

use obstacle_rd::verify::{assumption_l_ratio, check_contraction, check_smoothing, squeezing_constant, PairExperiment};
use obstacle_rd::{rng, ConvexBody, Grid, Integrator, PenaltyModel, ReactionSpec, Scheme};

fn main() -> obstacle_rd::Result<()> {
    let grid = Arc::new(Grid::interval(4.0, 256)?);
    let body = ConvexBody::simplex(2)?;
    let a = rng::field_in_body(&grid, &body, &mut rng::stream(3, 0));
    let b = rng::field_in_body(&grid, &body, &mut rng::stream(3, 1));
    let basis = grid.sine_basis()?;
    let lambda = 1.0;
    for eps in [0.1, 0.01, 0.001] {
        let p = PenaltyModel::simplex(2, eps)?;
        let integ = Integrator::penalized(
            grid.clone(),
            p.clone(),
            ReactionSpec::LinearLambda(lambda),
            Scheme::Imex { dt: 2.5e-4 },
        )?;
        let run = PairExperiment::new(a.clone(), b.clone(), integ, 2.0)?.run(1)?;
        let c = check_contraction(&run, lambda, 1.0, 0.05)?;
        let s = check_smoothing(&run, lambda, 0.05)?;
        println!(
            "eps={eps:e}  contraction {:.4} <= {:.4}  smoothing {:.4} <= {:.4}  rho {:.4}  L {:.4}",
            c.left,
            c.right,
            s.left,
            s.right,
            assumption_l_ratio(&run, &p)?,
            squeezing_constant(&run, &basis)?
        );
    }
    Ok(())
}
