//! `‖u_ε(1) − u₀(1)‖` over five ε in `[10⁻³, 10⁻¹]` and its log-log slope.

use std::sync::Arc;

use obstacle_rd::dynamics::heat_smooth;
use obstacle_rd::verify::{check_eps_convergence, eps_sweep_errors};
use obstacle_rd::{rng, ConvexBody, Grid, PenaltyModel, ReactionSpec};

fn main() -> obstacle_rd::Result<()> {
    let grid = Arc::new(Grid::interval(4.0, 256)?);
    let body = ConvexBody::simplex(2)?;
    let u0 = heat_smooth(&rng::field_in_body(&grid, &body, &mut rng::stream(1, 0)), 0.002, 5);
    let eps: Vec<f64> = (0..5).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect();
    let p = PenaltyModel::simplex(2, eps[0])?;
    let errors = eps_sweep_errors(&grid, &p, &ReactionSpec::LinearLambda(5.0), &u0, &eps, 1.0, 1.25e-4)?;
    for (e, err) in &errors {
        println!("eps={e:.4e}  error={err:.4e}");
    }
    let report = check_eps_convergence(&errors, 0.45)?;
    println!("slope {:.3} (needs >= 0.45): {}", report.right, if report.pass { "pass" } else { "fail" });
    Ok(())
}
