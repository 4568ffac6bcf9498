//! The scalar profile `f_ε`, the simplex penalty and its gradient sandwich.

use obstacle_rd::{PenaltyModel, ScalarProfile, ThetaConstants};

fn main() -> obstacle_rd::Result<()> {
    for eps in [0.1, 0.01, 0.001] {
        let f = ScalarProfile::new(eps)?;
        let z = 2.0 * eps;
        println!(
            "eps={eps:e}  f(2eps)={:e}  f'(2eps)={:e}  |f'|^2 - (4/eps)f = {:e}",
            f.value(z),
            f.derivative(z),
            f.derivative(z).powi(2) - 4.0 / eps * f.value(z)
        );
    }
    for n in [2, 3, 5] {
        let c = ThetaConstants::new(n);
        let p = PenaltyModel::simplex(n, 0.01)?;
        let u: Vec<f64> = (0..n).map(|i| if i == 0 { 1.2 } else { -0.05 }).collect();
        let (lo, mid, hi) = p.gradient_sandwich(&u)?;
        println!("n={n}  theta={:.6}  kappa2={:.6}  kappa1={}", c.theta_n, c.kappa2, c.kappa1);
        println!("      {lo:.4e} <= |F'|^2 = {mid:.4e} <= {hi:.4e}  step cap {:e}", p.explicit_step_cap());
    }
    Ok(())
}
