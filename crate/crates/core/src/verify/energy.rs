//! Lyapunov function of the penalized flow,
//! `E_ε(u) = ‖∇u‖² + 2(F_ε(u), 1) − λ‖u‖²`, with `dE_ε/dt = −2‖∂ₜu‖²`.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::grid::{Field, NormKind};
use crate::penalty::PenaltyModel;

use super::report::EstimateReport;

pub fn discrete_energy(u: &Field, p: &PenaltyModel, lambda: f64) -> f64 {
    let penalty: f64 = u.nodes().map(|z| p.value(z)).sum::<f64>() * u.grid().weight();
    let l2 = u.norm(NormKind::L2).expect("L2 always defined");
    u.grad_sq() + 2.0 * penalty - lambda * l2 * l2
}

/// Energy along a run sampled at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    pub energies: Vec<f64>,
    /// `2 Σ ‖u^{k+1} − u^k‖²/dt`, the discrete `2∫‖∂ₜu‖²`.
    pub dissipation: f64,
    /// Largest single-step increase of `E_ε` (negative when monotone).
    pub max_increase: f64,
    pub dt: f64,
}

impl EnergyProfile {
    pub fn new(traj: &Trajectory, p: &PenaltyModel, lambda: f64) -> Result<Self> {
        if traj.len() != traj.steps + 1 {
            return Err(Error::MisalignedSampling(format!(
                "energy checks need every step sampled: {} samples for {} steps",
                traj.len(),
                traj.steps
            )));
        }
        let energies: Vec<f64> = traj.states.iter().map(|u| discrete_energy(u, p, lambda)).collect();
        let mut dissipation = 0.0;
        let mut max_increase = f64::NEG_INFINITY;
        for k in 1..traj.len() {
            let dt = traj.times[k] - traj.times[k - 1];
            let step = traj.states[k].sub(&traj.states[k - 1])?.norm(NormKind::L2)?;
            dissipation += 2.0 * step * step / dt;
            max_increase = max_increase.max(energies[k] - energies[k - 1]);
        }
        Ok(EnergyProfile { energies, dissipation, max_increase, dt: traj.dt })
    }

    /// `E(T) − E(0)`.
    pub fn change(&self) -> f64 {
        self.energies.last().copied().unwrap_or(0.0) - self.energies[0]
    }

    /// `|ΔE + 2∫‖∂ₜu‖²| / 2∫‖∂ₜu‖²`; zero for a steady run.
    pub fn balance_error(&self) -> f64 {
        let gap = (self.change() + self.dissipation).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.dissipation
        }
    }
}

/// `ΔE_ε ≈ −2∫‖∂ₜu‖²dt` to relative accuracy `tol`.
pub fn check_energy_balance(profile: &EnergyProfile, tol: f64) -> EstimateReport {
    EstimateReport::new("energy_balance", profile.balance_error(), tol, 0.0)
        .constant("energy_change", profile.change())
        .constant("dissipation", profile.dissipation)
        .constant("max_step_increase", profile.max_increase)
        .constant("dt", profile.dt)
}

/// Stepwise monotonicity up to `C·dt²`: `C` is fitted on the coarse run and
/// the fine run's largest increase must stay below `C·dt_fine²`. Round-off
/// of size `1e-12·max|E|` is tolerated.
pub fn check_energy_monotone(coarse: &EnergyProfile, fine: &EnergyProfile) -> EstimateReport {
    let c = coarse.max_increase.max(0.0) / (coarse.dt * coarse.dt);
    let scale = fine.energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    EstimateReport::new("energy_monotone", fine.max_increase, c * fine.dt * fine.dt, 1e-12 * scale)
        .constant("fitted_c", c)
        .constant("coarse_dt", coarse.dt)
        .constant("fine_dt", fine.dt)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::convex::ConvexBody;
    use crate::dynamics::{heat_smooth, Integrator, ReactionSpec, Scheme};
    use crate::grid::Grid;
    use crate::rng;

    #[test]
    fn steady_state_has_no_energy_change() {
        let g = Arc::new(Grid::interval(1.0, 33).unwrap());
        let p = PenaltyModel::simplex(2, 0.01).unwrap();
        let integ =
            Integrator::penalized(g.clone(), p.clone(), ReactionSpec::LinearLambda(3.0), Scheme::Imex { dt: 1e-3 })
                .unwrap();
        let traj = integ.integrate(&Field::zeros(g, 2), 0.05, 1).unwrap();
        let e = EnergyProfile::new(&traj, &p, 3.0).unwrap();
        assert_eq!(e.change(), 0.0);
        assert_eq!(e.balance_error(), 0.0);
        assert!(check_energy_balance(&e, 0.1).pass);
    }

    #[test]
    fn dirichlet_energy_decreases_without_forcing() {
        let g = Arc::new(Grid::interval(1.0, 65).unwrap());
        let p = PenaltyModel::simplex(2, 0.01).unwrap();
        let u0 = rng::field_in_body(&g, &ConvexBody::simplex(2).unwrap(), &mut rng::stream(4, 0));
        let integ =
            Integrator::penalized(g, p.clone(), ReactionSpec::LinearLambda(0.0), Scheme::Imex { dt: 1e-3 }).unwrap();
        let traj = integ.integrate(&u0, 0.05, 1).unwrap();
        let grads: Vec<f64> = traj.states.iter().map(Field::grad_sq).collect();
        assert!(grads.windows(2).all(|w| w[1] < w[0]));
        assert!(EnergyProfile::new(&traj, &p, 0.0).unwrap().max_increase < 0.0);
    }

    #[test]
    fn balance_holds_for_smooth_data() {
        let g = Arc::new(Grid::interval(4.0, 129).unwrap());
        let p = PenaltyModel::simplex(2, 0.01).unwrap();
        let u0 = rng::field_in_body(&g, &ConvexBody::simplex(2).unwrap(), &mut rng::stream(5, 0));
        let u0 = heat_smooth(&u0, 0.002, 5);
        let integ =
            Integrator::penalized(g, p.clone(), ReactionSpec::LinearLambda(5.0), Scheme::Imex { dt: p.eps() / 8.0 })
                .unwrap();
        let traj = integ.integrate(&u0, 0.5, 1).unwrap();
        let e = EnergyProfile::new(&traj, &p, 5.0).unwrap();
        assert!(check_energy_balance(&e, 0.1).pass, "{}", e.balance_error());
    }

    #[test]
    fn sparse_sampling_is_rejected() {
        let g = Arc::new(Grid::interval(1.0, 17).unwrap());
        let p = PenaltyModel::simplex(1, 0.1).unwrap();
        let integ =
            Integrator::penalized(g.clone(), p.clone(), ReactionSpec::LinearLambda(0.0), Scheme::Imex { dt: 0.01 })
                .unwrap();
        let traj = integ.integrate(&Field::zeros(g, 1), 0.1, 2).unwrap();
        assert!(matches!(EnergyProfile::new(&traj, &p, 0.0), Err(Error::MisalignedSampling(_))));
    }
}
