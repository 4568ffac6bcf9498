//! Invariant region `K_ε = {F_ε(u) ≤ pε}` of the penalized simplex flow.
//!
//! Testing the equation with `F'_ε(u)` gives, for `V = F_ε(u)`,
//! `∂ₜV − ΔV + |F'|² ≤ λ(u, F')`. Splitting `|F'|²` in halves and using
//! `|F'|² ≥ (κ₂/ε)F` yields `∂ₜV − ΔV + (κ₂/(2ε) − λ²)V ≤ C₁` as soon as
//! `λ(u, F') − ½|F'|² + λ²F ≤ C₁`. The comparison principle then makes
//! `{V ≤ pε}` invariant for `p = 3C₁/κ₂` once `λ²ε < κ₂/3`.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::penalty::{PenaltyModel, ThetaConstants};

use super::report::EstimateReport;

/// `C₁ = max(0, sup λ(u, F'(u)) − ½|F'(u)|² + λ²F(u))` over all samples and
/// nodes of a run.
pub fn region_constant(traj: &Trajectory, p: &PenaltyModel, lambda: f64) -> f64 {
    let mut grad = vec![0.0; p.dim()];
    let mut c1: f64 = 0.0;
    for u in &traj.states {
        for z in u.nodes() {
            let value = p.value(z);
            if value == 0.0 {
                continue;
            }
            p.grad_into(z, &mut grad);
            let dot: f64 = z.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let sq: f64 = grad.iter().map(|g| g * g).sum();
            c1 = c1.max(lambda * dot - 0.5 * sq + lambda * lambda * value);
        }
    }
    c1
}

/// `p = 3C₁/κ₂`.
pub fn region_level(c1: f64, theta: &ThetaConstants) -> f64 {
    3.0 * c1 / theta.kappa2
}

/// `max F_ε(u(t, x))/ε ≤ p(1 + tol)` over all samples.
pub fn check_invariant_region(traj: &Trajectory, p: &PenaltyModel, level: f64, tol: f64) -> Result<EstimateReport> {
    let eps = p.eps();
    let scaled_max = |k: usize| traj.states[k].nodes().map(|z| p.value(z) / eps).fold(0.0, f64::max);
    let initial = scaled_max(0);
    if initial > level {
        return Err(Error::InitialDataOutsideRegion { ratio: initial, p: level });
    }
    let left = (0..traj.len()).map(scaled_max).fold(0.0, f64::max);
    Ok(EstimateReport::new("invariant_region", left, level * (1.0 + tol), 0.0)
        .param("eps", format!("{eps:e}"))
        .constant("p", level)
        .constant("tol", tol))
}
