//! Convergence of the penalized flow to the limit flow as `ε → 0`, and the
//! linear contraction map `Ẽ_ε(u) = (u + rε w₀)/(1 + rε)` that carries the
//! invariant region `K_ε` back into `K`.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::convex::ConvexBody;
use crate::dynamics::{Integrator, ReactionSpec, Scheme};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, NormKind};
use crate::penalty::PenaltyModel;

use super::report::EstimateReport;
use super::{check_order, ls_slope};

/// Errors below this are treated as exact agreement.
const ROUND_OFF: f64 = 1e-12;

/// `err(ε) = ‖u_ε(T) − u₀(T)‖_{L²}` for each `ε`, where `u₀` comes from the
/// projection scheme and every run uses the same step `dt`.
pub fn eps_sweep_errors(
    grid: &Arc<Grid>,
    penalty: &PenaltyModel,
    reaction: &ReactionSpec,
    u0: &Field,
    eps_list: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>> {
    let reference = Integrator::projected(grid.clone(), penalty.body(), reaction.clone(), dt)?.integrate(
        u0,
        t_final,
        usize::MAX,
    )?;
    let limit = reference.last().clone();
    eps_list
        .par_iter()
        .map(|&eps| {
            let p = penalty.with_eps(eps)?;
            let traj = Integrator::penalized(grid.clone(), p, reaction.clone(), Scheme::Imex { dt })?.integrate(
                u0,
                t_final,
                usize::MAX,
            )?;
            Ok((eps, traj.last().sub(&limit)?.norm(NormKind::L2)?))
        })
        .collect()
}

/// Least-squares slope of `ln err` against `ln ε` must reach `min_slope`.
/// When every error is at round-off level the slope is undefined and the
/// check passes with that status recorded.
pub fn check_eps_convergence(errors: &[(f64, f64)], min_slope: f64) -> Result<EstimateReport> {
    if errors.len() < 3 {
        return Err(Error::DegenerateSweep { needed: 3, got: errors.len() });
    }
    if errors.iter().all(|e| e.1 <= ROUND_OFF) {
        return Ok(EstimateReport::new("eps_convergence", 0.0, 0.0, 0.0)
            .constant("max_error", errors.iter().map(|e| e.1).fold(0.0, f64::max))
            .note("errors at round-off level: slope check skipped"));
    }
    Ok(check_order("eps_convergence", errors, min_slope)?.constant("min_slope", min_slope))
}

/// Largest `s` along `w₀ + s·d` with the predicate still true, by bisection.
fn ray_exit(w0: &[f64], d: &[f64], reach: f64, inside: impl Fn(&[f64]) -> bool) -> f64 {
    let point = |s: f64| -> Vec<f64> { w0.iter().zip(d).map(|(a, b)| a + s * b).collect() };
    let (mut lo, mut hi) = (0.0, reach);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if inside(&point(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn directions(n: usize, samples: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..samples)
        .map(|_| loop {
            let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 && norm <= 1.0 {
                break d.iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

/// Boundary points of `K_ε = {F_ε ≤ pε}` as seen from `w₀` along the given
/// directions, paired with the exit distance from `K` along the same ray.
fn region_boundary(p: &PenaltyModel, level: f64, w0: &[f64], dirs: &[Vec<f64>]) -> Vec<(Vec<f64>, f64, f64)> {
    let body = p.body();
    let reach = 4.0 * body.diameter() + 10.0 * (level * p.eps()).sqrt() + 1.0;
    dirs.iter()
        .map(|d| {
            let s = ray_exit(w0, d, reach, |z| p.value(z) <= level * p.eps());
            let s_k = ray_exit(w0, d, reach, |z| body.contains(z));
            (w0.iter().zip(d).map(|(a, b)| a + s * b).collect(), s, s_k)
        })
        .collect()
}

/// Smallest `r` such that `Ẽ_ε` maps the sampled boundary of `K_ε` into `K`:
/// along a ray from `w₀` that leaves `K` at distance `s_K` and `K_ε` at `s`,
/// this needs `1 + rε ≥ s/s_K`.
pub fn contraction_map_rate(
    p: &PenaltyModel,
    level: f64,
    w0: &[f64],
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    if !p.body().contains(w0) {
        return Err(Error::InvalidBody("w0 must lie in K".into()));
    }
    let dirs = directions(p.dim(), samples, rng);
    let rate = region_boundary(p, level, w0, &dirs)
        .into_iter()
        .map(|(_, s, s_k)| (s / s_k - 1.0) / p.eps())
        .fold(0.0, f64::max);
    Ok(rate)
}

/// `max dist(Ẽ_ε(z), K)` over sampled boundary points `z` of `K_ε` must
/// vanish (to `1e-12`).
pub fn check_contraction_map(
    p: &PenaltyModel,
    level: f64,
    w0: &[f64],
    rate: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> EstimateReport {
    let body: ConvexBody = p.body();
    let dirs = directions(p.dim(), samples, rng);
    let shrink = 1.0 / (1.0 + rate * p.eps());
    let worst = region_boundary(p, level, w0, &dirs)
        .into_iter()
        .map(|(z, _, _)| {
            let mapped: Vec<f64> = z.iter().zip(w0).map(|(a, b)| b + (a - b) * shrink).collect();
            body.distance(&mapped)
        })
        .fold(0.0, f64::max);
    EstimateReport::new("contraction_map", worst, 0.0, 1e-12)
        .param("eps", format!("{:e}", p.eps()))
        .constant("rate", rate)
        .constant("p", level)
}

/// `ln err` against `ln ε` slope, exposed for reporting fitted exponents.
pub fn fitted_exponent(errors: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = errors.iter().map(|e| e.0.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.1.ln()).collect();
    ls_slope(&xs, &ys)
}
