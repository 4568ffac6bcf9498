//! Scalar reduction for a smooth convex constraint: along a penalized run,
//! `m = M(u)` satisfies
//! `∂ₜm − Δm + f'_ε(m)θ²(m) + D(u) = 0`, with
//! `D(u) = Σᵢ Σⱼₖ M''ⱼₖ(u) ∂ᵢuⱼ ∂ᵢuₖ − λ(∇M(u), u)`.

use crate::convex::SmoothDistance;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::grid::{laplacian_into, Field, Grid};
use crate::penalty::{PenaltyKind, PenaltyModel};

use super::check_order;
use super::report::EstimateReport;

/// Centred differences along each axis, zero boundary values.
fn centred_gradients(u: &Field) -> Vec<Vec<f64>> {
    let grid: &Grid = u.grid();
    let n = u.components();
    let [mx, my] = grid.interior();
    let h = grid.spacing();
    let v = u.values();
    let at = |i: isize, j: isize, c: usize| -> f64 {
        if i < 0 || j < 0 || i >= mx as isize || j >= my as isize {
            0.0
        } else {
            v[(j as usize * mx + i as usize) * n + c]
        }
    };
    let mut out = vec![vec![0.0; v.len()]; grid.dim()];
    for j in 0..my as isize {
        for i in 0..mx as isize {
            let k = j as usize * mx + i as usize;
            for c in 0..n {
                out[0][k * n + c] = (at(i + 1, j, c) - at(i - 1, j, c)) / (2.0 * h);
                if grid.dim() == 2 {
                    out[1][k * n + c] = (at(i, j + 1, c) - at(i, j - 1, c)) / (2.0 * h);
                }
            }
        }
    }
    out
}

/// `D(u)` at every node.
pub fn reduction_defect(s: &SmoothDistance, u: &Field, lambda: f64) -> Vec<f64> {
    let n = u.components();
    let grads = centred_gradients(u);
    let mut grad_m = vec![0.0; n];
    (0..u.len_nodes())
        .map(|k| {
            let z = u.node(k);
            let hess = s.hessian(z);
            let mut d = 0.0;
            for g in &grads {
                let du = &g[k * n..(k + 1) * n];
                for a in 0..n {
                    for b in 0..n {
                        d += hess[a * n + b] * du[a] * du[b];
                    }
                }
            }
            s.eval_into(z, &mut grad_m);
            d - lambda * grad_m.iter().zip(z).map(|(g, x)| g * x).sum::<f64>()
        })
        .collect()
}

fn smooth_part(p: &PenaltyModel) -> Result<&SmoothDistance> {
    match p.kind() {
        PenaltyKind::SmoothConvex(s) => Ok(s),
        _ => Err(Error::UnsupportedBody(format!("{} penalty has no smooth distance", p.body().name()))),
    }
}

/// L¹ norm of the reduction residual at every sample after the first, with
/// a backward difference in time. The run must be sampled at every step.
pub fn scalar_reduction_residuals(traj: &Trajectory, p: &PenaltyModel, lambda: f64) -> Result<Vec<f64>> {
    let s = smooth_part(p)?;
    if traj.len() != traj.steps + 1 {
        return Err(Error::MisalignedSampling("scalar reduction needs every step sampled".into()));
    }
    let profile = p.profile();
    let grid = traj.grid().clone();
    let boundary = s.value(&vec![0.0; p.dim()]);
    let m_of = |u: &Field| -> Vec<f64> { u.nodes().map(|z| s.value(z) - boundary).collect() };
    let mut prev = m_of(traj.initial());
    let mut out = Vec::with_capacity(traj.len() - 1);
    let mut lap = vec![0.0; grid.interior_len()];
    for k in 1..traj.len() {
        let u = &traj.states[k];
        let dt = traj.times[k] - traj.times[k - 1];
        let m = m_of(u);
        laplacian_into(&grid, 1, &m, &mut lap);
        let defect = reduction_defect(s, u, lambda);
        let mut l1 = 0.0;
        for node in 0..m.len() {
            let mv = m[node] + boundary;
            let theta = s.theta(mv);
            let r = (m[node] - prev[node]) / dt - lap[node] + profile.derivative(mv) * theta * theta + defect[node];
            l1 += r.abs();
        }
        out.push(l1 * grid.weight());
        prev = m;
    }
    Ok(out)
}

/// The largest residual must decay at order `min_order` along a sequence of
/// runs refined jointly in `dt` and `h` (ordered coarse to fine).
pub fn check_scalar_reduction(
    runs: &[Trajectory],
    p: &PenaltyModel,
    lambda: f64,
    min_order: f64,
) -> Result<EstimateReport> {
    let samples = runs
        .iter()
        .map(|t| {
            let max = scalar_reduction_residuals(t, p, lambda)?.into_iter().fold(0.0, f64::max);
            Ok((t.dt, max))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(check_order("scalar_reduction", &samples, min_order)?
        .param("eps", format!("{:e}", p.eps()))
        .constant("min_order", min_order))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::convex::ConvexBody;
    use crate::dynamics::{Integrator, ReactionSpec, Scheme};

    fn ball_penalty(eps: f64) -> PenaltyModel {
        PenaltyModel::for_body(&ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap(), eps, 0.2).unwrap()
    }

    #[test]
    fn constant_interior_state_has_no_defect() {
        let p = ball_penalty(0.1);
        let s = smooth_part(&p).unwrap();
        let g = Arc::new(Grid::interval(1.0, 9).unwrap());
        let u = Field::from_fn(g, 2, |_| vec![0.3, -0.2]);
        assert!(reduction_defect(s, &u, 2.0).iter().all(|&d| d == 0.0));
    }

    #[test]
    fn radial_profile_matches_closed_form() {
        // u(x) = r(x)·û with a fixed unit vector û and r > ρ = R − δ = 0.8.
        let p = ball_penalty(0.1);
        let s = smooth_part(&p).unwrap();
        let g = Arc::new(Grid::interval(1.0, 7).unwrap());
        let radii = [0.9, 1.0, 1.1, 1.0, 0.9];
        let dir = [0.6, 0.8];
        let mut u = Field::zeros(g.clone(), 2);
        for (k, r) in radii.iter().enumerate() {
            u.node_mut(k).copy_from_slice(&[r * dir[0], r * dir[1]]);
        }
        let lambda = 2.0;
        let h = g.spacing();
        let defect = reduction_defect(s, &u, lambda);
        for k in 0..5 {
            let left = if k == 0 { 0.0 } else { radii[k - 1] };
            let right = if k == 4 { 0.0 } else { radii[k + 1] };
            let dr = (right - left) / (2.0 * h);
            let d = radii[k] - 0.8;
            // radial curvature 6d along û; ∇M·u = 3d²·r
            let expected = 6.0 * d * dr * dr - lambda * 3.0 * d * d * radii[k];
            assert!((defect[k] - expected).abs() < 1e-12 * (1.0 + expected.abs()), "{k}");
        }
    }

    #[test]
    fn non_ball_penalty_is_rejected() {
        let p = PenaltyModel::simplex(2, 0.1).unwrap();
        let traj = Trajectory::new(Default::default(), 0.1);
        assert!(matches!(scalar_reduction_residuals(&traj, &p, 1.0), Err(Error::UnsupportedBody(_))));
    }

    #[test]
    fn residual_decays_under_refinement() {
        let p = ball_penalty(0.1);
        let lambda = 3.0;
        let runs: Vec<Trajectory> = [(33, 4e-3), (65, 2e-3), (129, 1e-3)]
            .iter()
            .map(|&(nodes, dt)| {
                let g = Arc::new(Grid::interval(2.0, nodes).unwrap());
                let u0 = Field::from_fn(g.clone(), 2, |x| {
                    let s = (std::f64::consts::PI * x[0] / 2.0).sin();
                    vec![0.95 * s, 0.25 * s]
                });
                Integrator::penalized(g, p.clone(), ReactionSpec::LinearLambda(lambda), Scheme::Imex { dt })
                    .unwrap()
                    .integrate(&u0, 0.2, 1)
                    .unwrap()
            })
            .collect();
        let r = check_scalar_reduction(&runs, &p, lambda, 0.9).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
