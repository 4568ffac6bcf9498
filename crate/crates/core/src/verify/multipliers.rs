//! Checks on multiplier tracks: the L∞ bound, the pointwise inclusion
//! `h ∈ ∂I_K(u)`, and agreement of the two limit-multiplier oracles.

use crate::convex::ConvexBody;
use crate::dynamics::{Integrator, ReactionSpec, Scheme, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{Field, NormKind};
use crate::lagrange::{multiplier_l1_gap, multiplier_limit_residual, residual_field, MultiplierTrack};

use super::check_order;
use super::report::EstimateReport;

/// Number of boundary samples used as test points for a ball.
pub const BALL_TEST_POINTS: usize = 32;

/// `sup_t ‖h(t)‖_{L∞} ≤ λ·diam(K)·(1 + margin)`; `|h|` is Euclidean at
/// each node.
pub fn check_multiplier_linf(track: &MultiplierTrack, lambda: f64, diameter: f64, margin: f64) -> EstimateReport {
    EstimateReport::new("multiplier_linf", track.sup_linf(), lambda * diameter * (1.0 + margin), 0.0)
        .param("source", track.source)
        .constant("lambda", lambda)
        .constant("diameter", diameter)
        .constant("margin", margin)
}

/// `min (h(x), u(x) − Z)` over all nodes and test points `Z`.
fn field_inclusion_minimum(h: &Field, u: &Field, points: &[Vec<f64>]) -> f64 {
    let mut min = f64::INFINITY;
    for node in 0..u.len_nodes() {
        let (hv, uv) = (h.node(node), u.node(node));
        for z in points {
            let s: f64 = hv.iter().zip(uv).zip(z).map(|((a, b), c)| a * (b - c)).sum();
            min = min.min(s);
        }
    }
    min
}

/// `min (h(t, x), u(t, x) − Z)` over the samples of `track`, all nodes,
/// and the test points `Z` of `K` (vertices, corners, or boundary samples).
pub fn inclusion_minimum(track: &MultiplierTrack, traj: &Trajectory, body: &ConvexBody) -> Result<f64> {
    let points = body.test_points(BALL_TEST_POINTS);
    let mut min = f64::INFINITY;
    for (t, h) in track.times.iter().zip(&track.fields) {
        let k = traj
            .times
            .iter()
            .position(|s| (s - t).abs() <= 1e-9)
            .ok_or_else(|| Error::MisalignedSampling(format!("no trajectory sample at t = {t}")))?;
        let u = &traj.states[k];
        u.check_shape(h)?;
        min = min.min(field_inclusion_minimum(h, u, &points));
    }
    Ok(min)
}

/// `min (h, u − Z) ≥ −tol`, reported as `left = −min`, `right = tol`.
pub fn check_multiplier_inclusion(
    track: &MultiplierTrack,
    traj: &Trajectory,
    body: &ConvexBody,
    tol: f64,
) -> Result<EstimateReport> {
    let min = inclusion_minimum(track, traj, body)?;
    Ok(EstimateReport::new("multiplier_inclusion", -min, tol, 0.0)
        .param("source", track.source)
        .param("dt", format!("{:e}", traj.dt))
        .constant("minimum", min)
        .constant("tol", tol))
}

/// `∫ ‖h_residual − h_projection‖_{L¹} dt` over `(0, min(T, 1)]` for a
/// projection run sampled at every step.
pub fn oracle_gap(traj: &Trajectory, reaction: &ReactionSpec) -> Result<f64> {
    if traj.len() != traj.steps + 1 {
        return Err(Error::MisalignedSampling("oracle comparison needs every step sampled".into()));
    }
    let projection = MultiplierTrack::from_projection(traj)?;
    let residual = multiplier_limit_residual(traj, reaction)?;
    let end = traj.times.last().copied().unwrap_or(0.0).min(1.0);
    multiplier_l1_gap(&residual, &projection, [traj.times[1], end])
}

/// Order in `dt` of the oracle gap over a refinement sequence.
pub fn check_oracle_order(gaps: &[(f64, f64)], min_order: f64) -> Result<EstimateReport> {
    Ok(check_order("oracle_equivalence", gaps, min_order)?.constant("min_order", min_order))
}

/// Both limit-multiplier oracles along one projection run, accumulated
/// step by step so that fine steps need no stored trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleStudy {
    pub dt: f64,
    /// As [`oracle_gap`].
    pub gap: f64,
    /// Inclusion minimum of the residual multiplier over all steps.
    pub residual_minimum: f64,
    /// Inclusion minimum of the projection multiplier over all steps.
    pub projection_minimum: f64,
}

pub fn oracle_study(integ: &Integrator, u0: &Field, t_final: f64) -> Result<OracleStudy> {
    if !matches!(integ.scheme(), Scheme::Projection { .. }) {
        return Err(Error::ModelMismatch("oracle study needs the projection scheme".into()));
    }
    let points = integ.body().test_points(BALL_TEST_POINTS);
    let reaction = integ.reaction().clone();
    let end = t_final.min(1.0);
    let mut prev: Option<(f64, Field)> = None;
    let mut last_gap: Option<(f64, f64)> = None;
    let (mut gap, mut res_min, mut proj_min) = (0.0, f64::INFINITY, f64::INFINITY);
    let (_, dt) = integ.integrate_with(u0, t_final, |_, t, u, h| {
        if let Some((s, before)) = &prev {
            let h_proj = h.expect("projection runs carry multipliers");
            let h_res = residual_field(before, u, t - s, &reaction);
            res_min = res_min.min(field_inclusion_minimum(&h_res, u, &points));
            proj_min = proj_min.min(field_inclusion_minimum(h_proj, u, &points));
            if t <= end + 1e-9 {
                let value = h_res.sub(h_proj)?.norm(NormKind::L1)?;
                if let Some((s0, v0)) = last_gap {
                    gap += 0.5 * (t - s0) * (value + v0);
                }
                last_gap = Some((t, value));
            }
        }
        prev = Some((t, u.clone()));
        Ok(())
    })?;
    Ok(OracleStudy { dt, gap, residual_minimum: res_min, projection_minimum: proj_min })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dynamics::{heat_smooth, Integrator};
    use crate::grid::Grid;
    use crate::lagrange::MultiplierSource;
    use crate::rng;

    #[test]
    fn zero_multiplier_passes_inclusion() {
        let g = Arc::new(Grid::interval(1.0, 9).unwrap());
        let body = ConvexBody::simplex(2).unwrap();
        let u = Field::from_fn(g.clone(), 2, |_| vec![0.3, 0.3]);
        let mut traj = Trajectory::new(Default::default(), 0.1);
        traj.push(0.0, u, None);
        let track =
            MultiplierTrack::new(vec![0.0], vec![Field::zeros(g, 2)], MultiplierSource::LimitProjection).unwrap();
        assert_eq!(inclusion_minimum(&track, &traj, &body).unwrap(), 0.0);
        assert!(check_multiplier_inclusion(&track, &traj, &body, 1e-8).unwrap().pass);
    }

    #[test]
    fn scalar_inclusion_example() {
        let g = Arc::new(Grid::interval(1.0, 3).unwrap());
        let body = ConvexBody::cube(1, 1.0).unwrap();
        let mut traj = Trajectory::new(Default::default(), 0.1);
        traj.push(0.0, Field::from_values(g.clone(), 1, vec![1.0]).unwrap(), None);
        let h = Field::from_values(g, 1, vec![3.0]).unwrap();
        let track = MultiplierTrack::new(vec![0.0], vec![h], MultiplierSource::LimitProjection).unwrap();
        // Z ∈ {0, 1}: 3·(1 − 0) = 3 and 3·(1 − 1) = 0
        assert_eq!(inclusion_minimum(&track, &traj, &body).unwrap(), 0.0);
    }

    #[test]
    fn wrong_sign_fails_inclusion() {
        let g = Arc::new(Grid::interval(1.0, 3).unwrap());
        let body = ConvexBody::cube(1, 1.0).unwrap();
        let mut traj = Trajectory::new(Default::default(), 0.1);
        traj.push(0.0, Field::from_values(g.clone(), 1, vec![1.0]).unwrap(), None);
        let h = Field::from_values(g, 1, vec![-3.0]).unwrap();
        let track = MultiplierTrack::new(vec![0.0], vec![h], MultiplierSource::LimitResidual).unwrap();
        assert!(!check_multiplier_inclusion(&track, &traj, &body, 1e-8).unwrap().pass);
    }

    #[test]
    fn projection_multiplier_lies_in_normal_cone() {
        let g = Arc::new(Grid::interval(4.0, 129).unwrap());
        let body = ConvexBody::simplex(2).unwrap();
        let u0 = heat_smooth(&rng::field_in_body(&g, &body, &mut rng::stream(6, 0)), 0.002, 5);
        let integ = Integrator::projected(g, body.clone(), ReactionSpec::LinearLambda(5.0), 2e-3).unwrap();
        let traj = integ.integrate(&u0, 0.5, 1).unwrap();
        let track = MultiplierTrack::from_projection(&traj).unwrap();
        assert!(track.sup_linf() > 0.0);
        assert!(check_multiplier_inclusion(&track, &traj, &body, 1e-8).unwrap().pass);
        assert!(check_multiplier_linf(&track, 5.0, body.diameter(), 0.25).pass);
    }

    fn oracle_setup() -> (Integrator, Field) {
        let g = Arc::new(Grid::interval(4.0, 65).unwrap());
        let body = ConvexBody::simplex(2).unwrap();
        let u0 = heat_smooth(&rng::field_in_body(&g, &body, &mut rng::stream(7, 0)), 0.002, 5);
        (Integrator::projected(g, body, ReactionSpec::LinearLambda(5.0), 1e-3).unwrap(), u0)
    }

    #[test]
    fn streamed_study_matches_stored_run() {
        let (integ, u0) = oracle_setup();
        let traj = integ.integrate(&u0, 0.3, 1).unwrap();
        let study = oracle_study(&integ, &u0, 0.3).unwrap();
        let stored = oracle_gap(&traj, integ.reaction()).unwrap();
        assert!((study.gap - stored).abs() <= 1e-12 * stored);
        let proj = MultiplierTrack::from_projection(&traj).unwrap();
        let res = multiplier_limit_residual(&traj, integ.reaction()).unwrap();
        assert_eq!(study.residual_minimum, inclusion_minimum(&res, &traj, integ.body()).unwrap());
        // the zero multiplier at t = 0 is not part of the study
        let tail = MultiplierTrack::new(proj.times[1..].to_vec(), proj.fields[1..].to_vec(), proj.source).unwrap();
        assert_eq!(study.projection_minimum, inclusion_minimum(&tail, &traj, integ.body()).unwrap());
    }

    #[test]
    fn oracles_agree_at_first_order() {
        // The gap reaches its asymptotic order once dt is small against h².
        let (integ, u0) = oracle_setup();
        let gaps: Vec<(f64, f64)> = [5e-4, 2.5e-4, 1.25e-4]
            .iter()
            .map(|&dt| (dt, oracle_study(&integ.with_dt(dt).unwrap(), &u0, 0.5).unwrap().gap))
            .collect();
        let report = check_oracle_order(&gaps, 0.9).unwrap();
        assert!(report.pass, "{report:?}");
    }
}
