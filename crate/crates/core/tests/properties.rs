//! Invariants over random inputs.

use std::path::Path;
use std::sync::Arc;

use obstacle_rd::config::{BodyConfig, Epsilon, ExperimentConfig, SchemeKind, StepRule};
use obstacle_rd::io::{field_to_string, parse_field};
use obstacle_rd::penalty::ThetaConstants;
use obstacle_rd::suite::Criterion;
use obstacle_rd::{ConvexBody, Field, Grid, Integrator, NormKind, PenaltyModel, ReactionSpec, ScalarProfile, Scheme};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn near_simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..3.0f64, n)
}

fn body() -> impl Strategy<Value = ConvexBody> {
    prop_oneof![
        (1usize..6).prop_map(|n| ConvexBody::simplex(n).unwrap()),
        (1usize..5, 0.2..2.0f64).prop_map(|(n, s)| ConvexBody::cube(n, s).unwrap()),
        // the origin lies in every body: |center| ≤ 0.8 < radius
        (prop::collection::vec(-0.4..0.4f64, 1..5), 0.9..2.0f64).prop_map(|(c, r)| ConvexBody::ball(c, r).unwrap()),
    ]
}

fn body_and_points() -> impl Strategy<Value = (ConvexBody, Vec<f64>, Vec<f64>)> {
    body().prop_flat_map(|b| {
        let n = b.dim();
        (Just(b), prop::collection::vec(-3.0..3.0f64, n), prop::collection::vec(-3.0..3.0f64, n))
    })
}

proptest! {
    #[test]
    fn projection_is_a_nonexpansive_retraction((b, z, y) in body_and_points()) {
        let (pz, py) = (b.project(&z), b.project(&y));
        let inside = |p: &[f64]| b.distance(p) <= 1e-12;
        prop_assert!(inside(&pz));
        prop_assert!(dist(&b.project(&pz), &pz) <= 1e-12);
        prop_assert!(dist(&pz, &py) <= dist(&z, &y) + 1e-12);
        // variational characterisation: (z − Pz)·(k − Pz) ≤ 0 for every k ∈ K
        let normal: Vec<f64> = z.iter().zip(&pz).map(|(a, p)| a - p).collect();
        for k in b.test_points(16).iter().chain([&py]) {
            let to: Vec<f64> = k.iter().zip(&pz).map(|(a, p)| a - p).collect();
            prop_assert!(dot(&normal, &to) <= 1e-10);
        }
    }

    #[test]
    fn profile_identity(eps in 1e-4..1.0f64, z in -2.0..3.0f64) {
        let f = ScalarProfile::new(eps).unwrap();
        let (lhs, rhs) = (f.derivative(z).powi(2), 4.0 / eps * f.value(z));
        prop_assert!((lhs - rhs).abs() <= 1e-14 * lhs.max(rhs).max(1.0));
        prop_assert!(f.value(z) >= 0.0);
        prop_assert_eq!(f.value(z) == 0.0, z <= eps);
    }

    #[test]
    fn simplex_sandwich(n in 2usize..7, eps in 1e-3..0.5f64, seed in near_simplex(6)) {
        let p = PenaltyModel::simplex(n, eps).unwrap();
        let u = &seed[..n];
        let (lo, mid, hi) = p.gradient_sandwich(u).unwrap();
        let scale = hi.max(mid).max(f64::MIN_POSITIVE);
        prop_assert!((mid - lo) / scale >= -1e-10);
        prop_assert!((hi - mid) / scale >= -1e-10);
        let c = ThetaConstants::new(n);
        prop_assert!(c.kappa2 > 0.0 && c.kappa2 <= c.kappa1);
    }

    #[test]
    fn penalty_is_convex_and_vanishes_near_the_body(
        (b, z, y) in body_and_points(),
        eps in 1e-2..0.5f64,
        s in 0.0..1.0f64,
    ) {
        let p = PenaltyModel::for_body(&b, eps, 0.2).unwrap();
        let mid: Vec<f64> = z.iter().zip(&y).map(|(a, c)| s * a + (1.0 - s) * c).collect();
        let chord = s * p.value(&z) + (1.0 - s) * p.value(&y);
        prop_assert!(p.value(&mid) <= chord + 1e-9 * chord.max(1.0));
        prop_assert_eq!(p.value(&b.project(&z)), 0.0);
    }

    #[test]
    fn gradient_matches_central_differences((b, z, _) in body_and_points(), eps in 0.05..0.5f64) {
        let p = PenaltyModel::for_body(&b, eps, 0.2).unwrap();
        let g = p.grad(&z);
        let h = 1e-6;
        for i in 0..z.len() {
            let (mut a, mut c) = (z.clone(), z.clone());
            a[i] += h;
            c[i] -= h;
            let fd = (p.value(&a) - p.value(&c)) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-4 * (1.0 + g[i].abs()), "component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn field_text_round_trip_is_exact(values in prop::collection::vec(-1e3..1e3f64, 2 * 15)) {
        let g = Arc::new(Grid::interval(2.5, 17).unwrap());
        let f = Field::from_values(g, 2, values).unwrap();
        prop_assert_eq!(parse_field(&field_to_string(&f), Path::new("mem")).unwrap(), f);
    }
}

fn sample_config() -> impl Strategy<Value = ExperimentConfig> {
    (
        prop_oneof![Just(BodyConfig::Simplex), (0.5..2.0f64).prop_map(|side| BodyConfig::Box { side })],
        -2.0..6.0f64,
        prop_oneof![Just(Epsilon::Single(0.1)), Just(Epsilon::List(vec![0.1, 0.05, 0.02]))],
        prop_oneof![Just(StepRule::Cap), (4.0..16.0f64).prop_map(StepRule::EpsFraction)],
        (0u64..1000, 1usize..5, 0.1..2.0f64, any::<bool>()),
        prop::sample::subsequence(Criterion::ALL.to_vec(), 0..4),
    )
        .prop_map(|(body, lambda, epsilon, step, (seed, every, t_final, smooth), checks)| ExperimentConfig {
            body,
            lambda,
            epsilon,
            step,
            seed,
            sample_every: every,
            t_final,
            smooth_initial: smooth,
            checks,
            ..ExperimentConfig::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_serialization_round_trips(c in sample_config()) {
        prop_assume!(c.validate().is_ok());
        let back = ExperimentConfig::parse(&c.serialize(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn projection_scheme_keeps_states_in_the_body(lambda in -2.0..8.0f64, seed in 0u64..1000) {
        let g = Arc::new(Grid::interval(4.0, 33).unwrap());
        let body = ConvexBody::simplex(2).unwrap();
        let u0 = obstacle_rd::rng::field_in_body(&g, &body, &mut obstacle_rd::rng::stream(seed, 0));
        let integ = Integrator::projected(g, body.clone(), ReactionSpec::LinearLambda(lambda), 0.01).unwrap();
        let traj = integ.integrate(&u0, 0.2, 1).unwrap();
        for s in &traj.states {
            prop_assert!(s.nodes().all(|z| body.distance(z) <= 1e-12));
        }
    }

    #[test]
    fn penalized_flow_without_reaction_is_l2_contractive(seed in 0u64..1000, eps in 1e-2..0.2f64) {
        let g = Arc::new(Grid::interval(4.0, 33).unwrap());
        let body = ConvexBody::simplex(2).unwrap();
        let mut rng = obstacle_rd::rng::stream(seed, 1);
        let a = obstacle_rd::rng::field_in_body(&g, &body, &mut rng);
        let b = obstacle_rd::rng::field_in_body(&g, &body, &mut rng);
        let p = PenaltyModel::simplex(2, eps).unwrap();
        let dt = p.explicit_step_cap();
        let integ = Integrator::penalized(g, p, ReactionSpec::LinearLambda(0.0), Scheme::Imex { dt }).unwrap();
        let (ta, tb) = (integ.integrate(&a, 0.1, 1).unwrap(), integ.integrate(&b, 0.1, 1).unwrap());
        let mut prev = f64::INFINITY;
        for (x, y) in ta.states.iter().zip(&tb.states) {
            let d = x.sub(y).unwrap().norm(NormKind::L2).unwrap();
            prop_assert!(d <= prev * (1.0 + 1e-12));
            prev = d;
        }
    }
}

#[test]
fn projection_scheme_config_requires_fixed_step() {
    let c = ExperimentConfig { scheme: SchemeKind::Projection, ..ExperimentConfig::default() };
    assert!(c.validate().is_err());
    let c = ExperimentConfig { step: StepRule::Fixed(0.01), ..c };
    assert!(c.validate().is_ok());
}
