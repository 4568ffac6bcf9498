//! Smooth convex penalties `F_ε` approximating the indicator of `K`.
//!
//! All variants are built from the one-sided quadratic profile
//! `f_ε(z) = ε⁻¹(z − ε)²` for `z ≥ ε` and `0` otherwise, whose derivative
//! satisfies `|f'_ε|² = (4/ε) f_ε` exactly.

use crate::convex::{ConvexBody, SmoothDistance};
use crate::error::{Error, Result};

/// The scalar profile `f_ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarProfile {
    eps: f64,
}

impl ScalarProfile {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::NonPositiveEpsilon(eps));
        }
        Ok(ScalarProfile { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        if z <= self.eps {
            0.0
        } else {
            let d = z - self.eps;
            d * d / self.eps
        }
    }

    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        if z <= self.eps {
            0.0
        } else {
            2.0 * (z - self.eps) / self.eps
        }
    }

    /// Solves `f'_ε(v) = a v + b` for `v > ε` (`a < 2/ε`, `b ≥ 0`).
    ///
    /// This is the constant supersolution level of the comparison argument
    /// behind the uniform multiplier bound.
    pub fn comparison_level(&self, a: f64, b: f64) -> Option<f64> {
        let slope = 2.0 / self.eps - a;
        if slope <= 0.0 {
            return None;
        }
        Some((2.0 + b) / slope)
    }
}

/// Which penalty family to use.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyKind {
    /// `f_ε(M(u))` with the corrected distance `M` (negative inside `K`).
    SmoothConvex(SmoothDistance),
    /// `f_ε(dist(u, K))` with the plain distance.
    PlainDistance(ConvexBody),
    /// `f_ε(Σuᵢ − 1) + Σ f_ε(−uᵢ)`.
    Simplex { n: usize },
    /// `Σ f_ε(u_k − L) + f_ε(−u_k)`.
    Box { n: usize, side: f64 },
}

/// An ε-indexed convex penalty with value and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyModel {
    kind: PenaltyKind,
    profile: ScalarProfile,
}

impl PenaltyModel {
    pub fn new(kind: PenaltyKind, eps: f64) -> Result<Self> {
        Ok(PenaltyModel { kind, profile: ScalarProfile::new(eps)? })
    }

    pub fn simplex(n: usize, eps: f64) -> Result<Self> {
        ConvexBody::simplex(n)?;
        Self::new(PenaltyKind::Simplex { n }, eps)
    }

    /// The family matching a body: simplex and box get their componentwise
    /// penalties, a ball gets the corrected smooth distance with offset
    /// `delta`.
    pub fn for_body(body: &ConvexBody, eps: f64, delta: f64) -> Result<Self> {
        let kind = match body {
            ConvexBody::Simplex { n } => PenaltyKind::Simplex { n: *n },
            ConvexBody::Box { n, side } => PenaltyKind::Box { n: *n, side: *side },
            ConvexBody::Ball { .. } => PenaltyKind::SmoothConvex(SmoothDistance::new(body, delta)?),
        };
        Self::new(kind, eps)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.kind.clone(), eps)
    }

    pub fn kind(&self) -> &PenaltyKind {
        &self.kind
    }

    pub fn eps(&self) -> f64 {
        self.profile.eps
    }

    pub fn profile(&self) -> ScalarProfile {
        self.profile
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            PenaltyKind::SmoothConvex(s) => s.body().dim(),
            PenaltyKind::PlainDistance(b) => b.dim(),
            PenaltyKind::Simplex { n } | PenaltyKind::Box { n, .. } => *n,
        }
    }

    /// The constraint set this penalty approximates.
    pub fn body(&self) -> ConvexBody {
        match &self.kind {
            PenaltyKind::SmoothConvex(s) => s.body(),
            PenaltyKind::PlainDistance(b) => b.clone(),
            PenaltyKind::Simplex { n } => ConvexBody::Simplex { n: *n },
            PenaltyKind::Box { n, side } => ConvexBody::Box { n: *n, side: *side },
        }
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let f = &self.profile;
        match &self.kind {
            PenaltyKind::SmoothConvex(s) => f.value(s.value(u)),
            PenaltyKind::PlainDistance(b) => f.value(b.distance(u)),
            PenaltyKind::Simplex { .. } => {
                f.value(u.iter().sum::<f64>() - 1.0) + u.iter().map(|&x| f.value(-x)).sum::<f64>()
            }
            PenaltyKind::Box { side, .. } => u.iter().map(|&x| f.value(x - side) + f.value(-x)).sum(),
        }
    }

    pub fn grad_into(&self, u: &[f64], out: &mut [f64]) {
        let f = &self.profile;
        match &self.kind {
            PenaltyKind::SmoothConvex(s) => {
                let m = s.eval_into(u, out);
                let d = f.derivative(m);
                out.iter_mut().for_each(|g| *g *= d);
            }
            PenaltyKind::PlainDistance(b) => {
                let dist = b.distance(u);
                let d = f.derivative(dist);
                if d == 0.0 {
                    out.iter_mut().for_each(|g| *g = 0.0);
                } else {
                    let p = b.project(u);
                    for ((g, a), q) in out.iter_mut().zip(u).zip(&p) {
                        *g = d * (a - q) / dist;
                    }
                }
            }
            PenaltyKind::Simplex { .. } => {
                let sum_term = f.derivative(u.iter().sum::<f64>() - 1.0);
                for (g, &x) in out.iter_mut().zip(u) {
                    *g = sum_term - f.derivative(-x);
                }
            }
            PenaltyKind::Box { side, .. } => {
                for (g, &x) in out.iter_mut().zip(u) {
                    *g = f.derivative(x - side) - f.derivative(-x);
                }
            }
        }
    }

    pub fn grad(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; u.len()];
        self.grad_into(u, &mut g);
        g
    }

    /// An upper bound on the Lipschitz constant of the gradient.
    ///
    /// Simplex: the Hessian is `(2/ε)(a₀𝟙𝟙ᵀ + diag(aᵢ))` with activity flags
    /// `aᵢ ∈ {0,1}`, whose spectral radius is at most `n + 1` times `2/ε`
    /// and `(3 + √5)/2` for `n = 2`. Box: `2/ε`. Distance penalties:
    /// `2/ε` times `|∇M|²` plus `f'_ε(M)` times the curvature of `M`, bounded
    /// on the region `M ≤ 1`.
    pub fn lipschitz_bound(&self) -> f64 {
        let base = 2.0 / self.profile.eps;
        match &self.kind {
            PenaltyKind::Simplex { n } => {
                let factor = match n {
                    1 => 2.0,
                    2 => (3.0 + 5f64.sqrt()) / 2.0,
                    _ => (*n + 1) as f64,
                };
                base * factor
            }
            PenaltyKind::Box { .. } => base,
            // f''·n̂n̂ᵀ plus f'(d)/d times the projection curvature, both ≤ 2/ε
            PenaltyKind::PlainDistance(_) => 2.0 * base,
            PenaltyKind::SmoothConvex(s) => {
                let th = s.theta(1.0);
                let d = (1.0 + s.delta().powi(3)).cbrt();
                base * (th * th + 6.0 * d)
            }
        }
    }

    /// The largest stable explicit step for the penalty term: `min(ε/4, 2/Lip)`.
    pub fn explicit_step_cap(&self) -> f64 {
        (self.profile.eps / 4.0).min(2.0 / self.lipschitz_bound())
    }

    /// For the simplex penalty: `(κ₂/ε F, |F'|², κ₁/ε F)` with
    /// `κ₂ = 4θ(n)` and `κ₁ = 4n`.
    pub fn gradient_sandwich(&self, u: &[f64]) -> Result<(f64, f64, f64)> {
        let PenaltyKind::Simplex { n } = self.kind else {
            return Err(Error::ModelMismatch("gradient sandwich needs the simplex penalty".into()));
        };
        let c = ThetaConstants::new(n);
        let value = self.value(u);
        let g = self.grad(u);
        let mid: f64 = g.iter().map(|x| x * x).sum();
        let eps = self.profile.eps;
        Ok((c.kappa2 / eps * value, mid, c.kappa1 / eps * value))
    }

    /// Splits a simplex multiplier `h = f'₀𝟙 − (f'ᵢ)` into its nonnegative parts
    /// `f'₀ = f'_ε(Σuᵢ − 1)` and `f'ᵢ = f'_ε(−uᵢ)`.
    pub fn simplex_parts(&self, u: &[f64]) -> Option<(f64, Vec<f64>)> {
        match self.kind {
            PenaltyKind::Simplex { .. } => {
                let f = &self.profile;
                Some((f.derivative(u.iter().sum::<f64>() - 1.0), u.iter().map(|&x| f.derivative(-x)).collect()))
            }
            _ => None,
        }
    }
}

/// Constants of the gradient-value sandwich for the simplex penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaConstants {
    pub n: usize,
    pub theta_n: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl ThetaConstants {
    pub fn new(n: usize) -> Self {
        let m = (n + 1) as f64;
        let theta_n = (m - (m * m - 4.0).sqrt()) / 4.0;
        ThetaConstants { n, theta_n, kappa1: 4.0 * n as f64, kappa2: 4.0 * theta_n }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn profile_examples() {
        let f = ScalarProfile::new(0.1).unwrap();
        assert!((f.value(0.3) - 0.4).abs() < 1e-15);
        assert!((f.derivative(0.3) - 4.0).abs() < 1e-14);
        assert_eq!(f.value(0.05), 0.0);
        assert_eq!(f.derivative(0.05), 0.0);
        // continuity at z = ε
        assert_eq!(f.value(0.1), 0.0);
        assert!(f.value(0.1 + 1e-12) < 1e-20);
        let g = ScalarProfile::new(0.01).unwrap();
        assert!((g.derivative(0.02).powi(2) - 4.0).abs() < 1e-12);
        assert!((g.value(0.02) * 4.0 / 0.01 - 4.0).abs() < 1e-12);
        assert!(matches!(ScalarProfile::new(0.0), Err(Error::NonPositiveEpsilon(_))));
        assert!(ScalarProfile::new(-1.0).is_err());
    }

    #[test]
    fn comparison_level_solves_fixed_point() {
        let f = ScalarProfile::new(0.01).unwrap();
        let v = f.comparison_level(5.0, 5.0 * 2f64.sqrt()).unwrap();
        assert!((f.derivative(v) - (5.0 * v + 5.0 * 2f64.sqrt())).abs() < 1e-10);
        assert!(ScalarProfile::new(1.0).unwrap().comparison_level(3.0, 1.0).is_none());
    }

    #[test]
    fn penalty_examples() {
        let p = PenaltyModel::simplex(2, 0.1).unwrap();
        assert!((p.value(&[0.7, 0.7]) - 0.9).abs() < 1e-14);
        let g = p.grad(&[0.7, 0.7]);
        assert!((g[0] - 6.0).abs() < 1e-13 && (g[1] - 6.0).abs() < 1e-13);

        let ball = ConvexBody::ball(vec![0.0, 0.0], 1.0).unwrap();
        let s = PenaltyModel::for_body(&ball, 0.01, 0.1).unwrap();
        assert!((s.value(&[0.0, 1.2]) - 0.0256).abs() < 1e-13);

        for model in [
            p.clone(),
            s.clone(),
            PenaltyModel::new(PenaltyKind::PlainDistance(ball.clone()), 0.1).unwrap(),
            PenaltyModel::new(PenaltyKind::Box { n: 2, side: 1.0 }, 0.1).unwrap(),
        ] {
            assert_eq!(model.value(&[0.2, 0.3]), 0.0);
            assert!(model.grad(&[0.2, 0.3]).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ball = ConvexBody::ball(vec![0.1, 0.0, -0.1], 1.0).unwrap();
        let models = [
            PenaltyModel::simplex(3, 0.05).unwrap(),
            PenaltyModel::for_body(&ball, 0.01, 0.1).unwrap(),
            PenaltyModel::new(PenaltyKind::PlainDistance(ConvexBody::simplex(3).unwrap()), 0.05).unwrap(),
            PenaltyModel::new(PenaltyKind::Box { n: 3, side: 0.5 }, 0.05).unwrap(),
        ];
        let step = 1e-6;
        for model in &models {
            for _ in 0..200 {
                let u: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
                let g = model.grad(&u);
                for i in 0..3 {
                    let mut up = u.clone();
                    let mut um = u.clone();
                    up[i] += step;
                    um[i] -= step;
                    let fd = (model.value(&up) - model.value(&um)) / (2.0 * step);
                    let scale = g[i].abs().max(1.0);
                    assert!((fd - g[i]).abs() <= 1e-6 * scale, "{model:?} at {u:?}: {fd} vs {}", g[i]);
                }
            }
        }
    }

    #[test]
    fn theta_constants() {
        let c = ThetaConstants::new(2);
        assert!((c.theta_n - (3.0 - 5f64.sqrt()) / 4.0).abs() < 1e-16);
        assert!((c.theta_n - 0.190983).abs() < 1e-6);
        assert_eq!(c.kappa1, 8.0);
        for n in 1..10 {
            assert!(ThetaConstants::new(n).theta_n > 0.0);
        }
    }

    #[test]
    fn sandwich_vanishes_in_k() {
        let p = PenaltyModel::simplex(3, 0.1).unwrap();
        assert_eq!(p.gradient_sandwich(&[0.1, 0.2, 0.3]).unwrap(), (0.0, 0.0, 0.0));
        let b = PenaltyModel::new(PenaltyKind::Box { n: 2, side: 1.0 }, 0.1).unwrap();
        assert!(b.gradient_sandwich(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_grows_as_eps_shrinks_outside_k() {
        let v = [0.9, 0.4];
        let mut last = 0.0;
        for eps in [0.1, 0.05, 0.01, 1e-3, 1e-4] {
            let p = PenaltyModel::simplex(2, eps).unwrap();
            let g: f64 = p.grad(&v).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(g >= last);
            last = g;
        }
        assert!(last > 1e3);
    }

    #[test]
    fn explicit_cap_respects_lipschitz() {
        let p = PenaltyModel::simplex(2, 0.01).unwrap();
        assert_eq!(p.explicit_step_cap(), 0.0025);
        let p5 = PenaltyModel::simplex(5, 0.01).unwrap();
        assert!(p5.explicit_step_cap() < 0.0025);
    }
}
