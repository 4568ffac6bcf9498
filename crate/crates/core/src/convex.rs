//! Constraint sets `K ⊂ ℝⁿ` and their exact geometry.
//!
//! Every body contains the origin, which is what makes the homogeneous
//! Dirichlet condition compatible with the constraint.

use crate::error::{Error, Result};

/// A bounded closed convex set containing `0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    /// `{p : pᵢ ≥ 0, Σpᵢ ≤ 1}`.
    Simplex { n: usize },
    /// Closed Euclidean ball; `|center| ≤ radius` so that `0 ∈ K`.
    Ball { center: Vec<f64>, radius: f64 },
    /// `[0, side]ⁿ`.
    Box { n: usize, side: f64 },
}

impl ConvexBody {
    pub fn simplex(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidBody("simplex dimension must be at least 1".into()));
        }
        Ok(ConvexBody::Simplex { n })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidBody("ball center must have at least one component".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidBody(format!("ball radius must be positive, got {radius}")));
        }
        if norm(&center) > radius {
            return Err(Error::InvalidBody(format!(
                "ball must contain the origin: |center| = {} > radius = {radius}",
                norm(&center)
            )));
        }
        Ok(ConvexBody::Ball { center, radius })
    }

    pub fn cube(n: usize, side: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidBody("box dimension must be at least 1".into()));
        }
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::InvalidBody(format!("box side must be positive, got {side}")));
        }
        Ok(ConvexBody::Box { n, side })
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Simplex { n } | ConvexBody::Box { n, .. } => *n,
            ConvexBody::Ball { center, .. } => center.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConvexBody::Simplex { .. } => "simplex",
            ConvexBody::Ball { .. } => "ball",
            ConvexBody::Box { .. } => "box",
        }
    }

    /// Closed-set membership with exact inequalities.
    pub fn contains(&self, z: &[f64]) -> bool {
        debug_assert_eq!(z.len(), self.dim());
        match self {
            ConvexBody::Simplex { .. } => z.iter().all(|&x| x >= 0.0) && z.iter().sum::<f64>() <= 1.0,
            ConvexBody::Ball { center, radius } => {
                let d2: f64 = z.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 <= radius * radius
            }
            ConvexBody::Box { side, .. } => z.iter().all(|&x| (0.0..=*side).contains(&x)),
        }
    }

    /// Euclidean projection onto `K`, written into `out`.
    pub fn project_into(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        match self {
            ConvexBody::Simplex { .. } => project_capped_simplex(z, out),
            ConvexBody::Ball { center, radius } => {
                let r = z.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                if r <= *radius {
                    out.copy_from_slice(z);
                } else {
                    let s = radius / r;
                    for ((o, a), c) in out.iter_mut().zip(z).zip(center) {
                        *o = c + s * (a - c);
                    }
                }
            }
            ConvexBody::Box { side, .. } => {
                for (o, a) in out.iter_mut().zip(z) {
                    *o = a.clamp(0.0, *side);
                }
            }
        }
    }

    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        self.project_into(z, &mut out);
        out
    }

    /// `|z − project(z)|`.
    pub fn distance(&self, z: &[f64]) -> f64 {
        match self {
            ConvexBody::Ball { center, radius } => {
                let r = z.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                (r - radius).max(0.0)
            }
            _ => {
                let p = self.project(z);
                z.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            ConvexBody::Simplex { n } => {
                if *n == 1 {
                    1.0
                } else {
                    std::f64::consts::SQRT_2
                }
            }
            ConvexBody::Ball { radius, .. } => 2.0 * radius,
            ConvexBody::Box { n, side } => side * (*n as f64).sqrt(),
        }
    }

    /// Points `Z ∈ K` that test the normal-cone inclusion `(h, u − Z) ≥ 0`.
    ///
    /// For polytopes the vertices suffice (the pairing is affine in `Z`); for
    /// the ball we return `samples` boundary points spread over the sphere.
    pub fn test_points(&self, samples: usize) -> Vec<Vec<f64>> {
        match self {
            ConvexBody::Simplex { n } => {
                let mut pts = vec![vec![0.0; *n]];
                for i in 0..*n {
                    let mut e = vec![0.0; *n];
                    e[i] = 1.0;
                    pts.push(e);
                }
                pts
            }
            ConvexBody::Box { n, side } => (0..1usize << n)
                .map(|mask| (0..*n).map(|i| if mask >> i & 1 == 1 { *side } else { 0.0 }).collect())
                .collect(),
            ConvexBody::Ball { center, radius } => {
                let n = center.len();
                let mut pts = Vec::with_capacity(samples);
                for k in 0..samples {
                    let dir = sphere_direction(n, k, samples);
                    pts.push(center.iter().zip(&dir).map(|(c, d)| c + radius * d).collect());
                }
                pts
            }
        }
    }
}

/// Deterministic, roughly uniform unit directions (golden-angle spiral in 3D,
/// equispaced angles in 2D, axis-cycling otherwise).
fn sphere_direction(n: usize, k: usize, total: usize) -> Vec<f64> {
    match n {
        1 => vec![if k.is_multiple_of(2) { 1.0 } else { -1.0 }],
        2 => {
            let a = std::f64::consts::TAU * k as f64 / total as f64;
            vec![a.cos(), a.sin()]
        }
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / total as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * k as f64;
            vec![r * a.cos(), r * a.sin(), z]
        }
        _ => {
            let mut v = vec![0.0; n];
            let a = std::f64::consts::TAU * k as f64 / total as f64;
            let i = k % n;
            let j = (k + 1) % n;
            v[i] = a.cos();
            v[j] += a.sin();
            let s = norm(&v);
            v.iter_mut().for_each(|x| *x /= s);
            v
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Projection onto `{p ≥ 0, Σp ≤ 1}`.
///
/// If the orthant projection already satisfies the sum constraint it is the
/// answer; otherwise the sum face is active and the problem reduces to the
/// probability simplex, solved by sorting and thresholding.
fn project_capped_simplex(z: &[f64], out: &mut [f64]) {
    for (o, a) in out.iter_mut().zip(z) {
        *o = a.max(0.0);
    }
    if out.iter().sum::<f64>() <= 1.0 {
        return;
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumulative += v;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    for (o, a) in out.iter_mut().zip(z) {
        *o = (a - tau).max(0.0);
    }
}

/// The corrected distance `M(z) = dist(z, K₋δ)³ − δ³` over a ball, where
/// `K₋δ` is the concentric ball of radius `R − δ`.
///
/// `M` is convex and `C^{2,1}`, negative inside `K`, zero exactly on `∂K`,
/// and `|∇M| = θ(M)` with `θ(w) = 3(w + δ³)^{2/3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothDistance {
    center: Vec<f64>,
    radius: f64,
    delta: f64,
}

impl SmoothDistance {
    pub fn new(body: &ConvexBody, delta: f64) -> Result<Self> {
        match body {
            ConvexBody::Ball { center, radius } => {
                if !(delta > 0.0) || delta >= *radius {
                    return Err(Error::InvalidDelta { delta, radius: *radius });
                }
                Ok(SmoothDistance { center: center.clone(), radius: *radius, delta })
            }
            other => Err(Error::UnsupportedBody(other.name().into())),
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn body(&self) -> ConvexBody {
        ConvexBody::Ball { center: self.center.clone(), radius: self.radius }
    }

    fn inner_radius(&self) -> f64 {
        self.radius - self.delta
    }

    /// Distance to the offset body and the offset from the center.
    fn offset_distance(&self, z: &[f64]) -> (f64, f64) {
        let r = z.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
        ((r - self.inner_radius()).max(0.0), r)
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        let (d, _) = self.offset_distance(z);
        d.powi(3) - self.delta.powi(3)
    }

    /// `(M(z), ∇M(z))`.
    pub fn eval(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; z.len()];
        let v = self.eval_into(z, &mut g);
        (v, g)
    }

    pub fn eval_into(&self, z: &[f64], grad: &mut [f64]) -> f64 {
        let (d, r) = self.offset_distance(z);
        if d > 0.0 {
            let s = 3.0 * d * d / r;
            for ((g, a), c) in grad.iter_mut().zip(z).zip(&self.center) {
                *g = s * (a - c);
            }
        } else {
            grad.iter_mut().for_each(|g| *g = 0.0);
        }
        d.powi(3) - self.delta.powi(3)
    }

    /// Hessian of `M`, row-major `n × n`.
    ///
    /// With `ρ = R − δ`, `r = |z − c|`, `û = (z − c)/r`:
    /// `H = 6(r − ρ) ûûᵀ + 3(r − ρ)²/r (I − ûûᵀ)` outside `K₋δ`, zero inside.
    pub fn hessian(&self, z: &[f64]) -> Vec<f64> {
        let n = z.len();
        let mut h = vec![0.0; n * n];
        let (d, r) = self.offset_distance(z);
        if d <= 0.0 {
            return h;
        }
        let u: Vec<f64> = z.iter().zip(&self.center).map(|(a, c)| (a - c) / r).collect();
        let radial = 6.0 * d;
        let tangential = 3.0 * d * d / r;
        for i in 0..n {
            for j in 0..n {
                let uu = u[i] * u[j];
                let id = if i == j { 1.0 } else { 0.0 };
                h[i * n + j] = radial * uu + tangential * (id - uu);
            }
        }
        h
    }

    /// `θ(w) = 3(w + δ³)^{2/3}`.
    pub fn theta(&self, w: f64) -> f64 {
        3.0 * (w + self.delta.powi(3)).max(0.0).powf(2.0 / 3.0)
    }
}
