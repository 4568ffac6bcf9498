//! Lagrange multipliers `h` of penalized and limit trajectories.

use std::fmt;

use crate::dynamics::{ReactionSpec, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{time_integral, Field, NormKind};
use crate::penalty::PenaltyModel;

/// How a multiplier track was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierSource {
    /// `h = F'_ε(u_ε)`.
    Penalized { eps: f64 },
    /// `h = −D_t u + Δu + λu` on a projection run, backward differences.
    LimitResidual,
    /// `h = (pre − post)/dt` recorded by the projection scheme.
    LimitProjection,
}

impl fmt::Display for MultiplierSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiplierSource::Penalized { eps } => write!(f, "penalized(eps={eps:e})"),
            MultiplierSource::LimitResidual => write!(f, "limit-residual"),
            MultiplierSource::LimitProjection => write!(f, "limit-projection"),
        }
    }
}

impl std::str::FromStr for MultiplierSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "limit-residual" => Ok(MultiplierSource::LimitResidual),
            "limit-projection" => Ok(MultiplierSource::LimitProjection),
            _ => s
                .strip_prefix("penalized(eps=")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|e| e.parse().ok())
                .map(|eps| MultiplierSource::Penalized { eps })
                .ok_or_else(|| format!("unknown multiplier source {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierTrack {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    pub source: MultiplierSource,
}

impl MultiplierTrack {
    pub fn new(times: Vec<f64>, fields: Vec<Field>, source: MultiplierSource) -> Result<Self> {
        if times.len() != fields.len() {
            return Err(Error::ShapeMismatch(format!("{} times for {} fields", times.len(), fields.len())));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::MisalignedSampling("times must increase strictly".into()));
        }
        if let Some(first) = fields.first() {
            for f in &fields[1..] {
                first.check_shape(f)?;
            }
        }
        if fields.iter().any(|f| !f.is_finite()) {
            return Err(Error::RunFailed("non-finite multiplier".into()));
        }
        Ok(MultiplierTrack { times, fields, source })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `sup_t ‖h(t)‖_{L∞}`.
    pub fn sup_linf(&self) -> f64 {
        self.fields.iter().map(|h| h.norm(NormKind::Linf).expect("Linf always defined")).fold(0.0, f64::max)
    }

    /// The projection multipliers stored by a projection run.
    pub fn from_projection(traj: &Trajectory) -> Result<Self> {
        let fields = traj
            .multipliers
            .clone()
            .ok_or_else(|| Error::ModelMismatch("trajectory carries no projection multipliers".into()))?;
        MultiplierTrack::new(traj.times.clone(), fields, MultiplierSource::LimitProjection)
    }
}

/// `h(t, x) = F'_ε(u(t, x))` at every sample.
pub fn multiplier_penalized(traj: &Trajectory, p: &PenaltyModel) -> Result<MultiplierTrack> {
    match traj.meta_f64("epsilon") {
        Some(eps) if (eps - p.eps()).abs() <= 1e-12 * p.eps() => {}
        Some(eps) => {
            return Err(Error::ModelMismatch(format!("trajectory has epsilon {eps}, penalty {}", p.eps())));
        }
        None => return Err(Error::ModelMismatch("trajectory was not produced by a penalized scheme".into())),
    }
    let n = p.dim();
    if traj.states.first().is_some_and(|s| s.components() != n) {
        return Err(Error::ModelMismatch("component count differs from the penalty's".into()));
    }
    let fields = traj
        .states
        .iter()
        .map(|u| {
            let mut h = Field::zeros(u.grid().clone(), n);
            for k in 0..u.len_nodes() {
                p.grad_into(u.node(k), h.node_mut(k));
            }
            h
        })
        .collect();
    MultiplierTrack::new(traj.times.clone(), fields, MultiplierSource::Penalized { eps: p.eps() })
}

/// `h = −(cur − prev)/dt + Δcur − g(x, cur)` at every node.
pub(crate) fn residual_field(prev: &Field, cur: &Field, dt: f64, r: &ReactionSpec) -> Field {
    let grid = cur.grid().clone();
    let n = cur.components();
    let lap = cur.laplacian();
    let mut h = Field::zeros(grid.clone(), n);
    let mut forcing = vec![0.0; n];
    for k in 0..cur.len_nodes() {
        r.forcing(grid.coords(k), cur.node(k), &mut forcing);
        let (u, v, l) = (cur.node(k), prev.node(k), lap.node(k));
        for (c, out) in h.node_mut(k).iter_mut().enumerate() {
            *out = -(u[c] - v[c]) / dt + l[c] + forcing[c];
        }
    }
    h
}

/// `h = −D_t u + Δu − g(x, u)` with backward differences, at every sample
/// after the first.
pub fn multiplier_limit_residual(traj: &Trajectory, r: &ReactionSpec) -> Result<MultiplierTrack> {
    if traj.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: traj.len() });
    }
    let fields = (1..traj.len())
        .map(|w| residual_field(&traj.states[w - 1], &traj.states[w], traj.times[w] - traj.times[w - 1], r))
        .collect();
    MultiplierTrack::new(traj.times[1..].to_vec(), fields, MultiplierSource::LimitResidual)
}

/// `∫_{t₀}^{t₁} ‖h_A − h_B‖_{L¹} dt` by the trapezoid rule over the samples
/// in the window, which must coincide for both tracks.
pub fn multiplier_l1_gap(a: &MultiplierTrack, b: &MultiplierTrack, window: [f64; 2]) -> Result<f64> {
    const TIME_TOL: f64 = 1e-9;
    let pick = |t: &MultiplierTrack| -> Vec<usize> {
        (0..t.len()).filter(|&k| t.times[k] >= window[0] - TIME_TOL && t.times[k] <= window[1] + TIME_TOL).collect()
    };
    let (ia, ib) = (pick(a), pick(b));
    if ia.len() != ib.len() || ia.iter().zip(&ib).any(|(&i, &j)| (a.times[i] - b.times[j]).abs() > TIME_TOL) {
        return Err(Error::MisalignedSampling(format!(
            "{} and {} samples in [{}, {}] do not coincide",
            ia.len(),
            ib.len(),
            window[0],
            window[1]
        )));
    }
    if ia.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: ia.len() });
    }
    let mut times = Vec::with_capacity(ia.len());
    let mut values = Vec::with_capacity(ia.len());
    for (&i, &j) in ia.iter().zip(&ib) {
        times.push(a.times[i]);
        values.push(a.fields[i].sub(&b.fields[j])?.norm(NormKind::L1)?);
    }
    time_integral(&times, &values)
}
