//! Checks on pairs of trajectories of one model: contraction, smoothing,
//! squeezing and the L¹ multiplier Lipschitz bound.

use rayon::prelude::*;

use crate::dynamics::{Integrator, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{time_integral, Field, NormKind, SineBasis};
use crate::lagrange::{multiplier_l1_gap, multiplier_penalized};
use crate::penalty::PenaltyModel;

use super::report::EstimateReport;
use super::{check_uniformity, spread_factor};

/// Two initial states evolved by one model up to `t_final`.
#[derive(Debug, Clone)]
pub struct PairExperiment {
    pub first: Field,
    pub second: Field,
    pub integrator: Integrator,
    pub t_final: f64,
}

impl PairExperiment {
    pub fn new(first: Field, second: Field, integrator: Integrator, t_final: f64) -> Result<Self> {
        first.check_shape(&second)?;
        if **first.grid() != **integrator.grid() || first.components() != integrator.body().dim() {
            return Err(Error::ShapeMismatch("initial data does not match the model".into()));
        }
        Ok(PairExperiment { first, second, integrator, t_final })
    }

    /// Both runs, concurrently.
    pub fn run(&self, sample_every: usize) -> Result<PairRun> {
        let (a, b) = rayon::join(
            || self.integrator.integrate(&self.first, self.t_final, sample_every),
            || self.integrator.integrate(&self.second, self.t_final, sample_every),
        );
        PairRun::new(a?, b?)
    }
}

/// The two trajectories of a completed [`PairExperiment`].
#[derive(Debug, Clone)]
pub struct PairRun {
    pub first: Trajectory,
    pub second: Trajectory,
}

impl PairRun {
    pub fn new(first: Trajectory, second: Trajectory) -> Result<Self> {
        if first.times.len() != second.times.len()
            || first.times.iter().zip(&second.times).any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::MisalignedSampling("pair trajectories are sampled at different times".into()));
        }
        first.initial().check_shape(second.initial())?;
        Ok(PairRun { first, second })
    }

    pub fn times(&self) -> &[f64] {
        &self.first.times
    }

    /// `w(t) = u₁(t) − u₂(t)` at every sample.
    pub fn difference(&self) -> Vec<Field> {
        self.first.states.iter().zip(&self.second.states).map(|(a, b)| a.sub(b).expect("pair shapes checked")).collect()
    }

    /// `‖u₁(0) − u₂(0)‖_{L²}`.
    pub fn initial_distance(&self) -> f64 {
        self.first.initial().sub(self.second.initial()).and_then(|w| w.norm(NormKind::L2)).unwrap_or(0.0)
    }
}

/// Runs many pairs concurrently; results keep the input order.
pub fn run_pairs(pairs: &[PairExperiment], sample_every: usize) -> Result<Vec<PairRun>> {
    pairs.par_iter().map(|p| p.run(sample_every)).collect()
}

/// Right-endpoint rule, matching the implicit treatment of diffusion: with
/// every step sampled it reproduces the scheme's discrete energy identity.
fn running_integrals(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; times.len()];
    for k in 1..times.len() {
        acc[k] = acc[k - 1] + (times[k] - times[k - 1]) * values[k];
    }
    acc
}

/// `‖w(t)‖² + ∫₀ᵗ‖w‖²_{H¹₀} ≤ e^{2λt}‖w(0)‖²` at every sample with
/// `t ≤ horizon`, reported on the square-root scale:
/// `left = max_t e^{−λt}(‖w(t)‖² + ∫₀ᵗ‖∇w‖²)^{1/2}`, `right = ‖w(0)‖(1 + tol)`.
pub fn check_contraction(run: &PairRun, lambda: f64, horizon: f64, tol: f64) -> Result<EstimateReport> {
    let t = run.times();
    let w = run.difference();
    let l2: Vec<f64> = w.iter().map(|f| f.norm(NormKind::L2)).collect::<Result<_>>()?;
    let grad: Vec<f64> = w.iter().map(Field::grad_sq).collect();
    let acc = running_integrals(t, &grad);
    let w0 = l2[0];
    let mut left: f64 = 0.0;
    let mut l2_only: f64 = 0.0;
    for k in 0..t.len() {
        if t[k] > horizon + 1e-12 {
            break;
        }
        let decay = (-lambda * t[k]).exp();
        left = left.max(decay * (l2[k] * l2[k] + acc[k]).sqrt());
        l2_only = l2_only.max(decay * l2[k]);
    }
    Ok(EstimateReport::new("contraction", left, w0 * (1.0 + tol), 0.0)
        .constant("lambda", lambda)
        .constant("tol", tol)
        .constant("w0_l2", w0)
        .constant("max_l2_growth_ratio", if w0 > 0.0 { l2_only / w0 } else { 0.0 }))
}

/// `T‖w(T)‖² ≤ (1 + 2λT)∫₀ᵀ‖w‖² dt`; at `T = 1` this is
/// `‖w(1)‖² ≤ (2λ + 1)∫₀¹‖w‖²`.
pub fn check_smoothing(run: &PairRun, lambda: f64, tol: f64) -> Result<EstimateReport> {
    let t = run.times();
    let w = run.difference();
    let sq: Vec<f64> = w.iter().map(|f| f.norm(NormKind::L2).map(|x| x * x)).collect::<Result<_>>()?;
    let horizon = *t.last().expect("trajectory is non-empty");
    let integral = time_integral(t, &sq)?;
    let left = horizon * sq[sq.len() - 1];
    Ok(EstimateReport::new("smoothing", left, (1.0 + 2.0 * lambda * horizon) * integral * (1.0 + tol), 0.0)
        .constant("lambda", lambda)
        .constant("tol", tol)
        .constant("horizon", horizon))
}

fn window_indices(t: &[f64], lo: f64, hi: f64) -> Vec<usize> {
    (0..t.len()).filter(|&k| t[k] >= lo - 1e-9 && t[k] <= hi + 1e-9).collect()
}

/// `L = [‖w‖_{L²(1,2;H¹₀)} + ∫₁²‖D_t w‖_{H⁻²}] / ‖w‖_{L²(0,1;L²)}` with
/// backward differences for `D_t` and the spectral `H⁻²` norm.
pub fn squeezing_constant(run: &PairRun, basis: &SineBasis) -> Result<f64> {
    let grid = run.first.grid();
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDim(grid.dim()));
    }
    let t = run.times();
    let w = run.difference();
    let early = window_indices(t, 0.0, 1.0);
    let late = window_indices(t, 1.0, 2.0);
    if early.len() < 2 || late.len() < 2 || *t.last().unwrap() < 2.0 - 1e-9 {
        return Err(Error::TooFewSamples { needed: 2, got: early.len().min(late.len()) });
    }
    let pick = |idx: &[usize], f: &dyn Fn(&Field) -> Result<f64>| -> Result<(Vec<f64>, Vec<f64>)> {
        let times = idx.iter().map(|&k| t[k]).collect();
        let values = idx.iter().map(|&k| f(&w[k])).collect::<Result<_>>()?;
        Ok((times, values))
    };
    let (te, ve) = pick(&early, &|f| f.norm(NormKind::L2).map(|x| x * x))?;
    let denominator = time_integral(&te, &ve)?.sqrt();
    if denominator == 0.0 {
        return Ok(0.0);
    }
    let (tl, vl) = pick(&late, &|f| Ok(f.grad_sq()))?;
    let h1 = time_integral(&tl, &vl)?.sqrt();
    let mut derivative = 0.0;
    for pair in late.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        let dt = t[j] - t[i];
        derivative += dt * basis.neg_norm(&w[j].sub(&w[i])?.scaled(1.0 / dt), 2)?;
    }
    Ok((h1 + derivative) / denominator)
}

/// `ρ = ∫₀¹‖h₁ − h₂‖_{L¹}dt / ‖u₁(0) − u₂(0)‖_{L²}` with `h = F'_ε(u)`;
/// zero for coinciding initial data.
pub fn assumption_l_ratio(run: &PairRun, p: &PenaltyModel) -> Result<f64> {
    let d0 = run.initial_distance();
    if d0 == 0.0 {
        return Ok(0.0);
    }
    let a = multiplier_penalized(&run.first, p)?;
    let b = multiplier_penalized(&run.second, p)?;
    Ok(multiplier_l1_gap(&a, &b, [0.0, 1.0])? / d0)
}

/// Uniform-in-`ε` boundedness of `ρ`: `per_eps` holds the ratios of all
/// pairs for each `ε`. The first report compares the spread of `max ρ`
/// across `ε` with `factor`; the second, when `bound` is given, compares
/// the overall `max ρ` with it.
pub fn check_assumption_l(per_eps: &[(f64, Vec<f64>)], factor: f64, bound: Option<f64>) -> Vec<EstimateReport> {
    let maxima: Vec<(f64, f64)> =
        per_eps.iter().map(|(eps, r)| (*eps, r.iter().cloned().fold(0.0, f64::max))).collect();
    let mut out = vec![check_uniformity("assumption_L.uniformity", &maxima, factor)];
    if let Some(bound) = bound {
        let max = maxima.iter().map(|m| m.1).fold(0.0, f64::max);
        out.push(
            EstimateReport::new("assumption_L.bound", max, bound, 0.0)
                .constant("spread", spread_factor(&maxima.iter().map(|m| m.1).collect::<Vec<_>>())),
        );
    }
    out
}
