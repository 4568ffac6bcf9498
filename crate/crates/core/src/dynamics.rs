//! Time integration of the penalized system
//! `∂ₜu = aΔu − F'_ε(u) + r(x, u)` and of the projected heat flow that
//! serves as the `ε = 0` reference.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::{laplacian_into, Field, Grid};
use crate::penalty::PenaltyModel;

/// `g(x, u, out)` writes `g(x, u)` into `out`.
pub type ReactionFn = dyn Fn([f64; 2], &[f64], &mut [f64]) + Send + Sync;

/// Reaction term. Both variants are stored in the inclusion's sign convention
/// `∂ₜu − Δu + ∂I_K(u) + g(x, u) ∋ 0`; the solver adds the forcing `−g`.
#[derive(Clone)]
pub enum ReactionSpec {
    /// `g(x, u) = −λu`.
    LinearLambda(f64),
    /// Arbitrary `g(x, u)`, not necessarily a gradient. `bound` documents
    /// `sup_{u ∈ K} |g(x, u)|` and is used only for reporting.
    General { label: String, bound: f64, g: Arc<ReactionFn> },
}

impl fmt::Debug for ReactionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReactionSpec::LinearLambda(l) => write!(f, "LinearLambda({l})"),
            ReactionSpec::General { label, bound, .. } => {
                write!(f, "General {{ label: {label:?}, bound: {bound} }}")
            }
        }
    }
}

impl ReactionSpec {
    /// `λu + ω J u` with `J` the rotation generator in the first two
    /// components: a non-gradient interaction.
    pub fn rotating(lambda: f64, omega: f64, body_bound: f64) -> Self {
        ReactionSpec::General {
            label: format!("rotating(lambda={lambda}, omega={omega})"),
            bound: (lambda.abs() + omega.abs()) * body_bound,
            g: Arc::new(move |_x, u, out| {
                for (o, v) in out.iter_mut().zip(u) {
                    *o = -lambda * v;
                }
                if u.len() >= 2 {
                    out[0] += omega * u[1];
                    out[1] -= omega * u[0];
                }
            }),
        }
    }

    /// The linear coefficient when the reaction is `λu`.
    pub fn lambda(&self) -> Option<f64> {
        match self {
            ReactionSpec::LinearLambda(l) => Some(*l),
            ReactionSpec::General { .. } => None,
        }
    }

    /// Writes the forcing `−g(x, u)` into `out`.
    #[inline]
    pub fn forcing(&self, x: [f64; 2], u: &[f64], out: &mut [f64]) {
        match self {
            ReactionSpec::LinearLambda(l) => {
                for (o, v) in out.iter_mut().zip(u) {
                    *o = l * v;
                }
            }
            ReactionSpec::General { g, .. } => {
                g(x, u, out);
                out.iter_mut().for_each(|o| *o = -*o);
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ReactionSpec::LinearLambda(l) => format!("linear(lambda={l})"),
            ReactionSpec::General { label, .. } => label.clone(),
        }
    }
}

/// Diffusion matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum DiffusionSpec {
    Scalar,
    /// `diag(a₁, …, aₙ)`; only admissible with a box constraint.
    Diagonal(Vec<f64>),
}

impl DiffusionSpec {
    fn coefficient(&self, c: usize) -> f64 {
        match self {
            DiffusionSpec::Scalar => 1.0,
            DiffusionSpec::Diagonal(a) => a[c],
        }
    }

    pub fn max_coefficient(&self) -> f64 {
        match self {
            DiffusionSpec::Scalar => 1.0,
            DiffusionSpec::Diagonal(a) => a.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            DiffusionSpec::Scalar => "scalar".into(),
            DiffusionSpec::Diagonal(a) => {
                format!("diagonal({})", a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    ExplicitEuler {
        dt: f64,
    },
    /// Implicit diffusion, explicit penalty and reaction.
    Imex {
        dt: f64,
    },
    /// Implicit diffusion, explicit reaction, then pointwise projection on `K`.
    Projection {
        dt: f64,
    },
}

impl Scheme {
    pub fn dt(&self) -> f64 {
        match *self {
            Scheme::ExplicitEuler { dt } | Scheme::Imex { dt } | Scheme::Projection { dt } => dt,
        }
    }

    pub fn with_dt(&self, dt: f64) -> Scheme {
        match self {
            Scheme::ExplicitEuler { .. } => Scheme::ExplicitEuler { dt },
            Scheme::Imex { .. } => Scheme::Imex { dt },
            Scheme::Projection { .. } => Scheme::Projection { dt },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ExplicitEuler { .. } => "explicit",
            Scheme::Imex { .. } => "imex",
            Scheme::Projection { .. } => "projection",
        }
    }
}

/// Solver for `(I − c Δ_h) x = b` on one component.
#[derive(Debug, Clone)]
enum HeatSolver {
    Identity,
    /// Thomas factors of the constant tridiagonal matrix.
    Tridiagonal {
        off: f64,
        modified_upper: Vec<f64>,
        inverse_pivot: Vec<f64>,
    },
    /// Conjugate gradients, stopped at relative residual `1e-10`.
    ConjugateGradient {
        c: f64,
    },
}

const CG_TOLERANCE: f64 = 1e-10;

impl HeatSolver {
    fn new(grid: &Grid, c: f64) -> Self {
        if c == 0.0 {
            return HeatSolver::Identity;
        }
        if grid.dim() == 1 {
            let m = grid.interior()[0];
            let r = c / grid.spacing().powi(2);
            let diag = 1.0 + 2.0 * r;
            let off = -r;
            let mut modified_upper = vec![0.0; m];
            let mut inverse_pivot = vec![0.0; m];
            let mut prev = 0.0;
            for i in 0..m {
                let pivot = diag - off * prev;
                inverse_pivot[i] = 1.0 / pivot;
                prev = off / pivot;
                modified_upper[i] = prev;
            }
            HeatSolver::Tridiagonal { off, modified_upper, inverse_pivot }
        } else {
            HeatSolver::ConjugateGradient { c }
        }
    }

    /// Solves in place on the strided component `comp` of a node-major array.
    fn solve(&self, grid: &Grid, n: usize, comp: usize, data: &mut [f64]) {
        match self {
            HeatSolver::Identity => {}
            HeatSolver::Tridiagonal { off, modified_upper, inverse_pivot } => {
                let m = modified_upper.len();
                let mut prev = 0.0;
                for i in 0..m {
                    let v = (data[i * n + comp] - off * prev) * inverse_pivot[i];
                    data[i * n + comp] = v;
                    prev = v;
                }
                for i in (0..m.saturating_sub(1)).rev() {
                    data[i * n + comp] -= modified_upper[i] * data[(i + 1) * n + comp];
                }
            }
            HeatSolver::ConjugateGradient { c } => {
                let len = grid.interior_len();
                let b: Vec<f64> = (0..len).map(|k| data[k * n + comp]).collect();
                let x = conjugate_gradient(grid, *c, &b);
                for k in 0..len {
                    data[k * n + comp] = x[k];
                }
            }
        }
    }
}

fn conjugate_gradient(grid: &Grid, c: f64, b: &[f64]) -> Vec<f64> {
    let apply = |x: &[f64], out: &mut [f64]| {
        laplacian_into(grid, 1, x, out);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = xi - c * *o;
        }
    };
    let len = b.len();
    let mut x = b.to_vec();
    let mut ax = vec![0.0; len];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, a)| bi - a).collect();
    let mut p = r.clone();
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return vec![0.0; len];
    }
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let mut ap = vec![0.0; len];
    for _ in 0..10 * len + 100 {
        if rr.sqrt() <= CG_TOLERANCE * b_norm {
            break;
        }
        apply(&p, &mut ap);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..len {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..len {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}

/// A configured time stepper for one model.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: Arc<Grid>,
    body: ConvexBody,
    penalty: Option<PenaltyModel>,
    reaction: ReactionSpec,
    diffusion: DiffusionSpec,
    scheme: Scheme,
    solvers: Vec<HeatSolver>,
}

impl Integrator {
    /// Validates the model and the step-size caps.
    ///
    /// Caps: explicit Euler needs `dt ≤ h²/(2·dim·a_max)` and the penalty
    /// cap; IMEX needs the penalty cap `min(ε/4, 2/Lip F'_ε)`; projection
    /// has none. A violated cap is refused, never run.
    pub fn new(
        grid: Arc<Grid>,
        body: ConvexBody,
        penalty: Option<PenaltyModel>,
        reaction: ReactionSpec,
        diffusion: DiffusionSpec,
        scheme: Scheme,
    ) -> Result<Self> {
        let n = body.dim();
        if let Some(p) = &penalty {
            if p.dim() != n {
                return Err(Error::ModelMismatch(format!("penalty acts on {} components, body on {n}", p.dim())));
            }
        }
        if let DiffusionSpec::Diagonal(a) = &diffusion {
            if !matches!(body, ConvexBody::Box { .. }) {
                return Err(Error::config("diffusion", "diagonal diffusion is only supported with a box constraint"));
            }
            if a.len() != n || a.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::config("diffusion.coefficients", format!("need {n} positive coefficients")));
            }
        }
        let dt = scheme.dt();
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::UnstableStep { dt, cap: f64::INFINITY, reason: "dt must be positive" });
        }
        match scheme {
            Scheme::Projection { .. } => {
                if penalty.is_some() {
                    return Err(Error::ModelMismatch("the projection scheme takes no penalty".into()));
                }
            }
            Scheme::ExplicitEuler { .. } | Scheme::Imex { .. } => {
                let Some(p) = &penalty else {
                    return Err(Error::ModelMismatch("penalized schemes need a penalty model".into()));
                };
                let cap = p.explicit_step_cap();
                if dt > cap * (1.0 + 1e-12) {
                    return Err(Error::UnstableStep { dt, cap, reason: "explicit penalty term" });
                }
                if let Scheme::ExplicitEuler { .. } = scheme {
                    let h = grid.spacing();
                    let cap = h * h / (2.0 * grid.dim() as f64 * diffusion.max_coefficient());
                    if dt > cap * (1.0 + 1e-12) {
                        return Err(Error::UnstableStep { dt, cap, reason: "explicit diffusion" });
                    }
                }
            }
        }
        let solvers = Self::build_solvers(&grid, &diffusion, scheme, n);
        Ok(Integrator { grid, body, penalty, reaction, diffusion, scheme, solvers })
    }

    /// Penalized model with scalar diffusion.
    pub fn penalized(grid: Arc<Grid>, penalty: PenaltyModel, reaction: ReactionSpec, scheme: Scheme) -> Result<Self> {
        let body = penalty.body();
        Self::new(grid, body, Some(penalty), reaction, DiffusionSpec::Scalar, scheme)
    }

    /// The projected (`ε = 0`) model with scalar diffusion.
    pub fn projected(grid: Arc<Grid>, body: ConvexBody, reaction: ReactionSpec, dt: f64) -> Result<Self> {
        Self::new(grid, body, None, reaction, DiffusionSpec::Scalar, Scheme::Projection { dt })
    }

    fn build_solvers(grid: &Grid, diffusion: &DiffusionSpec, scheme: Scheme, n: usize) -> Vec<HeatSolver> {
        match scheme {
            Scheme::ExplicitEuler { .. } => vec![HeatSolver::Identity; n],
            Scheme::Imex { dt } | Scheme::Projection { dt } => {
                (0..n).map(|c| HeatSolver::new(grid, dt * diffusion.coefficient(c))).collect()
            }
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn penalty(&self) -> Option<&PenaltyModel> {
        self.penalty.as_ref()
    }

    pub fn reaction(&self) -> &ReactionSpec {
        &self.reaction
    }

    pub fn diffusion(&self) -> &DiffusionSpec {
        &self.diffusion
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.scheme.dt()
    }

    /// Same model with another step size (caps re-validated).
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.body.clone(),
            self.penalty.clone(),
            self.reaction.clone(),
            self.diffusion.clone(),
            self.scheme.with_dt(dt),
        )
    }

    fn check_state(&self, state: &Field) -> Result<()> {
        if state.components() != self.body.dim() || **state.grid() != *self.grid {
            return Err(Error::ShapeMismatch("state does not match the integrator's grid and body".into()));
        }
        Ok(())
    }

    /// `u + dt(r(u) − F'(u))`, plus `dt·aΔu` for explicit Euler.
    fn explicit_part(&self, state: &Field, dt: f64) -> Vec<f64> {
        let n = state.components();
        let u = state.values();
        let mut rhs = u.to_vec();
        let mut forcing = vec![0.0; n];
        let mut grad = vec![0.0; n];
        for k in 0..state.len_nodes() {
            let node = &u[k * n..(k + 1) * n];
            self.reaction.forcing(self.grid.coords(k), node, &mut forcing);
            if let Some(p) = &self.penalty {
                p.grad_into(node, &mut grad);
            }
            for c in 0..n {
                rhs[k * n + c] += dt * (forcing[c] - grad[c]);
            }
        }
        if let Scheme::ExplicitEuler { .. } = self.scheme {
            let mut lap = vec![0.0; u.len()];
            laplacian_into(&self.grid, n, u, &mut lap);
            for k in 0..state.len_nodes() {
                for c in 0..n {
                    rhs[k * n + c] += dt * self.diffusion.coefficient(c) * lap[k * n + c];
                }
            }
        }
        rhs
    }

    fn implicit_solve(&self, n: usize, data: &mut [f64]) {
        for (c, solver) in self.solvers.iter().enumerate() {
            solver.solve(&self.grid, n, c, data);
        }
    }

    /// The unconstrained part of a projection step: implicit diffusion with
    /// explicit reaction.
    pub fn unconstrained_step(&self, state: &Field) -> Result<Field> {
        self.check_state(state)?;
        let n = state.components();
        let mut data = self.explicit_part(state, self.dt());
        self.implicit_solve(n, &mut data);
        Field::from_values(self.grid.clone(), n, data)
            .map_err(|e| Error::RunFailed(format!("step produced invalid state: {e}")))
    }

    /// One time step.
    pub fn step(&self, state: &Field) -> Result<Field> {
        Ok(self.step_with_multiplier(state)?.0)
    }

    /// One step, returning the projection multiplier for the projection
    /// scheme.
    pub fn step_with_multiplier(&self, state: &Field) -> Result<(Field, Option<Field>)> {
        let pre = self.unconstrained_step(state)?;
        match self.scheme {
            Scheme::Projection { dt } => {
                let post = project_field(&self.body, &pre);
                let h = projection_multiplier(&pre, &post, dt)?;
                Ok((post, Some(h)))
            }
            _ => Ok((pre, None)),
        }
    }

    /// Number of steps to `t_final` and the integrator with the step
    /// shortened uniformly so that they land on `t_final` exactly.
    fn plan(&self, t_final: f64) -> Result<(usize, Integrator)> {
        if !(t_final >= 0.0) {
            return Err(Error::RunFailed(format!("t_final must be nonnegative, got {t_final}")));
        }
        let steps = if t_final == 0.0 { 0 } else { (t_final / self.dt() - 1e-9).ceil().max(1.0) as usize };
        let runner = if steps > 0 && (t_final / steps as f64 - self.dt()).abs() > 1e-15 {
            self.with_dt(t_final / steps as f64)?
        } else {
            self.clone()
        };
        Ok((steps, runner))
    }

    fn drive(
        &self,
        u0: &Field,
        t_final: f64,
        steps: usize,
        mut observe: impl FnMut(usize, f64, &Field, Option<&Field>) -> Result<()>,
    ) -> Result<()> {
        let zero =
            matches!(self.scheme, Scheme::Projection { .. }).then(|| Field::zeros(self.grid.clone(), u0.components()));
        observe(0, 0.0, u0, zero.as_ref())?;
        let mut state = u0.clone();
        for k in 1..=steps {
            let (next, h) = self.step_with_multiplier(&state)?;
            if !next.is_finite() {
                return Err(Error::RunFailed(format!("non-finite state at step {k}")));
            }
            state = next;
            let t = if k == steps { t_final } else { k as f64 * self.dt() };
            observe(k, t, &state, h.as_ref())?;
        }
        Ok(())
    }

    /// Steps to `t_final` and hands every state to `observe(k, t, u, h)`,
    /// starting with `k = 0` at `t = 0` (`h` is the projection multiplier,
    /// zero at `t = 0`), without storing the run. The step is shortened as
    /// in [`Integrator::integrate`]. Returns the step count and the step
    /// actually used.
    pub fn integrate_with(
        &self,
        u0: &Field,
        t_final: f64,
        observe: impl FnMut(usize, f64, &Field, Option<&Field>) -> Result<()>,
    ) -> Result<(usize, f64)> {
        self.check_state(u0)?;
        let (steps, runner) = self.plan(t_final)?;
        runner.drive(u0, t_final, steps, observe)?;
        Ok((steps, runner.dt()))
    }

    /// Integrates to `t_final`, sampling every `sample_every` steps and at
    /// the final time. The step is shortened uniformly so that an integer
    /// number of steps lands on `t_final`.
    pub fn integrate(&self, u0: &Field, t_final: f64, sample_every: usize) -> Result<Trajectory> {
        self.check_state(u0)?;
        let every = sample_every.max(1);
        let start = Instant::now();
        let (steps, runner) = self.plan(t_final)?;
        let mut traj = Trajectory::new(runner.metadata(), runner.dt());
        runner.drive(u0, t_final, steps, |k, t, u, h| {
            if k % every == 0 || k == steps {
                traj.push(t, u.clone(), h.cloned());
            }
            Ok(())
        })?;
        traj.steps = steps;
        traj.wall_clock = start.elapsed().as_secs_f64();
        Ok(traj)
    }

    /// Key-value description of the model, stored in trajectory manifests.
    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("scheme".into(), self.scheme.name().into());
        m.insert("dt".into(), format!("{:e}", self.dt()));
        m.insert("body".into(), describe_body(&self.body));
        m.insert("components".into(), self.body.dim().to_string());
        m.insert("reaction".into(), self.reaction.describe());
        if let Some(l) = self.reaction.lambda() {
            m.insert("lambda".into(), format!("{l:e}"));
        }
        m.insert("diffusion".into(), self.diffusion.describe());
        if let Some(p) = &self.penalty {
            m.insert("epsilon".into(), format!("{:e}", p.eps()));
            m.insert("penalty".into(), describe_penalty(p));
        }
        m.insert(
            "grid".into(),
            format!(
                "dim={};lengths={};nodes={}",
                self.grid.dim(),
                join(self.grid.lengths()),
                self.grid.nodes().iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
            ),
        );
        m
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

pub(crate) fn describe_body(body: &ConvexBody) -> String {
    match body {
        ConvexBody::Simplex { n } => format!("simplex(n={n})"),
        ConvexBody::Ball { center, radius } => format!("ball(center={};radius={radius:e})", join(center)),
        ConvexBody::Box { n, side } => format!("box(n={n};side={side:e})"),
    }
}

fn describe_penalty(p: &PenaltyModel) -> String {
    use crate::penalty::PenaltyKind;
    match p.kind() {
        PenaltyKind::SmoothConvex(s) => format!("smooth(delta={:e})", s.delta()),
        PenaltyKind::PlainDistance(_) => "distance".into(),
        PenaltyKind::Simplex { .. } => "simplex".into(),
        PenaltyKind::Box { .. } => "box".into(),
    }
}

/// Pointwise projection of a field onto `K`.
pub fn project_field(body: &ConvexBody, f: &Field) -> Field {
    let n = f.components();
    let mut out = f.clone();
    for k in 0..f.len_nodes() {
        body.project_into(f.node(k), &mut out.values_mut()[k * n..(k + 1) * n]);
    }
    out
}

/// `h = (pre − post)/dt` for a projection step pair; zero wherever the
/// projection was inactive.
pub fn projection_multiplier(pre: &Field, post: &Field, dt: f64) -> Result<Field> {
    pre.check_shape(post)?;
    Ok(pre.sub(post)?.scaled(1.0 / dt))
}

/// `steps` implicit heat steps of size `dt` without constraint or reaction.
///
/// Starting from `K`-valued data the result stays in `K`: each step is a
/// sub-stochastic averaging with the zero boundary values and `0 ∈ K`.
pub fn heat_smooth(f: &Field, dt: f64, steps: usize) -> Field {
    let grid = f.grid().clone();
    let n = f.components();
    let solver = HeatSolver::new(&grid, dt);
    let mut data = f.values().to_vec();
    for _ in 0..steps {
        for c in 0..n {
            solver.solve(&grid, n, c, &mut data);
        }
    }
    Field::from_values(grid, n, data).expect("heat smoothing preserves shape")
}

/// Time-stamped samples of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    /// Projection multipliers of the step that produced each sample.
    pub multipliers: Option<Vec<Field>>,
    pub metadata: BTreeMap<String, String>,
    pub dt: f64,
    pub steps: usize,
    pub wall_clock: f64,
}

impl Trajectory {
    pub fn new(metadata: BTreeMap<String, String>, dt: f64) -> Self {
        Trajectory { times: Vec::new(), states: Vec::new(), multipliers: None, metadata, dt, steps: 0, wall_clock: 0.0 }
    }

    pub fn push(&mut self, t: f64, state: Field, multiplier: Option<Field>) {
        if let Some(last) = self.times.last() {
            assert!(t > *last, "sample times must increase");
        }
        self.times.push(t);
        self.states.push(state);
        if let Some(h) = multiplier {
            self.multipliers.get_or_insert_with(Vec::new).push(h);
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &Field {
        &self.states[0]
    }

    pub fn last(&self) -> &Field {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.states[0].grid()
    }

    /// State at the sample closest to `t`.
    pub fn at(&self, t: f64) -> &Field {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.states[k]
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(|v| v.parse().ok())
    }
}
