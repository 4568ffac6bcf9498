//! Experiment configuration: `key = value` lines with dotted section keys.
//! Blank lines and `#` comments are ignored; every key is optional and
//! falls back to the default shown.
//!
//! ```text
//! domain.dim = 1                 # 1 or 2
//! domain.lengths = 4             # one length per axis, comma separated
//! domain.nodes = 256             # nodes per axis including the boundary
//! convex.type = simplex          # simplex | ball | box
//! convex.center = 0,0            # ball only, one entry per component
//! convex.radius = 1              # ball only
//! convex.delta = 0.2             # ball only: offset of the smooth distance
//! convex.side = 1                # box only
//! components = 2                 # n
//! lambda = 0
//! reaction.type = linear         # linear | rotating
//! reaction.omega = 1             # rotating only
//! diffusion.type = scalar        # scalar | diagonal (box only)
//! diffusion.coefficients = 1,2   # diagonal only, one per component
//! epsilon = 0.1                  # or epsilon_list = 0.1,0.01,0.001
//! scheme.type = imex             # explicit | imex | projection
//! scheme.dt_rule = cap           # cap | eps/K, or give scheme.dt instead
//! t_final = 1
//! sample_every = 1
//! seed = 0
//! output_dir = out
//! checks = contraction,squeezing # verify: criteria to run, empty = all
//! pairs = 20                     # compare / verify: random pairs
//! initial.smooth = false         # smooth random data by 5 heat steps
//! ensemble.size = 200            # dimension / verify
//! ensemble.horizon = 10          # length of each ensemble run
//! ensemble.transient = 5         # first sampled time
//! ensemble.interval = 0.5        # time between samples
//! ```
//!
//! `cap` is the largest stable step of the scheme at the smallest ε; a
//! fixed `scheme.dt` above that cap is rejected, as is a step rule for the
//! projection scheme, which has no cap.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::convex::ConvexBody;
use crate::dynamics::{DiffusionSpec, Integrator, ReactionSpec, Scheme};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::parse_key_values;
use crate::penalty::PenaltyModel;
use crate::suite::Criterion;

#[derive(Debug, Clone, PartialEq)]
pub enum BodyConfig {
    Simplex,
    Ball { center: Vec<f64>, radius: f64, delta: f64 },
    Box { side: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactionConfig {
    Linear,
    /// `λu` plus a rotation of angular speed `omega` in the first two
    /// components: not a gradient.
    Rotating {
        omega: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Explicit,
    Imex,
    Projection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// The largest stable step.
    Cap,
    /// `dt = ε/K`.
    EpsFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Epsilon {
    Single(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub size: usize,
    pub horizon: f64,
    pub transient: f64,
    pub interval: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub lengths: Vec<f64>,
    pub nodes: Vec<usize>,
    pub body: BodyConfig,
    pub components: usize,
    pub lambda: f64,
    pub reaction: ReactionConfig,
    pub diffusion: DiffusionSpec,
    pub epsilon: Epsilon,
    pub scheme: SchemeKind,
    pub step: StepRule,
    pub t_final: f64,
    pub sample_every: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub checks: Vec<Criterion>,
    pub pairs: usize,
    pub smooth_initial: bool,
    pub ensemble: EnsembleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dim: 1,
            lengths: vec![4.0],
            nodes: vec![256],
            body: BodyConfig::Simplex,
            components: 2,
            lambda: 0.0,
            reaction: ReactionConfig::Linear,
            diffusion: DiffusionSpec::Scalar,
            epsilon: Epsilon::Single(0.1),
            scheme: SchemeKind::Imex,
            step: StepRule::Cap,
            t_final: 1.0,
            sample_every: 1,
            seed: 0,
            output_dir: PathBuf::from("out"),
            checks: Vec::new(),
            pairs: 20,
            smooth_initial: false,
            ensemble: EnsembleConfig { size: 200, horizon: 10.0, transient: 5.0, interval: 0.5 },
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::config(key, message)
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, format!("cannot parse `{value}`")))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| num(key, v.trim())).collect()
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parses and validates.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let entries = parse_key_values(text, path)?;
        let get = |key: &str| entries.iter().find(|e| e.1 == key).map(|e| e.2.as_str());
        let mut c = ExperimentConfig::default();
        let mut ball = (vec![0.0; 2], 1.0, 0.2);
        let mut side = 1.0;
        let mut omega = 1.0;
        let mut coefficients: Option<Vec<f64>> = None;
        let mut dt: Option<f64> = None;
        let mut dt_rule: Option<StepRule> = None;
        let mut epsilon: Option<f64> = None;
        let mut epsilon_list: Option<Vec<f64>> = None;
        for (_, key, value) in &entries {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "domain.dim" => c.dim = num(k, v)?,
                "domain.lengths" => c.lengths = list(k, v)?,
                "domain.nodes" => c.nodes = list(k, v)?,
                "convex.type" => {}
                "convex.center" => ball.0 = list(k, v)?,
                "convex.radius" => ball.1 = num(k, v)?,
                "convex.delta" => ball.2 = num(k, v)?,
                "convex.side" => side = num(k, v)?,
                "components" => c.components = num(k, v)?,
                "lambda" => c.lambda = num(k, v)?,
                "reaction.type" => {}
                "reaction.omega" => omega = num(k, v)?,
                "diffusion.type" => {}
                "diffusion.coefficients" => coefficients = Some(list(k, v)?),
                "epsilon" => epsilon = Some(num(k, v)?),
                "epsilon_list" => epsilon_list = Some(list(k, v)?),
                "scheme.type" => {}
                "scheme.dt" => dt = Some(num(k, v)?),
                "scheme.dt_rule" => dt_rule = Some(parse_rule(v)?),
                "t_final" => c.t_final = num(k, v)?,
                "sample_every" => c.sample_every = num(k, v)?,
                "seed" => c.seed = num(k, v)?,
                "output_dir" => c.output_dir = PathBuf::from(v),
                "checks" => {
                    c.checks = if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split(',').map(|s| s.trim().parse().map_err(|e: String| bad(k, e))).collect::<Result<_>>()?
                    }
                }
                "pairs" => c.pairs = num(k, v)?,
                "initial.smooth" => c.smooth_initial = num(k, v)?,
                "ensemble.size" => c.ensemble.size = num(k, v)?,
                "ensemble.horizon" => c.ensemble.horizon = num(k, v)?,
                "ensemble.transient" => c.ensemble.transient = num(k, v)?,
                "ensemble.interval" => c.ensemble.interval = num(k, v)?,
                _ => return Err(bad(k, "unknown key")),
            }
        }
        c.body = match get("convex.type").unwrap_or("simplex") {
            "simplex" => BodyConfig::Simplex,
            "ball" => BodyConfig::Ball { center: ball.0, radius: ball.1, delta: ball.2 },
            "box" => BodyConfig::Box { side },
            other => return Err(bad("convex.type", format!("unknown body `{other}`"))),
        };
        c.reaction = match get("reaction.type").unwrap_or("linear") {
            "linear" => ReactionConfig::Linear,
            "rotating" => ReactionConfig::Rotating { omega },
            other => return Err(bad("reaction.type", format!("unknown reaction `{other}`"))),
        };
        c.diffusion = match get("diffusion.type").unwrap_or("scalar") {
            "scalar" if coefficients.is_some() => {
                return Err(bad("diffusion.coefficients", "only used with diffusion.type = diagonal"))
            }
            "scalar" => DiffusionSpec::Scalar,
            "diagonal" => DiffusionSpec::Diagonal(
                coefficients.ok_or_else(|| bad("diffusion.coefficients", "required for diagonal diffusion"))?,
            ),
            other => return Err(bad("diffusion.type", format!("unknown diffusion `{other}`"))),
        };
        c.epsilon = match (epsilon, epsilon_list) {
            (Some(_), Some(_)) => return Err(bad("epsilon_list", "give either epsilon or epsilon_list")),
            (Some(e), None) => Epsilon::Single(e),
            (None, Some(l)) => Epsilon::List(l),
            (None, None) => Epsilon::Single(0.1),
        };
        c.scheme = match get("scheme.type").unwrap_or("imex") {
            "explicit" => SchemeKind::Explicit,
            "imex" => SchemeKind::Imex,
            "projection" => SchemeKind::Projection,
            other => return Err(bad("scheme.type", format!("unknown scheme `{other}`"))),
        };
        c.step = match (dt, dt_rule) {
            (Some(_), Some(_)) => return Err(bad("scheme.dt", "give either scheme.dt or scheme.dt_rule")),
            (Some(dt), None) => StepRule::Fixed(dt),
            (None, Some(rule)) => rule,
            (None, None) => StepRule::Cap,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    /// Canonical text form: every key, in the documented order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("writing to a String");
        put("domain.dim", self.dim.to_string());
        put("domain.lengths", join(&self.lengths));
        put("domain.nodes", join(&self.nodes));
        match &self.body {
            BodyConfig::Simplex => put("convex.type", "simplex".into()),
            BodyConfig::Ball { center, radius, delta } => {
                put("convex.type", "ball".into());
                put("convex.center", join(center));
                put("convex.radius", radius.to_string());
                put("convex.delta", delta.to_string());
            }
            BodyConfig::Box { side } => {
                put("convex.type", "box".into());
                put("convex.side", side.to_string());
            }
        }
        put("components", self.components.to_string());
        put("lambda", self.lambda.to_string());
        match self.reaction {
            ReactionConfig::Linear => put("reaction.type", "linear".into()),
            ReactionConfig::Rotating { omega } => {
                put("reaction.type", "rotating".into());
                put("reaction.omega", omega.to_string());
            }
        }
        match &self.diffusion {
            DiffusionSpec::Scalar => put("diffusion.type", "scalar".into()),
            DiffusionSpec::Diagonal(a) => {
                put("diffusion.type", "diagonal".into());
                put("diffusion.coefficients", join(a));
            }
        }
        match &self.epsilon {
            Epsilon::Single(e) => put("epsilon", e.to_string()),
            Epsilon::List(l) => put("epsilon_list", join(l)),
        }
        put(
            "scheme.type",
            match self.scheme {
                SchemeKind::Explicit => "explicit",
                SchemeKind::Imex => "imex",
                SchemeKind::Projection => "projection",
            }
            .into(),
        );
        match self.step {
            StepRule::Fixed(dt) => put("scheme.dt", dt.to_string()),
            StepRule::Cap => put("scheme.dt_rule", "cap".into()),
            StepRule::EpsFraction(k) => put("scheme.dt_rule", format!("eps/{k}")),
        }
        put("t_final", self.t_final.to_string());
        put("sample_every", self.sample_every.to_string());
        put("seed", self.seed.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("checks", join(&self.checks));
        put("pairs", self.pairs.to_string());
        put("initial.smooth", self.smooth_initial.to_string());
        put("ensemble.size", self.ensemble.size.to_string());
        put("ensemble.horizon", self.ensemble.horizon.to_string());
        put("ensemble.transient", self.ensemble.transient.to_string());
        put("ensemble.interval", self.ensemble.interval.to_string());
        out
    }

    /// Cross-field rules: shapes agree, diagonal diffusion only with a box,
    /// spectral checks only in 1D, the step within the scheme's cap.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.components == 0 {
            return Err(bad("components", "need at least one component"));
        }
        if let BodyConfig::Ball { center, .. } = &self.body {
            if center.len() != self.components {
                return Err(bad("convex.center", format!("needs {} entries", self.components)));
            }
        }
        let body = self.body().map_err(|e| bad("convex", e.to_string()))?;
        if let DiffusionSpec::Diagonal(a) = &self.diffusion {
            if !matches!(body, ConvexBody::Box { .. }) {
                return Err(bad("diffusion", "diagonal diffusion requires convex.type = box"));
            }
            if a.len() != self.components || a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(bad("diffusion.coefficients", format!("need {} positive values", self.components)));
            }
        }
        if !self.lambda.is_finite() {
            return Err(bad("lambda", "must be finite"));
        }
        if let ReactionConfig::Rotating { omega } = self.reaction {
            if self.components < 2 || !omega.is_finite() {
                return Err(bad("reaction.omega", "rotation needs a finite speed and two components"));
            }
        }
        let eps = self.epsilons();
        let key = if matches!(self.epsilon, Epsilon::List(_)) { "epsilon_list" } else { "epsilon" };
        if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(bad(key, "values must be positive"));
        }
        match (self.scheme, self.step) {
            (SchemeKind::Projection, StepRule::Cap | StepRule::EpsFraction(_)) => {
                return Err(bad("scheme.dt_rule", "the projection scheme has no step cap; give scheme.dt"));
            }
            (_, StepRule::Fixed(dt)) if !(dt > 0.0) || !dt.is_finite() => {
                return Err(bad("scheme.dt", "must be positive"));
            }
            (_, StepRule::EpsFraction(k)) if !(k > 0.0) || !k.is_finite() => {
                return Err(bad("scheme.dt_rule", "eps/K needs a positive K"));
            }
            _ => {}
        }
        for &e in &eps {
            self.integrator(e).map_err(|err| match err {
                Error::UnstableStep { dt, cap, reason } => {
                    bad("scheme.dt", format!("dt = {dt} exceeds the {reason} cap {cap} at epsilon = {e}"))
                }
                Error::Config { .. } => err,
                other => bad("scheme", other.to_string()),
            })?;
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(bad("t_final", "must be nonnegative"));
        }
        if self.sample_every == 0 {
            return Err(bad("sample_every", "must be at least 1"));
        }
        if self.pairs == 0 {
            return Err(bad("pairs", "must be at least 1"));
        }
        if self.dim != 1 {
            if let Some(c) = self.checks.iter().find(|c| c.needs_1d()) {
                return Err(bad("checks", format!("`{c}` needs domain.dim = 1")));
            }
        }
        let e = &self.ensemble;
        if e.size == 0 {
            return Err(bad("ensemble.size", "must be at least 1"));
        }
        if !(e.interval > 0.0) || !e.interval.is_finite() {
            return Err(bad("ensemble.interval", "must be positive"));
        }
        if !(e.horizon > 0.0) || !e.horizon.is_finite() {
            return Err(bad("ensemble.horizon", "must be positive"));
        }
        if !(e.transient >= 0.0) || e.transient > e.horizon {
            return Err(bad("ensemble.transient", "must lie in [0, ensemble.horizon]"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(self.dim, &self.lengths, &self.nodes)?))
    }

    pub fn body(&self) -> Result<ConvexBody> {
        match &self.body {
            BodyConfig::Simplex => ConvexBody::simplex(self.components),
            BodyConfig::Ball { center, radius, .. } => ConvexBody::ball(center.clone(), *radius),
            BodyConfig::Box { side } => ConvexBody::cube(self.components, *side),
        }
    }

    fn delta(&self) -> f64 {
        match self.body {
            BodyConfig::Ball { delta, .. } => delta,
            _ => 0.0,
        }
    }

    pub fn penalty(&self, eps: f64) -> Result<PenaltyModel> {
        PenaltyModel::for_body(&self.body()?, eps, self.delta())
    }

    pub fn reaction(&self) -> Result<ReactionSpec> {
        Ok(match self.reaction {
            ReactionConfig::Linear => ReactionSpec::LinearLambda(self.lambda),
            ReactionConfig::Rotating { omega } => {
                let body = self.body()?;
                let bound = body
                    .test_points(32)
                    .iter()
                    .map(|z| z.iter().map(|x| x * x).sum::<f64>().sqrt())
                    .fold(0.0, f64::max);
                ReactionSpec::rotating(self.lambda, omega, bound)
            }
        })
    }

    /// The ε values of the run: the single value or the list.
    pub fn epsilons(&self) -> Vec<f64> {
        match &self.epsilon {
            Epsilon::Single(e) => vec![*e],
            Epsilon::List(l) => l.clone(),
        }
    }

    /// Step for the penalty at `eps`. `cap` uses the smallest ε of the run
    /// so that every run of a sweep shares one step.
    pub fn dt(&self, eps: f64) -> Result<f64> {
        let smallest = self.epsilons().into_iter().fold(eps, f64::min);
        Ok(match self.step {
            StepRule::Fixed(dt) => dt,
            StepRule::EpsFraction(k) => eps / k,
            StepRule::Cap => {
                let mut cap = self.penalty(smallest)?.explicit_step_cap();
                if self.scheme == SchemeKind::Explicit {
                    let grid = self.grid()?;
                    let a = self.diffusion.max_coefficient();
                    cap = cap.min(grid.spacing().powi(2) / (2.0 * grid.dim() as f64 * a));
                }
                cap
            }
        })
    }

    /// The configured model at `eps` (ignored by the projection scheme).
    pub fn integrator(&self, eps: f64) -> Result<Integrator> {
        let dt = self.dt(eps)?;
        let (penalty, scheme) = match self.scheme {
            SchemeKind::Explicit => (Some(self.penalty(eps)?), Scheme::ExplicitEuler { dt }),
            SchemeKind::Imex => (Some(self.penalty(eps)?), Scheme::Imex { dt }),
            SchemeKind::Projection => (None, Scheme::Projection { dt }),
        };
        Integrator::new(self.grid()?, self.body()?, penalty, self.reaction()?, self.diffusion.clone(), scheme)
    }
}

fn parse_rule(v: &str) -> Result<StepRule> {
    if v == "cap" {
        return Ok(StepRule::Cap);
    }
    v.strip_prefix("eps/")
        .and_then(|k| k.parse().ok())
        .map(StepRule::EpsFraction)
        .ok_or_else(|| bad("scheme.dt_rule", format!("expected `cap` or `eps/K`, got `{v}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("test.cfg"))
    }

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn minimal_config_builds_its_model() {
        let c = parse("domain.nodes = 64\nepsilon = 0.1\nlambda = 0\nt_final = 0.1\n").unwrap();
        assert_eq!(c.nodes, vec![64]);
        let integ = c.integrator(0.1).unwrap();
        assert_eq!(integ.dt(), 0.025);
    }

    #[test]
    fn diagonal_diffusion_needs_a_box() {
        let e = parse("diffusion.type = diagonal\ndiffusion.coefficients = 1,2\n").unwrap_err();
        assert_eq!(key_of(e), "diffusion");
        assert!(parse("convex.type = box\ndiffusion.type = diagonal\ndiffusion.coefficients = 1,2\n").is_ok());
    }

    #[test]
    fn errors_name_the_offending_key() {
        assert_eq!(key_of(parse("lamda = 1").unwrap_err()), "lamda");
        assert_eq!(key_of(parse("epsilon = -1").unwrap_err()), "epsilon");
        assert_eq!(key_of(parse("scheme.dt = 1").unwrap_err()), "scheme.dt");
        assert_eq!(key_of(parse("scheme.type = projection").unwrap_err()), "scheme.dt_rule");
        assert_eq!(
            key_of(parse("domain.dim = 2\ndomain.lengths = 1,1\ndomain.nodes = 9,9\nchecks = squeezing").unwrap_err()),
            "checks"
        );
        assert_eq!(key_of(parse("checks = everything").unwrap_err()), "checks");
        assert_eq!(key_of(parse("convex.type = ball\nconvex.center = 0").unwrap_err()), "convex.center");
        assert_eq!(key_of(parse("epsilon = 0.1\nepsilon_list = 0.1").unwrap_err()), "epsilon_list");
        assert!(matches!(parse("domain.dim 1"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn explicit_cap_includes_diffusion() {
        let c = parse("scheme.type = explicit\ndomain.nodes = 65\nepsilon = 0.1").unwrap();
        let h = c.grid().unwrap().spacing();
        assert_eq!(c.dt(0.1).unwrap(), h * h / 2.0);
    }

    #[test]
    fn cap_uses_smallest_epsilon_of_a_list() {
        let c = parse("epsilon_list = 0.1,0.01").unwrap();
        assert_eq!(c.dt(0.1).unwrap(), c.dt(0.01).unwrap());
        let f = parse("epsilon_list = 0.1,0.01\nscheme.dt_rule = eps/8").unwrap();
        assert_eq!(f.dt(0.1).unwrap(), 0.1 / 8.0);
    }

    #[test]
    fn serialize_round_trips() {
        let text = "domain.dim = 2\ndomain.lengths = 2,1\ndomain.nodes = 17,9\nconvex.type = box\nconvex.side = 1.5\n\
                    components = 3\nlambda = 2.5\nreaction.type = rotating\nreaction.omega = 0.5\n\
                    diffusion.type = diagonal\ndiffusion.coefficients = 1,0.5,2\nepsilon_list = 0.1,0.01\n\
                    scheme.type = imex\nscheme.dt_rule = eps/8\nt_final = 0.5\nsample_every = 3\nseed = 9\n\
                    output_dir = runs/a b\nchecks = contraction,energy\npairs = 4\ninitial.smooth = true\n\
                    ensemble.size = 7\nensemble.horizon = 2\nensemble.transient = 0.25\nensemble.interval = 0.125\n";
        let c = parse(text).unwrap();
        assert_eq!(parse(&c.serialize()).unwrap(), c);
        assert_eq!(c.serialize(), parse(&c.serialize()).unwrap().serialize());
    }
}
