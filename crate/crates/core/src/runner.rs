//! Configuration-driven experiments behind the `obstacle-rd` binary.
//!
//! Every subcommand writes into `<out>/.<name>.partial` and renames it to
//! `<out>/<name>` only on success; a failed run leaves no partial output.
//! Each result directory holds `config.txt`, the canonical form of the
//! configuration that produced it.
//!
//! | subcommand  | artifacts                                                      |
//! |-------------|----------------------------------------------------------------|
//! | `simulate`  | `trajectory/` and `multipliers/` per run                        |
//! | `compare`   | `reports/`: contraction, smoothing and Assumption 𝓛 over pairs  |
//! | `sweep`     | `sweep.tsv` of `ε` against the error, `reports/` with the slope |
//! | `verify`    | `reports/` of the selected suite criteria                       |
//! | `dimension` | `reports/` with the box-counting fit of the long-time ensemble  |
//!
//! With an `epsilon_list`, `simulate` writes one `eps_<ε>/` directory per
//! value. Numeric artifacts are byte-identical for equal configurations;
//! wall-clock times go to separate `timing.txt` files.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, SchemeKind};
use crate::dynamics::{heat_smooth, project_field, DiffusionSpec};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::io::{write_multiplier_track, write_reports, write_trajectory};
use crate::lagrange::{multiplier_penalized, MultiplierTrack};
use crate::rng;
use crate::suite::{
    ensemble_report, ensemble_samples, run_suite, worst, Criterion, Profile, DIMENSION_STABILITY, ENSEMBLE_STREAMS,
    EPS_MIN_SLOPE, MODEL_TOL, PAIR_STREAMS, SINGLE_STREAMS, UNIFORMITY_FACTOR,
};
use crate::verify::{
    assumption_l_ratio, box_counting_dimension, check_assumption_l, check_contraction, check_eps_convergence,
    check_smoothing, eps_sweep_errors, EstimateReport, PairExperiment, ScaleRange,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    Compare,
    Sweep,
    Verify,
    Dimension,
}

impl Subcommand {
    pub const ALL: [Subcommand; 5] =
        [Subcommand::Simulate, Subcommand::Compare, Subcommand::Sweep, Subcommand::Verify, Subcommand::Dimension];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::Compare => "compare",
            Subcommand::Sweep => "sweep",
            Subcommand::Verify => "verify",
            Subcommand::Dimension => "dimension",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Subcommand::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown subcommand `{s}`"))
    }
}

/// A finished run: where its artifacts are and the reports it produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub reports: Vec<EstimateReport>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// Process exit status: 0 success, 1 configuration error, 2 run failure,
/// 3 a failed check.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.passed() => 0,
        Ok(_) => 3,
        Err(Error::Config { .. } | Error::Parse { .. }) => 1,
        Err(_) => 2,
    }
}

/// Runs `sub` and moves its artifacts to `<out>/<sub>`, replacing an older
/// result there.
pub fn run(config: &ExperimentConfig, sub: Subcommand, out: &Path) -> Result<Outcome> {
    config.validate()?;
    let stage = out.join(format!(".{sub}.partial"));
    let dir = out.join(sub.name());
    if stage.exists() {
        fs::remove_dir_all(&stage)?;
    }
    fs::create_dir_all(&stage)?;
    let result = fs::write(stage.join("config.txt"), config.serialize())
        .map_err(Error::from)
        .and_then(|_| match sub {
            Subcommand::Simulate => simulate(config, &stage),
            Subcommand::Compare => compare(config, &stage),
            Subcommand::Sweep => sweep(config, &stage),
            Subcommand::Verify => verify(config, &stage),
            Subcommand::Dimension => dimension(config, &stage),
        })
        .and_then(|reports| {
            if !reports.is_empty() {
                write_reports(&stage.join("reports"), &reports)?;
            }
            if dir.exists() {
                fs::remove_dir_all(&dir)?;
            }
            fs::rename(&stage, &dir)?;
            Ok(reports)
        });
    match result {
        Ok(reports) => Ok(Outcome { dir, reports }),
        Err(e) => {
            // best effort: the run error matters more than a cleanup error
            let _ = fs::remove_dir_all(&stage);
            Err(e)
        }
    }
}

/// Random initial data in `K` from `stream`, optionally smoothed by five
/// small heat steps and projected back onto `K`.
pub fn initial_field(config: &ExperimentConfig, stream: u64) -> Result<Field> {
    let body = config.body()?;
    let u0 = rng::field_in_body(&config.grid()?, &body, &mut rng::stream(config.seed, stream));
    Ok(if config.smooth_initial { project_field(&body, &heat_smooth(&u0, 0.002, 5)) } else { u0 })
}

fn eps_label(eps: f64) -> String {
    format!("eps_{eps:e}")
}

fn simulate(config: &ExperimentConfig, stage: &Path) -> Result<Vec<EstimateReport>> {
    let u0 = initial_field(config, SINGLE_STREAMS)?;
    let eps_list = match config.scheme {
        SchemeKind::Projection => vec![config.epsilons()[0]],
        _ => config.epsilons(),
    };
    let single = eps_list.len() == 1;
    eps_list.par_iter().try_for_each(|&eps| {
        let integ = config.integrator(eps)?;
        let traj = integ.integrate(&u0, config.t_final, config.sample_every)?;
        let track = match integ.penalty() {
            Some(p) => multiplier_penalized(&traj, p)?,
            None => MultiplierTrack::from_projection(&traj)?,
        };
        let dir = if single { stage.to_path_buf() } else { stage.join(eps_label(eps)) };
        write_trajectory(&dir.join("trajectory"), &traj)?;
        write_multiplier_track(&dir.join("multipliers"), &track)
    })?;
    Ok(Vec::new())
}

/// Contraction and smoothing for every pair and ε (worst pair reported),
/// and for penalized runs reaching `t = 1` the Assumption 𝓛 ratios with
/// their uniformity across ε. The contraction rate is `λ`: a rotation adds
/// nothing to the one-sided Lipschitz constant.
fn compare(config: &ExperimentConfig, _stage: &Path) -> Result<Vec<EstimateReport>> {
    let pairs: Vec<(Field, Field)> = (0..config.pairs)
        .map(|i| {
            let base = PAIR_STREAMS + 2 * i as u64;
            Ok((initial_field(config, base)?, initial_field(config, base + 1)?))
        })
        .collect::<Result<_>>()?;
    let eps_list = match config.scheme {
        SchemeKind::Projection => vec![config.epsilons()[0]],
        _ => config.epsilons(),
    };
    let lambda = config.lambda;
    let mut out = Vec::new();
    let mut ratios = Vec::new();
    for eps in eps_list {
        let integ = config.integrator(eps)?;
        let rows = pairs
            .par_iter()
            .map(|(a, b)| {
                let run = PairExperiment::new(a.clone(), b.clone(), integ.clone(), config.t_final)?
                    .run(config.sample_every)?;
                let ratio = match integ.penalty() {
                    Some(p) if config.t_final >= 1.0 => Some(assumption_l_ratio(&run, p)?),
                    _ => None,
                };
                Ok((
                    check_contraction(&run, lambda, config.t_final, MODEL_TOL)?,
                    check_smoothing(&run, lambda, MODEL_TOL)?,
                    ratio,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let label = |r: EstimateReport| {
            let r = r.param("lambda", lambda);
            if integ.penalty().is_some() {
                r.param("eps", format!("{eps:e}"))
            } else {
                r.param("scheme", "projection")
            }
        };
        let (contraction, smoothing): (Vec<_>, Vec<_>) = rows.iter().map(|r| (r.0.clone(), r.1.clone())).unzip();
        out.push(label(worst(contraction)));
        out.push(label(worst(smoothing)));
        let eps_ratios: Vec<f64> = rows.iter().filter_map(|r| r.2).collect();
        if !eps_ratios.is_empty() {
            ratios.push((eps, eps_ratios));
        }
    }
    if !ratios.is_empty() {
        out.extend(check_assumption_l(&ratios, UNIFORMITY_FACTOR, None));
    }
    Ok(out)
}

/// `‖u_ε(T) − u₀(T)‖` for every ε of `epsilon_list` against the projected
/// reference, all at the step of the smallest ε.
fn sweep(config: &ExperimentConfig, stage: &Path) -> Result<Vec<EstimateReport>> {
    if config.diffusion != DiffusionSpec::Scalar {
        return Err(Error::config("diffusion", "the ε sweep supports scalar diffusion only"));
    }
    if config.scheme == SchemeKind::Projection {
        return Err(Error::config("scheme.type", "the ε sweep needs a penalized scheme"));
    }
    let eps_list = config.epsilons();
    let smallest = eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let dt = config.dt(smallest)?;
    let u0 = initial_field(config, SINGLE_STREAMS)?;
    let errors = eps_sweep_errors(
        &config.grid()?,
        &config.penalty(smallest)?,
        &config.reaction()?,
        &u0,
        &eps_list,
        config.t_final,
        dt,
    )?;
    let mut table = String::from("eps\terror\n");
    for (eps, err) in &errors {
        writeln!(table, "{eps:e}\t{err:e}").expect("writing to a String");
    }
    fs::write(stage.join("sweep.tsv"), table)?;
    Ok(vec![check_eps_convergence(&errors, EPS_MIN_SLOPE)?
        .param("lambda", config.lambda)
        .param("dt", format!("{dt:e}"))])
}

/// The suite on the configured domain, seed and sizes. With no `checks`
/// every criterion runs, except the one-dimensional ones on a 2D domain.
fn verify(config: &ExperimentConfig, _stage: &Path) -> Result<Vec<EstimateReport>> {
    let profile = Profile {
        grid: config.grid()?,
        seed: config.seed,
        pairs: config.pairs,
        ensemble: config.ensemble.size,
        ensemble_horizon: config.ensemble.horizon,
        transient: config.ensemble.transient,
        interval: config.ensemble.interval,
    };
    let criteria: Vec<Criterion> = if config.checks.is_empty() {
        Criterion::ALL.into_iter().filter(|c| config.dim == 1 || !c.needs_1d()).collect()
    } else {
        config.checks.clone()
    };
    run_suite(&profile, &criteria)
}

/// Box counting on the samples of `ensemble.size` runs of the configured
/// model at every `ensemble.interval` in `[ensemble.transient,
/// ensemble.horizon]`.
fn dimension(config: &ExperimentConfig, stage: &Path) -> Result<Vec<EstimateReport>> {
    let integ = config.integrator(config.epsilons()[0])?;
    let initial: Vec<Field> =
        (0..config.ensemble.size).map(|i| initial_field(config, ENSEMBLE_STREAMS + i as u64)).collect::<Result<_>>()?;
    let e = &config.ensemble;
    let points = ensemble_samples(&integ, e.size, |i| initial[i].clone(), e.horizon, e.transient, e.interval)?;
    let est = box_counting_dimension(&points, ScaleRange::default())?;
    let mut table = String::from("level\tcount\n");
    for (k, c) in est.counts.iter().enumerate() {
        writeln!(table, "{k}\t{c}").expect("writing to a String");
    }
    fs::write(stage.join("box_counts.tsv"), table)?;
    Ok(vec![ensemble_report(&est, DIMENSION_STABILITY, points.len())
        .param("lambda", config.lambda)
        .constant("trajectories", e.size as f64)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Epsilon;

    fn small(extra: &str) -> ExperimentConfig {
        let text = format!("domain.nodes = 33\nepsilon = 0.1\nt_final = 0.05\npairs = 2\n{extra}");
        ExperimentConfig::parse(&text, Path::new("test.cfg")).unwrap()
    }

    #[test]
    fn subcommand_names_round_trip() {
        for s in Subcommand::ALL {
            assert_eq!(s.name().parse::<Subcommand>().unwrap(), s);
        }
    }

    #[test]
    fn exit_codes_follow_the_outcome() {
        let ok = Outcome { dir: PathBuf::new(), reports: vec![EstimateReport::new("c", 0.0, 1.0, 0.0)] };
        let failed = Outcome { dir: PathBuf::new(), reports: vec![EstimateReport::new("c", 2.0, 1.0, 0.0)] };
        assert_eq!(exit_code(&Ok(ok)), 0);
        assert_eq!(exit_code(&Ok(failed)), 3);
        assert_eq!(exit_code(&Err(Error::config("lambda", "bad"))), 1);
        assert_eq!(exit_code(&Err(Error::RunFailed("diverged".into()))), 2);
    }

    #[test]
    fn simulate_writes_trajectory_and_multipliers() {
        let out = tempfile::tempdir().unwrap();
        let o = run(&small(""), Subcommand::Simulate, out.path()).unwrap();
        assert!(o.dir.join("trajectory/manifest.txt").exists());
        assert!(o.dir.join("multipliers/manifest.txt").exists());
        assert!(!out.path().join(".simulate.partial").exists());
    }

    #[test]
    fn epsilon_list_gives_one_directory_per_value() {
        let out = tempfile::tempdir().unwrap();
        let mut config = small("");
        config.epsilon = Epsilon::List(vec![0.1, 0.05]);
        let o = run(&config, Subcommand::Simulate, out.path()).unwrap();
        assert!(o.dir.join("eps_1e-1/trajectory/manifest.txt").exists());
        assert!(o.dir.join("eps_5e-2/multipliers/manifest.txt").exists());
    }

    #[test]
    fn compare_reports_pair_inequalities() {
        let out = tempfile::tempdir().unwrap();
        let o = run(&small("lambda = 1"), Subcommand::Compare, out.path()).unwrap();
        let checks: Vec<&str> = o.reports.iter().map(|r| r.check.as_str()).collect();
        assert_eq!(checks, ["contraction", "smoothing"]);
        assert!(o.passed(), "{:?}", o.reports);
        assert!(o.dir.join("reports/summary.tsv").exists());
    }

    #[test]
    fn failed_run_leaves_no_partial_output() {
        let out = tempfile::tempdir().unwrap();
        let err = run(&small(""), Subcommand::Sweep, out.path()).unwrap_err();
        assert!(matches!(err, Error::DegenerateSweep { .. }), "{err:?}");
        assert!(!out.path().join(".sweep.partial").exists());
        assert!(!out.path().join("sweep").exists());
    }
}
