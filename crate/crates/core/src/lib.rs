//! Solvers and estimate checks for vector reaction-diffusion systems whose
//! state is confined to a bounded convex set `K ⊂ ℝⁿ`:
//!
//! ```text
//! ∂ₜu − Δu + ∂I_K(u) ∋ λu,   u|∂Ω = 0,   u(0) = u₀ ∈ K.
//! ```
//!
//! The obstacle term `∂I_K` is either replaced by the gradient of a smooth
//! convex penalty `F_ε` ([`penalty`]) and integrated with an IMEX or explicit
//! scheme, or enforced exactly by a projected heat step ([`dynamics`]).
//! [`lagrange`] recovers the multipliers `h` on both sides, and [`verify`]
//! turns the a-priori estimates of the theory (contraction, smoothing,
//! multiplier bounds, invariant regions, L¹ multiplier Lipschitz bounds,
//! squeezing, ε-convergence) into measurable reports.
//!
//! The `examples/` directory holds one runnable program per capability; the
//! `obstacle-rd` binary drives configuration-file experiments.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod convex;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod lagrange;
pub mod penalty;
pub mod rng;
pub mod runner;
pub mod suite;
pub mod verify;

pub use convex::{ConvexBody, SmoothDistance};
pub use dynamics::{DiffusionSpec, Integrator, ReactionSpec, Scheme, Trajectory};
pub use error::{Error, Result};
pub use grid::{Field, Grid, NormKind};
pub use lagrange::{MultiplierSource, MultiplierTrack};
pub use penalty::{PenaltyKind, PenaltyModel, ScalarProfile, ThetaConstants};
pub use verify::EstimateReport;
