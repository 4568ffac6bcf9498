//! Reproducible random initial data.
//!
//! Generator contract: a run seed `s` and a stream index `k` select the
//! ChaCha8 keystream with key `seed_from_u64(s)` and stream id `k`. Stream
//! ids are assigned by role, so every trajectory of an ensemble draws from
//! its own independent stream and the result does not depend on how runs
//! are scheduled across workers.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::convex::ConvexBody;
use crate::grid::{Field, Grid};

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Axis-aligned bounding box of `K`.
pub fn bounding_box(body: &ConvexBody) -> Vec<(f64, f64)> {
    match body {
        ConvexBody::Simplex { n } => vec![(0.0, 1.0); *n],
        ConvexBody::Ball { center, radius } => center.iter().map(|c| (c - radius, c + radius)).collect(),
        ConvexBody::Box { n, side } => vec![(0.0, *side); *n],
    }
}

/// A point uniformly distributed in `K`, by rejection from the bounding box.
pub fn point_in_body(body: &ConvexBody, rng: &mut impl Rng) -> Vec<f64> {
    let bounds = bounding_box(body);
    loop {
        let z: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
        if body.contains(&z) {
            return z;
        }
    }
}

/// Independent uniform samples of `K` at every interior node.
pub fn field_in_body(grid: &Arc<Grid>, body: &ConvexBody, rng: &mut impl Rng) -> Field {
    Field::from_fn(grid.clone(), body.dim(), |_| point_in_body(body, rng))
}
