//! Box-counting dimension of synthetic one- and two-parameter families of
//! fields.

use std::sync::Arc;

use obstacle_rd::verify::{box_counting_dimension, ScaleRange};
use obstacle_rd::{rng, ConvexBody, Field, Grid};
use rand::Rng;

fn main() -> obstacle_rd::Result<()> {
    let grid = Arc::new(Grid::interval(4.0, 128)?);
    let body = ConvexBody::simplex(2)?;
    let anchors: Vec<Field> = (0..3).map(|k| rng::field_in_body(&grid, &body, &mut rng::stream(9, k))).collect();
    let mut r = rng::stream(9, 100);
    let mut combine = |params: usize| {
        let mut f = anchors[0].clone();
        for a in &anchors[1..=params] {
            f.axpy(r.random_range(0.0..1.0), a).expect("same grid");
        }
        f
    };
    for (params, count) in [(1, 1000), (2, 8000)] {
        let points: Vec<Field> = (0..count).map(|_| combine(params)).collect();
        let est = box_counting_dimension(&points, ScaleRange::default())?;
        println!("{params}-parameter family: dimension {:.3}, counts {:?}", est.dimension, est.counts);
    }
    Ok(())
}
