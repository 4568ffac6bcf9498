//! Box-counting dimension of a finite cloud of fields.
//!
//! Points are embedded in the L² grid metric (values scaled by the square
//! root of the quadrature weight), centred, and rotated onto their principal
//! axes so that low-dimensional families line up with the coordinate boxes.
//! The box lattice is anchored just below the lower corner of the cloud's
//! bounding box, so axes of negligible spread never split the cloud. Boxes
//! are the cubes `∏ (r·(iₖ − 1), r·iₖ]`; a point on a box face belongs to
//! the box with the smaller index.

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::Field;

pub const MIN_POINTS: usize = 100;
pub const STALL_LEVELS: usize = 3;
const MAX_LEVELS: i32 = 40;

/// Dyadic scales `r_j = r₀·2^{−j}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleRange {
    /// `r₀` is a quarter of the extent of the cloud along its principal
    /// axis (coarser boxes only resolve where the lattice cuts the cloud);
    /// levels are added while the box count stays below `fill·points`, and
    /// until the count has not changed over [`STALL_LEVELS`] refinements
    /// (the cloud is then resolved down to coincident points).
    Auto {
        fill: f64,
    },
    Explicit {
        r0: f64,
        levels: usize,
    },
}

impl Default for ScaleRange {
    fn default() -> Self {
        ScaleRange::Auto { fill: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionEstimate {
    /// Least-squares slope of `ln N(r)` against `ln(1/r)` over all levels.
    pub dimension: f64,
    /// RMS residual of that fit.
    pub residual: f64,
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// `running[j]` is the fit over levels `0..=j + 2`: the estimate as the
    /// range is extended to finer scales.
    pub running: Vec<f64>,
    /// `(max − min)/mean` of the running estimates whose finest level lies
    /// in the finer half of the range; zero when they all agree.
    pub spread: f64,
    pub axes: usize,
}

impl DimensionEstimate {
    pub fn is_stable(&self, tolerance: f64) -> bool {
        self.spread <= tolerance
    }
}

/// Principal coordinates of the points, one row per point.
fn principal_coordinates(points: &[Field]) -> Result<Vec<Vec<f64>>> {
    let first = &points[0];
    for p in &points[1..] {
        first.check_shape(p)?;
    }
    let scale = first.grid().weight().sqrt();
    let d = first.values().len();
    let m = points.len();
    let mut mean = vec![0.0; d];
    for p in points {
        for (a, v) in mean.iter_mut().zip(p.values()) {
            *a += v;
        }
    }
    mean.iter_mut().for_each(|a| *a /= m as f64);
    let x = DMatrix::from_fn(m, d, |i, j| (points[i].values()[j] - mean[j]) * scale);
    let total: f64 = x.iter().map(|v| v * v).sum();
    let raw: f64 = points.iter().flat_map(|p| p.values()).map(|v| v * v * scale * scale).sum();
    if total <= 1e-24 * raw {
        return Ok(vec![Vec::new(); m]);
    }
    // Whichever of the two Gram matrices is smaller carries the same spectrum.
    let (values, coords): (Vec<f64>, DMatrix<f64>) = if m <= d {
        let eig = SymmetricEigen::new(&x * x.transpose());
        let vals = eig.eigenvalues.iter().cloned().collect();
        let mut c = eig.eigenvectors;
        for (k, mut col) in c.column_iter_mut().enumerate() {
            col *= eig.eigenvalues[k].max(0.0).sqrt();
        }
        (vals, c)
    } else {
        let eig = SymmetricEigen::new(x.transpose() * &x);
        let vals = eig.eigenvalues.iter().cloned().collect();
        (vals, &x * eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..values.len()).filter(|&k| values[k] > 1e-12 * total).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut rows: Vec<Vec<f64>> = (0..m).map(|i| order.iter().map(|&k| coords[(i, k)]).collect()).collect();
    let anchor = 1e-9 * total.sqrt();
    for axis in 0..order.len() {
        let lo = rows.iter().map(|r| r[axis]).fold(f64::INFINITY, f64::min);
        rows.iter_mut().for_each(|r| r[axis] += anchor - lo);
    }
    Ok(rows)
}

fn count_boxes(coords: &[Vec<f64>], r: f64) -> usize {
    let mut boxes: HashSet<Vec<i64>> = HashSet::with_capacity(coords.len());
    for c in coords {
        boxes.insert(c.iter().map(|x| (x / r).ceil() as i64 - 1).collect());
    }
    boxes.len()
}

fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum::<f64>() / n).sqrt();
    (slope, rms)
}

pub fn box_counting_dimension(points: &[Field], scales: ScaleRange) -> Result<DimensionEstimate> {
    if points.len() < MIN_POINTS {
        return Err(Error::TooFewPoints { needed: MIN_POINTS, got: points.len() });
    }
    let coords = principal_coordinates(points)?;
    let axes = coords[0].len();
    let extent = if axes == 0 {
        0.0
    } else {
        let (lo, hi) =
            coords.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c[0]), hi.max(c[0])));
        hi - lo
    };
    let mut radii = Vec::new();
    let mut counts = Vec::new();
    match scales {
        ScaleRange::Explicit { r0, levels } => {
            for j in 0..levels {
                let r = r0 * 0.5f64.powi(j as i32);
                radii.push(r);
                counts.push(count_boxes(&coords, r));
            }
        }
        ScaleRange::Auto { fill } => {
            let r0 = if extent > 0.0 { extent / 4.0 } else { 1.0 };
            let limit = (fill * points.len() as f64).max(1.0);
            for j in 0..MAX_LEVELS {
                let r = r0 * 0.5f64.powi(j);
                let n = count_boxes(&coords, r);
                if n as f64 > limit {
                    break;
                }
                radii.push(r);
                counts.push(n);
                let k = counts.len();
                if k > STALL_LEVELS && counts[k - 1 - STALL_LEVELS..].iter().all(|&c| c == n) {
                    break;
                }
            }
        }
    }
    if radii.len() < 3 {
        return Err(Error::TooFewScales { needed: 3, got: radii.len() });
    }
    let xs: Vec<f64> = radii.iter().map(|r| -r.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&n| (n as f64).ln()).collect();
    let (dimension, residual) = fit(&xs, &ys);
    let running: Vec<f64> = (2..xs.len()).map(|j| fit(&xs[..=j], &ys[..=j]).0).collect();
    let half = (xs.len() / 2).max(2);
    let tail = &running[half - 2..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let spread = if hi - lo == 0.0 { 0.0 } else { (hi - lo) / mean.abs() };
    Ok(DimensionEstimate { dimension, residual, scales: radii, counts, running, spread, axes })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::Rng;

    use super::*;
    use crate::grid::Grid;
    use crate::rng;

    fn family(params: &[Vec<f64>]) -> Vec<Field> {
        let g = Arc::new(Grid::interval(2.0, 65).unwrap());
        params
            .iter()
            .map(|p| {
                Field::from_fn(g.clone(), 2, |x| {
                    let s1 = (std::f64::consts::PI * x[0] / 2.0).sin();
                    let s2 = (std::f64::consts::PI * x[0]).sin();
                    let v = p.get(1).copied().unwrap_or(0.0);
                    vec![0.3 + p[0] * s1 + v * s2, 0.2 - 0.5 * p[0] * s2 + v * s1]
                })
            })
            .collect()
    }

    #[test]
    fn identical_points_have_dimension_zero() {
        let pts = family(&vec![vec![0.25]; 150]);
        let est = box_counting_dimension(&pts, ScaleRange::default()).unwrap();
        assert_eq!(est.dimension, 0.0);
        assert_eq!(est.axes, 0);
        assert!(est.counts.iter().all(|&n| n == 1));
    }

    #[test]
    fn too_few_points() {
        let pts = family(&vec![vec![0.0]; 10]);
        assert!(matches!(
            box_counting_dimension(&pts, ScaleRange::default()),
            Err(Error::TooFewPoints { needed: 100, got: 10 })
        ));
    }

    #[test]
    fn line_family_is_one_dimensional() {
        let mut r = rng::stream(3, 0);
        let params: Vec<Vec<f64>> = (0..1000).map(|_| vec![r.random_range(-1.0..1.0)]).collect();
        let est = box_counting_dimension(&family(&params), ScaleRange::default()).unwrap();
        assert!((0.8..=1.2).contains(&est.dimension), "{est:?}");
        assert_eq!(est.axes, 1);
        assert!(est.is_stable(0.2));
    }

    #[test]
    fn plane_family_is_two_dimensional() {
        let mut r = rng::stream(3, 1);
        let params: Vec<Vec<f64>> =
            (0..8000).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
        let est = box_counting_dimension(&family(&params), ScaleRange::default()).unwrap();
        assert!((1.6..=2.4).contains(&est.dimension), "{est:?}");
        assert!(est.is_stable(0.2));
    }

    #[test]
    fn face_points_go_to_lower_box() {
        let coords = vec![vec![1.0], vec![0.5], vec![0.25]];
        // (0.5, 1] holds 1.0, (0, 0.5] holds 0.5 and 0.25
        assert_eq!(count_boxes(&coords, 0.5), 2);
        assert_eq!(count_boxes(&coords, 1.0), 1);
        assert_eq!(count_boxes(&coords, 0.25), 3);
    }
}
