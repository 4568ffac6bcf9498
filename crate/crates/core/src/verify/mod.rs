//! Estimate checks: each a-priori inequality rendered as a measurement on
//! run artifacts, producing an [`EstimateReport`].
//!
//! Checks are pure functions of trajectories and multiplier tracks, so they
//! can be re-run on stored artifacts. Relative slack (`tol`) is folded into
//! the right-hand side and recorded as a constant of the report.

pub mod convergence;
pub mod dimension;
pub mod energy;
pub mod multipliers;
pub mod pairs;
pub mod region;
pub mod report;
pub mod scalar;

pub use convergence::{check_contraction_map, check_eps_convergence, contraction_map_rate, eps_sweep_errors};
pub use dimension::{box_counting_dimension, DimensionEstimate, ScaleRange};
pub use energy::{check_energy_balance, check_energy_monotone, discrete_energy, EnergyProfile};
pub use multipliers::{
    check_multiplier_inclusion, check_multiplier_linf, check_oracle_order, inclusion_minimum, oracle_gap, oracle_study,
    OracleStudy,
};
pub use pairs::{
    assumption_l_ratio, check_assumption_l, check_contraction, check_smoothing, squeezing_constant, PairExperiment,
    PairRun,
};
pub use region::{check_invariant_region, region_constant, region_level};
pub use report::{summary_table, EstimateReport};
pub use scalar::{check_scalar_reduction, reduction_defect, scalar_reduction_residuals};

use crate::error::{Error, Result};

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx
}

/// `max/min` of positive values; 1 when all vanish, infinite when only some do.
pub fn spread_factor(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Uniformity in `ε` of a per-`ε` quantity: passes when its spread factor
/// across the sweep is at most `factor`.
pub fn check_uniformity(check: &str, per_eps: &[(f64, f64)], factor: f64) -> EstimateReport {
    let values: Vec<f64> = per_eps.iter().map(|p| p.1).collect();
    let mut r = EstimateReport::new(check, spread_factor(&values), factor, 0.0).constant("factor", factor);
    for (eps, v) in per_eps {
        r = r.constant(&format!("value@eps={eps:e}"), *v);
    }
    r
}

/// Observed log-log order: `left` is the required minimum, `right` the
/// fitted slope of `ln y` against `ln x`.
pub fn check_order(check: &str, samples: &[(f64, f64)], min_order: f64) -> Result<EstimateReport> {
    if samples.len() < 3 {
        return Err(Error::DegenerateSweep { needed: 3, got: samples.len() });
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let order = ls_slope(&xs, &ys);
    let mut r = EstimateReport::new(check, min_order, order, 0.0).constant("order", order);
    for (x, y) in samples {
        r = r.constant(&format!("value@{x:e}"), *y);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = [1.0f64, 2.0, 4.0, 8.0].iter().map(|x| (3.0 * x.sqrt()).ln()).collect();
        assert!((ls_slope(&xs, &ys) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spread_conventions() {
        assert_eq!(spread_factor(&[0.0, 0.0]), 1.0);
        assert_eq!(spread_factor(&[0.0, 1.0]), f64::INFINITY);
        assert_eq!(spread_factor(&[2.0, 1.0, 1.5]), 2.0);
        assert!(check_uniformity("u", &[(0.1, 1.0), (0.01, 1.9)], 2.0).pass);
        assert!(!check_uniformity("u", &[(0.1, 1.0), (0.01, 2.1)], 2.0).pass);
    }

    #[test]
    fn order_needs_three_points() {
        assert!(matches!(check_order("o", &[(1.0, 1.0), (2.0, 2.0)], 0.9), Err(Error::DegenerateSweep { .. })));
        let r = check_order("o", &[(1.0, 1.0), (0.5, 0.5), (0.25, 0.25)], 0.9).unwrap();
        assert!(r.pass && (r.right - 1.0).abs() < 1e-12);
    }
}
