//! Convergence orders over a resolution ladder and the Clifford torus diagnostics.

use serde::{Deserialize, Serialize};

use crate::corpus;
use crate::curvature::{hopf_max, mean_curvature_one_form, second_fundamental_form};
use crate::error::{Error, Result};
use crate::hamiltonian::{Bump, ReebConvention};
use crate::stationarity::weak_stationarity_residual;

/// Residuals at or below this are treated as exact.
pub const MACHINE_FLOOR: f64 = 1e-12;

/// Least-squares slope of -log(value) against log(n).
pub fn fitted_order(ns: &[usize], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .zip(values)
        .map(|(&n, &v)| ((n as f64).ln(), v.abs().max(f64::MIN_POSITIVE).ln()))
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    -sxy / sxx
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    pub order: f64,
    /// Every value is at or below [`MACHINE_FLOOR`].
    pub at_floor: bool,
    pub passed: bool,
}

/// Passes when the fitted order reaches `min_order` or every value is already at machine zero.
pub fn decay(ns: &[usize], values: &[f64], min_order: f64) -> Decay {
    let at_floor = values.iter().all(|v| v.abs() <= MACHINE_FLOOR);
    let order = fitted_order(ns, values);
    Decay {
        order,
        at_floor,
        passed: at_floor || order >= min_order,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffordRow {
    pub resolution: usize,
    /// max |Delta beta| on the warped lift.
    pub laplacian_beta: f64,
    pub stationarity: f64,
    /// max |Hopf differential| on the product of circles of radii 1 and 1/2.
    pub hopf: f64,
    pub area: f64,
    /// area / 4 pi^2 - 1 on the standard lift.
    pub area_error: f64,
}

pub fn clifford_row(n: usize, warp: f64, bump_radius: f64, level: f64) -> Result<CliffordRow> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Parameter(format!("resolution {n} must be even and at least 4")));
    }
    let warped = corpus::clifford_lift(n, warp, false)?;
    let curv = second_fundamental_form(&warped)?;
    let laplacian_beta = mean_curvature_one_form(&warped, &curv)?.max_laplacian();

    let t = warped.target;
    let center = warped.positions[0];
    let h = Bump {
        target: t,
        center,
        radius: bump_radius,
        amplitude: 1.0,
    };
    let f: Vec<f64> = warped.positions.iter().map(|p| -t.measure(&(p - center)).norm()).collect();
    let ones = vec![1; f.len()];
    let stationarity = weak_stationarity_residual(&warped, &ones, &h, &f, -level, ReebConvention::Thm1)?;

    let hopf = hopf_max(&corpus::clifford_lift_radii(n, n / 2, 1.0, 0.5)?)?;
    let area = corpus::clifford_lift(n, 0.0, false)?.area()?;
    let four_pi2 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
    Ok(CliffordRow {
        resolution: n,
        laplacian_beta,
        stationarity,
        hopf,
        area,
        area_error: area / four_pi2 - 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_of_a_power_law() {
        let ns = [10, 20, 40];
        let v: Vec<f64> = ns.iter().map(|&n| 3.0 / (n as f64).powi(2)).collect();
        assert!((fitted_order(&ns, &v) - 2.0).abs() < 1e-12);
        assert!(decay(&ns, &[1e-15, -3e-16, 2e-16], 1.0).passed);
        assert!(!decay(&ns, &[1e-3, 1e-3, 1e-3], 1.0).passed);
    }
}
