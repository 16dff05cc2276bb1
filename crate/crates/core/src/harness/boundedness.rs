//! Boundedness of logarithm differences across basis sizes.
//!
//! Each `log Λ(e^κ)` is unbounded, so its truncations grow with `N`, while
//! the difference of two of them stays bounded.

use super::fit::fit_line;
use super::report::{Curve, ExperimentReport, Gate, Table};
use crate::basis::BoundaryBasis;
use crate::calculus::positive_eigensystem;
use crate::conductivity::{ConductivityField, FieldKind};
use crate::error::{Error, Result};
use crate::fem::{nd_matrix, FemSpace};
use crate::nd::NdMatrix;
use crate::sobolev::spectral_norm_symmetric;
use nalgebra::DMatrix;

/// Largest accepted max/min ratio of the difference norms over the grid.
pub const DIFFERENCE_VARIATION: f64 = 1.5;
/// Accepted slope of `‖log Λ‖` against `log N`.
pub const LOG_GROWTH_SLOPE: (f64, f64) = (0.8, 1.2);

fn log_matrix(a: &NdMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(positive_eigensystem(a.matrix())?.reconstruct(f64::ln))
}

/// Runs the comparison for two log-conductivities over `n_grid`, which must
/// not exceed the order of `basis`. Sections for smaller `N` are the leading
/// blocks of the largest one.
pub fn relative_boundedness_experiment(
    space: &FemSpace<f64>,
    basis: &BoundaryBasis<f64>,
    kappa1: &ConductivityField<f64>,
    kappa2: &ConductivityField<f64>,
    n_grid: &[usize],
) -> Result<ExperimentReport> {
    if kappa1.kind() != FieldKind::Log || kappa2.kind() != FieldKind::Log {
        return Err(Error::InvalidInput("boundedness compares log-conductivities".into()));
    }
    if n_grid.len() < 2 || n_grid.iter().any(|&n| n == 0 || n > basis.max_frequency()) {
        return Err(Error::InvalidInput(format!(
            "basis sizes must be at least two values in 1..={}",
            basis.max_frequency()
        )));
    }
    let a1 = nd_matrix(space, kappa1, basis)?;
    let a2 = nd_matrix(space, kappa2, basis)?;
    let sigma_gap = kappa1.conductivity().sub(&kappa2.conductivity())?.sup_norm();

    let mut table = Table::new("boundedness", &["N", "difference", "log_norm", "difference_over_sigma_gap"]);
    for &n in n_grid {
        let (l1, l2) = (log_matrix(&a1.truncate(n)?)?, log_matrix(&a2.truncate(n)?)?);
        let diff = spectral_norm_symmetric(&(&l2 - &l1));
        let log_norm = spectral_norm_symmetric(&l1);
        let ratio = if sigma_gap > 0.0 { diff / sigma_gap } else { 0.0 };
        table.push(vec![n as f64, diff, log_norm, ratio]);
    }

    let ns = table.column("N").unwrap_or_default();
    let diffs = table.column("difference").unwrap_or_default();
    let logs = table.column("log_norm").unwrap_or_default();
    let (dmin, dmax) = diffs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    // Identical inputs give a zero difference at every N, which is bounded.
    let variation = if dmax == 0.0 { 1.0 } else { dmax / dmin };
    let log_n: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let fit = fit_line("log_norm_vs_log_n", &log_n, &logs)?;

    let mut report = ExperimentReport::new("relative_boundedness");
    report
        .param("n_grid", n_grid)
        .param("kappa1", kappa1.hash_hex())
        .param("kappa2", kappa2.hash_hex())
        .param("sigma_gap", sigma_gap);
    report.gate(Gate::at_most("difference_variation", variation, DIFFERENCE_VARIATION));
    report.gate(Gate::within(
        "log_growth_slope",
        fit.slope,
        LOG_GROWTH_SLOPE.0,
        LOG_GROWTH_SLOPE.1,
    ));
    let pts = |ys: &[f64]| ns.iter().zip(ys).map(|(&n, &y)| [n, y]).collect::<Vec<_>>();
    report.curves.push(Curve::new("difference", "N", "difference_norm", pts(&diffs)));
    report.curves.push(Curve::new("log_norm", "N", "log_norm", pts(&logs)));
    report.fits.push(fit);
    report.tables.push(table);
    Ok(report)
}
