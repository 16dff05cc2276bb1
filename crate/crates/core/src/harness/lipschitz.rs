//! Lipschitz stability of `κ ↦ DL(κ; ·)` measured through the ratio
//! `‖DL(κ₂; η) - DL(κ₁; η)‖ / (‖η‖_∞ ‖e^{κ₂} - e^{κ₁}‖_∞)`.

use super::report::{ExperimentReport, Gate, Table};
use crate::basis::BoundaryBasis;
use crate::calculus::positive_eigensystem;
use crate::conductivity::{ConductivityField, FieldKind};
use crate::derivative::df_tau_eigen;
use crate::error::{Error, Result};
use crate::fem::{FemSpace, ForwardModel};
use crate::sobolev::spectral_norm_symmetric;
use nalgebra::DMatrix;

/// Largest accepted relative change of the maximal ratio between
/// consecutive basis orders.
pub const RATIO_DRIFT: f64 = 0.1;

/// `DL(κ; η)` for each order in `n_grid`, from leading blocks of the
/// largest section.
fn dl_sections(model: &ForwardModel<'_, f64>, eta: &ConductivityField<f64>, n_grid: &[usize]) -> Result<Vec<DMatrix<f64>>> {
    let d = model.dlambda_matrix(&eta.mul(model.sigma())?)?;
    n_grid
        .iter()
        .map(|&n| {
            let e = positive_eigensystem(model.nd().truncate(n)?.matrix())?;
            let block = d.view((0, 0), (2 * n, 2 * n)).into_owned();
            df_tau_eigen(&e, &block, 0.0)
        })
        .collect()
}

pub fn dl_lipschitz_check(
    space: &FemSpace<f64>,
    basis: &BoundaryBasis<f64>,
    pairs: &[(ConductivityField<f64>, ConductivityField<f64>)],
    eta: &ConductivityField<f64>,
    n_grid: &[usize],
) -> Result<ExperimentReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("need at least one pair".into()));
    }
    if n_grid.len() < 2 || n_grid.iter().any(|&n| n == 0 || n > basis.max_frequency()) {
        return Err(Error::InvalidInput(format!(
            "basis orders must be at least two values in 1..={}",
            basis.max_frequency()
        )));
    }
    if pairs.iter().any(|(a, b)| a.kind() != FieldKind::Log || b.kind() != FieldKind::Log) {
        return Err(Error::InvalidInput("pairs must be log-conductivities".into()));
    }
    let eta_sup = eta.sup_norm();
    if eta_sup == 0.0 {
        return Err(Error::InvalidInput("the direction must be nonzero".into()));
    }

    let mut table = Table::new("lipschitz", &["pair", "N", "difference", "sigma_gap", "ratio"]);
    let mut max_ratio = vec![0.0f64; n_grid.len()];
    for (i, (k1, k2)) in pairs.iter().enumerate() {
        let gap = k2.conductivity().sub(&k1.conductivity())?.sup_norm();
        let d1 = dl_sections(&ForwardModel::new(space, k1, basis)?, eta, n_grid)?;
        let d2 = dl_sections(&ForwardModel::new(space, k2, basis)?, eta, n_grid)?;
        for (j, &n) in n_grid.iter().enumerate() {
            let diff = spectral_norm_symmetric(&(&d2[j] - &d1[j]));
            // Coinciding conductivities give a vanishing numerator too.
            let ratio = if gap > 0.0 { diff / (eta_sup * gap) } else { 0.0 };
            max_ratio[j] = max_ratio[j].max(ratio);
            table.push(vec![i as f64, n as f64, diff, gap, ratio]);
        }
    }
    let drift = max_ratio
        .windows(2)
        .map(|w| if w[0] > 0.0 { (w[1] - w[0]).abs() / w[0] } else { 0.0 })
        .fold(0.0, f64::max);

    let mut report = ExperimentReport::new("dl_lipschitz");
    report.param("pairs", pairs.len()).param("n_grid", n_grid).param("eta_sup", eta_sup);
    let mut summary = Table::new("max_ratio", &["N", "max_ratio"]);
    for (j, &n) in n_grid.iter().enumerate() {
        summary.push(vec![n as f64, max_ratio[j]]);
    }
    report.tables.push(table);
    report.tables.push(summary);
    report.gate(Gate::at_most("max_ratio_drift", drift, RATIO_DRIFT));
    Ok(report)
}
