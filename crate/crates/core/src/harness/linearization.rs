//! Relative linearization errors of the standard and logarithmic forward
//! maps, `‖F(x+h) - F(x) - DF(x; h)‖ / ‖F(x+h) - F(x)‖`.
//!
//! `Λ` is measured in the `(-1/2, 1/2)` Fourier norm at `x = σ`, `L` in the
//! spectral norm at `x = κ`.

use super::report::{Curve, ExperimentReport, Gate, Table};
use crate::basis::BoundaryBasis;
use crate::calculus::positive_eigensystem;
use crate::conductivity::{ConductivityField, FieldKind};
use crate::derivative::df_tau_eigen;
use crate::error::{Error, Result};
use crate::fem::{nd_matrix, FemSpace, ForwardModel};
use crate::sobolev::{spectral_norm_symmetric, weighted_norm};
use rayon::prelude::*;

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn relative(residual: f64, change: f64) -> f64 {
    if change == 0.0 {
        0.0
    } else {
        residual / change
    }
}

/// Compares both maps at the log-conductivity `kappa0` over the
/// log-conductivity samples.
pub fn linearization_error_compare(
    space: &FemSpace<f64>,
    basis: &BoundaryBasis<f64>,
    kappa0: &ConductivityField<f64>,
    samples: &[ConductivityField<f64>],
) -> Result<ExperimentReport> {
    if kappa0.kind() != FieldKind::Log || samples.iter().any(|s| s.kind() != FieldKind::Log) {
        return Err(Error::InvalidInput("the comparison works on log-conductivities".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let model = ForwardModel::new(space, kappa0, basis)?;
    let sigma0 = model.sigma().clone();
    let lambda0 = model.nd().matrix().clone();
    let e0 = positive_eigensystem(&lambda0)?;
    let log0 = e0.reconstruct(f64::ln);

    let rows: Vec<[f64; 4]> = samples
        .par_iter()
        .map(|kappa| {
            let lambda = nd_matrix(space, kappa, basis)?;
            // Standard map, increment h = σ - σ₀.
            let h_sigma = kappa.conductivity().sub(&sigma0)?;
            let change = lambda.matrix() - &lambda0;
            let residual = &change - model.dlambda_matrix(&h_sigma)?;
            let n_change = weighted_norm(&change, -0.5, 0.5, true);
            let rel_lambda = relative(weighted_norm(&residual, -0.5, 0.5, true), n_change);
            // Log map, increment h = κ - κ₀ and DL(κ₀; h) = DF₀(σ₀; h σ₀).
            let h_kappa = kappa.sub(kappa0)?;
            let dl = df_tau_eigen(&e0, &model.dlambda_matrix(&h_kappa.mul(&sigma0)?)?, 0.0)?;
            let log_change = positive_eigensystem(lambda.matrix())?.reconstruct(f64::ln) - &log0;
            let l_change = spectral_norm_symmetric(&log_change);
            let rel_log = relative(spectral_norm_symmetric(&(&log_change - dl)), l_change);
            Ok([rel_lambda, rel_log, n_change, l_change])
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(
        "linearization",
        &["sample", "rel_err_lambda", "rel_err_log", "lambda_change", "log_change"],
    );
    for (i, r) in rows.iter().enumerate() {
        table.push(vec![i as f64, r[0], r[1], r[2], r[3]]);
    }
    let med_lambda = median(&rows.iter().map(|r| r[0]).collect::<Vec<_>>());
    let med_log = median(&rows.iter().map(|r| r[1]).collect::<Vec<_>>());

    let mut report = ExperimentReport::new("linearization_compare");
    report
        .param("samples", samples.len())
        .param("kappa0", kappa0.hash_hex())
        .param("median_rel_err_lambda", med_lambda)
        .param("median_rel_err_log", med_log);
    report.curves.push(Curve::new(
        "rel_err_pairs",
        "rel_err_lambda",
        "rel_err_log",
        rows.iter().map(|r| [r[0], r[1]]).collect(),
    ));
    report.tables.push(table);
    let ratio = if med_lambda > 0.0 { med_log / med_lambda } else { f64::NAN };
    report.gate(Gate::at_most("median_ratio_log_over_lambda", ratio, 1.0));
    Ok(report)
}
