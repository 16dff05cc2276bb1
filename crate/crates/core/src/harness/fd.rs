//! Central finite-difference checks of the derivative engine.
//!
//! The error of a central difference quotient against the exact derivative
//! decays like `t²` until roundoff, which grows like `ε·‖F‖/t`, takes over.
//! Only steps whose error stays clearly above that floor enter the fit.

use super::fit::loglog_fit;
use super::report::{Curve, ExperimentReport, Gate, Table};
use crate::basis::BoundaryBasis;
use crate::calculus::positive_eigensystem;
use crate::conductivity::{ConductivityField, FieldKind};
use crate::derivative::{d2f_tau, df_tau_eigen, df_tau_spectral, dl};
use crate::error::{Error, Result};
use crate::fem::{nd_matrix, FemSpace, ForwardModel};
use crate::sobolev::spectral_norm;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Roundoff floor multiplier: errors below `FLOOR·ε·scale/t` are noise.
const FLOOR: f64 = 1e4;

/// Accepted range of the fitted convergence order.
pub const FD_SLOPE: (f64, f64) = (1.8, 2.2);

/// Which map is differenced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum FdMap {
    /// `Λ(σ)` against `DΛ(σ; η)`.
    Lambda,
    /// `DΛ(σ; η)` differenced along `ξ`, against `D²Λ(σ; η, ξ)`.
    Lambda2,
    /// `log(Λ(σ) + τI)` against `DF_τ(σ; η)`.
    LogShifted { tau: f64 },
    /// `DF_τ(σ; η)` differenced along `ξ`, against `D²F_τ(σ; η, ξ)`.
    LogShifted2 { tau: f64 },
    /// `L(κ) = log Λ(e^κ)` against `DL(κ; η)`; the base point is `κ`.
    LogMap,
}

impl FdMap {
    pub fn label(&self) -> String {
        match self {
            FdMap::Lambda => "lambda".into(),
            FdMap::Lambda2 => "lambda2".into(),
            FdMap::LogShifted { tau } => format!("log_shifted_tau{tau}"),
            FdMap::LogShifted2 { tau } => format!("log_shifted2_tau{tau}"),
            FdMap::LogMap => "log_map".into(),
        }
    }

    fn needs_second_direction(&self) -> bool {
        matches!(self, FdMap::Lambda2 | FdMap::LogShifted2 { .. })
    }
}

fn check_steps(steps: &[f64]) -> Result<()> {
    if steps.len() < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 steps, got {}", steps.len())));
    }
    if steps.iter().any(|&t| !(t > 0.0 && t.is_finite())) || steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("steps must be positive and strictly decreasing".into()));
    }
    Ok(())
}

/// Compares the difference quotients `quotient(t)` with `exact` over
/// `steps`. `scale` is the size of the differenced values, used for the
/// roundoff floor.
pub fn fd_check<F>(name: &str, steps: &[f64], exact: &DMatrix<f64>, scale: f64, quotient: F) -> Result<ExperimentReport>
where
    F: Fn(f64) -> Result<DMatrix<f64>> + Sync,
{
    check_steps(steps)?;
    let errors: Vec<f64> = steps
        .par_iter()
        .map(|&t| Ok(spectral_norm(&(quotient(t)? - exact))))
        .collect::<Result<_>>()?;
    let floors: Vec<f64> = steps.iter().map(|t| FLOOR * f64::EPSILON * scale.max(1e-300) / t).collect();
    let used: Vec<bool> = errors.iter().zip(&floors).map(|(e, f)| e > f).collect();

    let mut report = ExperimentReport::new(format!("fd_check/{name}"));
    report.param("steps", steps).param("scale", scale);
    let mut table = Table::new("errors", &["step", "error", "roundoff_floor", "used"]);
    for i in 0..steps.len() {
        table.push(vec![steps[i], errors[i], floors[i], if used[i] { 1.0 } else { 0.0 }]);
    }
    report.tables.push(table);
    let points: Vec<[f64; 2]> = steps.iter().zip(&errors).map(|(&t, &e)| [t, e]).collect();
    report.curves.push(Curve::new("step_error", "step", "error", points));

    let (x, y): (Vec<f64>, Vec<f64>) = steps
        .iter()
        .zip(&errors)
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|((&t, &e), _)| (t, e))
        .unzip();
    let max_error = errors.iter().cloned().fold(0.0, f64::max);
    if x.len() < 3 {
        return Err(Error::DegenerateFit { max_error });
    }
    let fit = loglog_fit("error_vs_step", &x, &y)?;
    report.gate(Gate::within("slope", fit.slope, FD_SLOPE.0, FD_SLOPE.1));
    report.curves.push(Curve::from_fit(&fit, "step", &x));
    report.fits.push(fit);
    Ok(report)
}

/// Finite-difference check of one derivative of the ND map family at
/// `base` along `eta` (and `xi` for second derivatives).
pub fn fd_derivative_check(
    space: &FemSpace<f64>,
    basis: &BoundaryBasis<f64>,
    base: &ConductivityField<f64>,
    eta: &ConductivityField<f64>,
    xi: Option<&ConductivityField<f64>>,
    map: FdMap,
    steps: &[f64],
) -> Result<ExperimentReport> {
    check_steps(steps)?;
    let xi = match (map.needs_second_direction(), xi) {
        (true, Some(x)) => x,
        (true, None) => return Err(Error::InvalidInput(format!("{} needs a second direction", map.label()))),
        (false, _) => eta,
    };
    if matches!(map, FdMap::LogMap) != (base.kind() == FieldKind::Log) {
        return Err(Error::InvalidInput("the log map is differenced at a log field, the others at σ".into()));
    }
    let shifted = |t: f64| base.axpy(t, xi);
    let model = ForwardModel::new(space, base, basis)?;
    let log_tau = |m: &DMatrix<f64>, tau: f64| -> Result<DMatrix<f64>> {
        Ok(positive_eigensystem(m)?.reconstruct(|l| (l + tau).ln()))
    };

    type Quotient<'a> = Box<dyn Fn(f64) -> Result<DMatrix<f64>> + Sync + 'a>;
    let (exact, scale, quotient): (DMatrix<f64>, f64, Quotient) = match map {
        FdMap::Lambda => {
            let exact = model.dlambda_matrix(eta)?;
            let scale = spectral_norm(model.nd().matrix());
            let q = move |t: f64| -> Result<DMatrix<f64>> {
                let p = nd_matrix(space, &shifted(t)?, basis)?;
                let m = nd_matrix(space, &shifted(-t)?, basis)?;
                Ok((p.matrix() - m.matrix()) / (2.0 * t))
            };
            (exact, scale, Box::new(q))
        }
        FdMap::Lambda2 => {
            let exact = model.dk_lambda_matrix(&[eta, xi])?;
            let scale = spectral_norm(&model.dlambda_matrix(eta)?);
            let q = move |t: f64| -> Result<DMatrix<f64>> {
                let p = ForwardModel::new(space, &shifted(t)?, basis)?.dlambda_matrix(eta)?;
                let m = ForwardModel::new(space, &shifted(-t)?, basis)?.dlambda_matrix(eta)?;
                Ok((p - m) / (2.0 * t))
            };
            (exact, scale, Box::new(q))
        }
        FdMap::LogShifted { tau } => {
            let exact = df_tau_spectral(&model, eta, tau)?.into_matrix();
            let scale = spectral_norm(&log_tau(model.nd().matrix(), tau)?);
            let q = move |t: f64| -> Result<DMatrix<f64>> {
                let p = log_tau(nd_matrix(space, &shifted(t)?, basis)?.matrix(), tau)?;
                let m = log_tau(nd_matrix(space, &shifted(-t)?, basis)?.matrix(), tau)?;
                Ok((p - m) / (2.0 * t))
            };
            (exact, scale, Box::new(q))
        }
        FdMap::LogShifted2 { tau } => {
            let exact = d2f_tau(&model, eta, xi, tau)?.into_matrix();
            let scale = spectral_norm(&df_tau_spectral(&model, eta, tau)?.into_matrix());
            let q = move |t: f64| -> Result<DMatrix<f64>> {
                let first = |s: f64| -> Result<DMatrix<f64>> {
                    let m = ForwardModel::new(space, &shifted(s)?, basis)?;
                    let e = positive_eigensystem(m.nd().matrix())?;
                    df_tau_eigen(&e, &m.dlambda_matrix(eta)?, tau)
                };
                Ok((first(t)? - first(-t)?) / (2.0 * t))
            };
            (exact, scale, Box::new(q))
        }
        FdMap::LogMap => {
            let exact = dl(&model, eta)?.into_matrix();
            let scale = spectral_norm(&log_tau(model.nd().matrix(), 0.0)?);
            let q = move |t: f64| -> Result<DMatrix<f64>> {
                let p = log_tau(nd_matrix(space, &shifted(t)?, basis)?.matrix(), 0.0)?;
                let m = log_tau(nd_matrix(space, &shifted(-t)?, basis)?.matrix(), 0.0)?;
                Ok((p - m) / (2.0 * t))
            };
            (exact, scale, Box::new(q))
        }
    };
    let mut report = fd_check(&map.label(), steps, &exact, scale, quotient)?;
    report.param("map", map).param("derivative_norm", spectral_norm(&exact)).param("value_norm", scale);
    Ok(report)
}
