//! Convergence of the shifted logarithm and its derivative as `τ → 0`.
//!
//! In the `(ε, -ε)` norm the logarithm difference behaves like
//! `sup_t t^{2ε} log(1 + τ/t)`, which is `τ^{2ε}·G(ε)` when `t` ranges over
//! all of `(0, ∞)` and `G(ε) = sup_u u^{-2ε} log(1 + u)`. A finite section
//! only offers `t ∈ {λ_k}`, so a shift is resolvable when the discrete
//! supremum reaches most of the continuum value; only such shifts enter the
//! rate fits.

use super::fit::loglog_fit;
use super::report::{Curve, ExperimentReport, Gate, Table};
use crate::calculus::{positive_eigensystem, EigenSystem};
use crate::derivative::df_tau_eigen;
use crate::error::{Error, Result};
use crate::sobolev::weighted_norm;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Fraction of the continuum supremum a resolvable shift must reach.
pub const RESOLVABLE_FRACTION: f64 = 0.9;
/// Slack below and above `2ε` for the logarithm-difference slope.
pub const LOG_SLOPE_SLACK: (f64, f64) = (0.1, 0.15);
/// Slack below `ε` for the derivative-difference slope.
pub const DERIVATIVE_SLOPE_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRateSettings {
    pub epsilon: f64,
    pub taus: Vec<f64>,
}

/// `G(ε) = sup_{u > 0} u^{-2ε} log(1 + u)`, by a dense logarithmic scan.
pub fn continuum_sup(epsilon: f64) -> f64 {
    let (lo, hi, n) = (-12.0f64, 12.0f64, 24_001);
    (0..n)
        .map(|i| {
            let u = 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64);
            u.powf(-2.0 * epsilon) * u.ln_1p()
        })
        .fold(0.0, f64::max)
}

/// Ratio of the discrete supremum `max_k λ_k^{2ε} log(1 + τ/λ_k)` to the
/// continuum value `τ^{2ε} G(ε)`.
pub fn resolvability(eigenvalues: &[f64], epsilon: f64, tau: f64, g: f64) -> f64 {
    let discrete = eigenvalues
        .iter()
        .map(|&l| l.powf(2.0 * epsilon) * (tau / l).ln_1p())
        .fold(0.0, f64::max);
    discrete / (tau.powf(2.0 * epsilon) * g)
}

/// `count` log-spaced shifts spanning `[λ_min, λ_max]`.
pub fn tau_window_grid(e: &EigenSystem<f64>, count: usize) -> Vec<f64> {
    let (a, b) = (e.lambda_min().ln(), e.lambda_max().ln());
    if count < 2 {
        return vec![e.lambda_min()];
    }
    (0..count)
        .map(|i| {
            let v = (a + (b - a) * i as f64 / (count - 1) as f64).exp();
            v.clamp(e.lambda_min(), e.lambda_max())
        })
        .collect()
}

/// Rates of `‖log Λ - log Λ_τ‖_{(ε,-ε)}` and of
/// `‖DF_0(η) - DF_τ(η)‖_{(ε,-ε)} / ‖η‖_∞` in `τ`. `lambda` is an ND matrix in
/// the trigonometric basis, `dlambda` its derivative along a direction with
/// sup norm `eta_sup`.
pub fn tau_rate_experiment(
    lambda: &DMatrix<f64>,
    dlambda: &DMatrix<f64>,
    eta_sup: f64,
    settings: &TauRateSettings,
) -> Result<ExperimentReport> {
    let eps = settings.epsilon;
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidInput(format!("ε = {eps} must lie in (0, 1/2]")));
    }
    if settings.taus.is_empty() || !(eta_sup > 0.0) {
        return Err(Error::InvalidInput("need shifts and a nonzero direction".into()));
    }
    let e = positive_eigensystem(lambda)?;
    let (lmin, lmax) = (e.lambda_min(), e.lambda_max());
    let window_tol = 1e-12 * lmax;
    let mut taus = settings.taus.clone();
    taus.sort_by(f64::total_cmp);
    if let Some(&t) = taus.iter().find(|&&t| !(t >= lmin - window_tol && t <= lmax + window_tol)) {
        return Err(Error::Plateau(format!(
            "shift {t:e} lies outside the resolvable window [{lmin:e}, {lmax:e}]"
        )));
    }

    let g = continuum_sup(eps);
    let eigen: Vec<f64> = e.values().iter().cloned().collect();
    let df0 = df_tau_eigen(&e, dlambda, 0.0)?;
    let log0 = e.reconstruct(|l| l.ln());
    let mut table = Table::new(
        "tau_rate",
        &["tau", "log_difference", "derivative_difference", "resolvability", "used"],
    );
    let (mut fit_tau, mut fit_log, mut fit_der) = (Vec::new(), Vec::new(), Vec::new());
    for &tau in &taus {
        let log_tau = e.reconstruct(|l| (l + tau).ln());
        let log_diff = weighted_norm(&(&log_tau - &log0), eps, -eps, true);
        let der = df_tau_eigen(&e, dlambda, tau)?;
        let der_diff = weighted_norm(&(&df0 - &der), eps, -eps, true) / eta_sup;
        let res = resolvability(&eigen, eps, tau, g);
        let used = res >= RESOLVABLE_FRACTION;
        if used {
            fit_tau.push(tau);
            fit_log.push(log_diff);
            fit_der.push(der_diff);
        }
        table.push(vec![tau, log_diff, der_diff, res, if used { 1.0 } else { 0.0 }]);
    }
    if fit_tau.len() < 3 {
        return Err(Error::Plateau(format!(
            "only {} of {} shifts are resolvable at ε = {eps}",
            fit_tau.len(),
            taus.len()
        )));
    }

    let mut report = ExperimentReport::new("tau_rate");
    report
        .param("epsilon", eps)
        .param("taus", &taus)
        .param("dim", e.dim())
        .param("lambda_min", lmin)
        .param("lambda_max", lmax)
        .param("continuum_sup", g);
    let log_fit = loglog_fit("log_difference", &fit_tau, &fit_log)?;
    let der_fit = loglog_fit("derivative_difference", &fit_tau, &fit_der)?;
    report.gate(Gate::within(
        "log_difference_slope",
        log_fit.slope,
        2.0 * eps - LOG_SLOPE_SLACK.0,
        2.0 * eps + LOG_SLOPE_SLACK.1,
    ));
    report.gate(Gate::at_least(
        "derivative_difference_slope",
        der_fit.slope,
        eps - DERIVATIVE_SLOPE_SLACK,
    ));
    let logs = table.column("log_difference").unwrap_or_default();
    report.gate(Gate::holds(
        "log_difference_increasing",
        logs.windows(2).all(|w| w[1] >= w[0]) && logs.iter().all(|v| v.is_finite()),
    ));
    let points = |ys: &[f64]| taus.iter().zip(ys).map(|(&t, &y)| [t, y]).collect::<Vec<_>>();
    report.curves.push(Curve::new("log_difference", "tau", "norm", points(&logs)));
    let ders = table.column("derivative_difference").unwrap_or_default();
    report.curves.push(Curve::new("derivative_difference", "tau", "norm", points(&ders)));
    report.curves.push(Curve::from_fit(&log_fit, "tau", &fit_tau));
    report.curves.push(Curve::from_fit(&der_fit, "tau", &fit_tau));
    report.fits.push(log_fit);
    report.fits.push(der_fit);
    report.tables.push(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nd::analytic_nd_constant_order;

    #[test]
    fn continuum_sup_values() {
        assert!((continuum_sup(0.5) - 1.0).abs() < 1e-6);
        // ε = 1/4: sup log(1+u)/√u, attained near u ≈ 3.92.
        let g = continuum_sup(0.25);
        let direct = (1..200_000).map(|i| i as f64 * 1e-4).map(|u| u.ln_1p() / u.sqrt()).fold(0.0, f64::max);
        assert!((g - direct).abs() < 1e-6);
    }

    #[test]
    fn shifted_log_difference_spectrum() {
        let a = analytic_nd_constant_order(1.0f64, 6).unwrap();
        let e = positive_eigensystem(a.matrix()).unwrap();
        let tau = 0.3f64;
        let d = e.reconstruct(|l| (l + tau).ln()) - e.reconstruct(|l| l.ln());
        for k in 0..e.dim() {
            let l = a.matrix()[(k, k)];
            assert!((d[(k, k)] - (tau / l).ln_1p()).abs() < 1e-14);
        }
    }

    #[test]
    fn disk_rates() {
        let a = analytic_nd_constant_order(1.0, 128).unwrap();
        let d = -a.matrix();
        let e = positive_eigensystem(a.matrix()).unwrap();
        for eps in [0.1, 0.25, 0.5] {
            let s = TauRateSettings {
                epsilon: eps,
                taus: tau_window_grid(&e, 25),
            };
            let r = tau_rate_experiment(a.matrix(), &d, 1.0, &s).unwrap();
            assert!(r.passed(), "{}", r.summary());
        }
    }

    #[test]
    fn plateau_guard() {
        let a = analytic_nd_constant_order(1.0, 8).unwrap();
        let s = TauRateSettings {
            epsilon: 0.25,
            taus: vec![0.01, 0.2, 0.5],
        };
        assert!(matches!(
            tau_rate_experiment(a.matrix(), &(-a.matrix()), 1.0, &s),
            Err(Error::Plateau(_))
        ));
    }
}
