//! Survey of the σ-dependent norms `‖f‖²_{r,σ} = ⟨Λ(σ)^{-2r} f, f⟩`.
//!
//! For `ς₋ ≤ σ ≤ ς₊` monotonicity and operator monotonicity of `t^p`,
//! `p ∈ [0, 1]`, sandwich `‖f‖_{r,σ}` between the norms of the two constant
//! bounds. The equivalence constant against the Fourier `H^r` norm is the
//! extreme singular value of `Λ(σ)^{-r} D_r^{-1}`, with `D_r` the diagonal
//! Fourier weights.

use super::ensemble::ConductivityEnsemble;
use super::report::{ExperimentReport, Gate, Table};
use crate::basis::BoundaryBasis;
use crate::calculus::{positive_eigensystem, sigma_norm_coeffs, EigenSystem};
use crate::conductivity::ConductivityField;
use crate::error::{Error, Result};
use crate::fem::{nd_matrix, FemSpace};
use crate::nd::NdMatrix;
use crate::sobolev::fourier_weights;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Relative tolerance of the sandwich inequalities.
pub const SANDWICH_TOL: f64 = 1e-9;
/// Largest accepted relative drift of the worst equivalence constant.
pub const EQUIVALENCE_DRIFT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSurveySettings {
    /// Sobolev indices in `[-1/2, 1/2]`.
    pub r: Vec<f64>,
    /// Smaller basis order; the survey also runs at twice this order.
    pub max_frequency: usize,
    pub test_vectors: usize,
    pub vector_seed: u64,
}

/// `max(s_max, 1/s_min)` for the singular values of `Λ^{-r} D_r^{-1}`.
pub fn equivalence_constant(e: &EigenSystem<f64>, r: f64) -> f64 {
    let w = fourier_weights::<f64>(e.dim(), r);
    let mut m = e.reconstruct(|l| l.powf(-r));
    for j in 0..m.ncols() {
        m.column_mut(j).unscale_mut(w[j]);
    }
    let s = m.singular_values();
    let (smin, smax) = s.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    smax.max(1.0 / smin)
}

struct SampleResult {
    /// Smallest relative slack of the two sandwich sides, per `r`.
    slack: Vec<f64>,
    /// Equivalence constant per `r`, at the small and doubled order.
    constants: Vec<[f64; 2]>,
}

fn survey_sample(
    a: &NdMatrix<f64>,
    bounds: [&NdMatrix<f64>; 2],
    settings: &NormSurveySettings,
    vectors: &DMatrix<f64>,
) -> Result<SampleResult> {
    let n = settings.max_frequency;
    let e_small = positive_eigensystem(a.truncate(n)?.matrix())?;
    let e = positive_eigensystem(a.matrix())?;
    let e_lower = positive_eigensystem(bounds[0].matrix())?;
    let e_upper = positive_eigensystem(bounds[1].matrix())?;
    let mut slack = Vec::new();
    let mut constants = Vec::new();
    for &r in &settings.r {
        let mut worst = f64::INFINITY;
        for f in vectors.column_iter() {
            let f = f.into_owned();
            let ns = sigma_norm_coeffs(&f, r, &e);
            let (nl, nu) = (sigma_norm_coeffs(&f, r, &e_lower), sigma_norm_coeffs(&f, r, &e_upper));
            // r ≤ 0: ‖f‖_{r,ς₊} ≤ ‖f‖_{r,σ} ≤ ‖f‖_{r,ς₋}; reversed for r ≥ 0.
            let (lo, hi) = if r <= 0.0 { (nu, nl) } else { (nl, nu) };
            worst = worst.min((ns - lo) / ns).min((hi - ns) / ns);
        }
        slack.push(worst);
        constants.push([equivalence_constant(&e_small, r), equivalence_constant(&e, r)]);
    }
    Ok(SampleResult { slack, constants })
}

/// Runs the survey over `ensemble` and over its resampled copy (seed + 1).
pub fn norm_equivalence_survey(
    space: &FemSpace<f64>,
    basis: &BoundaryBasis<f64>,
    ensemble: &ConductivityEnsemble,
    settings: &NormSurveySettings,
) -> Result<ExperimentReport> {
    let n = settings.max_frequency;
    if basis.max_frequency() != 2 * n {
        return Err(Error::InvalidInput(format!(
            "the survey basis must have order {} (twice {n})",
            2 * n
        )));
    }
    if settings.r.is_empty() || settings.r.iter().any(|r| !(-0.5..=0.5).contains(r)) {
        return Err(Error::InvalidInput("Sobolev indices must lie in [-1/2, 1/2]".into()));
    }
    if settings.test_vectors == 0 {
        return Err(Error::InvalidInput("the sandwich needs test vectors".into()));
    }
    ensemble.validate()?;
    let mesh = space.mesh();
    let unit = nd_matrix(space, &ConductivityField::constant(mesh, 1.0), basis)?;
    let scaled = |c: f64| NdMatrix::new(unit.matrix() / c, format!("const:{c}"));
    let bounds = [scaled(ensemble.lower)?, scaled(ensemble.upper)?];
    let vectors = super::ensemble::random_vectors(basis.dim(), settings.test_vectors, settings.vector_seed);

    let resampled = ConductivityEnsemble {
        seed: ensemble.seed.wrapping_add(1),
        ..ensemble.clone()
    };
    let mut results = Vec::new();
    for ens in [ensemble, &resampled] {
        let samples = ens.generate(mesh);
        let r: Vec<SampleResult> = samples
            .par_iter()
            .map(|s| survey_sample(&nd_matrix(space, s, basis)?, [&bounds[0], &bounds[1]], settings, &vectors))
            .collect::<Result<_>>()?;
        results.push(r);
    }

    let mut report = ExperimentReport::new("norm_equivalence");
    report
        .param("r", &settings.r)
        .param("N", [n, 2 * n])
        .param("ensemble", ensemble)
        .param("test_vectors", settings.test_vectors);
    let mut table = Table::new(
        "norm_equivalence",
        &["r", "min_sandwich_slack", "worst_constant_N", "worst_constant_2N", "worst_constant_resampled", "n_drift", "resample_drift"],
    );
    let (mut min_slack, mut max_n_drift, mut max_resample_drift) = (f64::INFINITY, 0.0f64, 0.0f64);
    for (k, &r) in settings.r.iter().enumerate() {
        let worst = |set: &[SampleResult], i: usize| set.iter().map(|s| s.constants[k][i]).fold(0.0, f64::max);
        let slack = results.iter().flatten().map(|s| s.slack[k]).fold(f64::INFINITY, f64::min);
        let (c_n, c_2n, c_re) = (worst(&results[0], 0), worst(&results[0], 1), worst(&results[1], 1));
        let n_drift = (c_2n - c_n).abs() / c_n;
        let re_drift = (c_re - c_2n).abs() / c_2n;
        min_slack = min_slack.min(slack);
        max_n_drift = max_n_drift.max(n_drift);
        max_resample_drift = max_resample_drift.max(re_drift);
        table.push(vec![r, slack, c_n, c_2n, c_re, n_drift, re_drift]);
    }
    report.tables.push(table);
    report.gate(Gate::at_least("min_sandwich_slack", min_slack, -SANDWICH_TOL));
    report.gate(Gate::at_most("n_doubling_drift", max_n_drift, EQUIVALENCE_DRIFT));
    report.gate(Gate::at_most("resample_drift", max_resample_drift, EQUIVALENCE_DRIFT));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nd::analytic_nd_constant_order;

    #[test]
    fn disk_equivalence_constant() {
        // λ_n = 1/n: the ratio of the two norms on the n-th mode is
        // (n²/(1+n²))^{r/2}, extreme at n = 1.
        let e = positive_eigensystem(analytic_nd_constant_order(1.0, 10).unwrap().matrix()).unwrap();
        for r in [-0.5f64, -0.25, 0.25, 0.5] {
            let expected = 0.5f64.powf(-r.abs() / 2.0);
            assert!((equivalence_constant(&e, r) - expected).abs() < 1e-12, "r = {r}");
        }
        assert!((equivalence_constant(&e, 0.0) - 1.0).abs() < 1e-12);
    }
}
