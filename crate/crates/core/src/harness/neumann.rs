//! Analyticity of the ND map: partial sums of
//! `Λ(σ+η) = Σ_k D^kΛ(σ; η, …, η)/k!` against the exact perturbed map.
//!
//! The series is the Neumann series of the perturbation operator
//! `P(σ, η) = -K_σ⁻¹K_η`, whose norm in the σ-energy inner product governs
//! the decay of the remainders.

use super::ensemble::sample_rng;
use super::report::{Curve, ExperimentReport, Gate, Table};
use crate::basis::BoundaryBasis;
use crate::conductivity::ConductivityField;
use crate::error::{Error, Result};
use crate::fem::{nd_matrix, FemSpace, ForwardModel, ForwardSolver};
use crate::sobolev::spectral_norm_symmetric;
use rand::Rng;

/// Highest order of the partial sums.
pub const SERIES_ORDER: usize = 3;
/// Accepted relative deviation of the remainder ratio from `‖P‖`.
pub const RATIO_TOLERANCE: f64 = 0.25;

/// Power iteration for `‖P(σ, η)‖` in the energy inner product of `σ`, in
/// which `P` is self-adjoint.
pub fn perturbation_norm(solver: &ForwardSolver<'_, f64>, eta: &ConductivityField<f64>, seed: u64) -> Result<f64> {
    let space = solver.space();
    space.check_field(eta)?;
    let sigma = solver.sigma();
    let mut rng = sample_rng(seed, 0);
    let mut v: Vec<f64> = (0..space.n_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let energy = |u: &[f64]| space.energy_product(sigma, u, u);
    let e0 = energy(&v);
    if !(e0 > 0.0) {
        return Err(Error::Convergence("degenerate power-iteration start".into()));
    }
    v.iter_mut().for_each(|x| *x /= e0.sqrt());
    let mut estimate = 0.0;
    for _ in 0..500 {
        let w = solver.perturb_nodal(eta, &v);
        let norm = energy(&w).sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let change = (norm - estimate).abs();
        estimate = norm;
        v = w.into_iter().map(|x| x / norm).collect();
        if change <= 1e-10 * norm {
            break;
        }
    }
    Ok(estimate)
}

pub fn neumann_series_check(
    space: &FemSpace<f64>,
    basis: &BoundaryBasis<f64>,
    sigma: &ConductivityField<f64>,
    eta: &ConductivityField<f64>,
    seed: u64,
) -> Result<ExperimentReport> {
    let model = ForwardModel::new(space, sigma, basis)?;
    let p_norm = perturbation_norm(model.solver(), eta, seed)?;
    if p_norm >= 1.0 {
        return Err(Error::Contraction(p_norm));
    }
    let target = nd_matrix(space, &model.sigma().axpy(1.0, eta)?, basis)?;
    let mut partial = model.nd().matrix().clone();
    let mut remainders = vec![spectral_norm_symmetric(&(target.matrix() - &partial))];
    let mut factorial = 1.0;
    for k in 1..=SERIES_ORDER {
        factorial *= k as f64;
        let dirs: Vec<&ConductivityField<f64>> = vec![eta; k];
        partial += model.dk_lambda_matrix(&dirs)? / factorial;
        remainders.push(spectral_norm_symmetric(&(target.matrix() - &partial)));
    }

    let mut report = ExperimentReport::new("neumann_series");
    report
        .param("sigma", sigma.hash_hex())
        .param("eta", eta.hash_hex())
        .param("perturbation_norm", p_norm)
        .param("eta_over_sigma_sup", eta.zip_with(model.sigma(), |e, s| e / s)?.sup_norm());
    let mut table = Table::new("remainders", &["order", "remainder"]);
    for (k, r) in remainders.iter().enumerate() {
        table.push(vec![k as f64, *r]);
    }
    report.curves.push(Curve::new(
        "remainder",
        "order",
        "remainder",
        remainders.iter().enumerate().map(|(k, &r)| [k as f64, r]).collect(),
    ));
    report.tables.push(table);
    report.gate(Gate::at_most("perturbation_norm", p_norm, 1.0));
    if remainders[0] == 0.0 {
        report.gate(Gate::holds("zeroth_sum_exact", true));
        return Ok(report);
    }
    let geometric = (remainders[SERIES_ORDER] / remainders[0]).powf(1.0 / SERIES_ORDER as f64);
    report.param("contraction_ratio", geometric);
    report.gate(Gate::holds(
        "remainders_decrease",
        remainders.windows(2).all(|w| w[1] < w[0]),
    ));
    report.gate(Gate::within(
        "ratio_over_perturbation_norm",
        geometric / p_norm,
        1.0 - RATIO_TOLERANCE,
        1.0 + RATIO_TOLERANCE,
    ));
    Ok(report)
}

/// Direction `t·σ·(1 + δ·g)` for a bounded `g`, a contractive perturbation
/// close to proportional to `σ`.
pub fn near_proportional_direction(
    sigma: &ConductivityField<f64>,
    wobble: &ConductivityField<f64>,
    t: f64,
    delta: f64,
) -> Result<ConductivityField<f64>> {
    let g_sup = wobble.sup_norm().max(f64::MIN_POSITIVE);
    sigma.conductivity().zip_with(wobble, |s, g| t * s * (1.0 + delta * g / g_sup))
}
