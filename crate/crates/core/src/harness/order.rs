//! Order inequalities between ND maps of ordered conductivities.
//!
//! For `σ₁ ≤ σ₂` the ND maps reverse the order, `Λ(σ₂) ≤ Λ(σ₁)`. Because
//! `t ↦ t^p` is operator monotone for `p ∈ [0, 1]` and `t ↦ t^{-p}` reverses
//! order, this gives `Λ(σ₂)^{2r} ≤ Λ(σ₁)^{2r}` and
//! `Λ(σ₁)^{-2r} ≤ Λ(σ₂)^{-2r}` for `r ∈ [0, 1/2]`.

use super::report::{ExperimentReport, Gate, Table};
use crate::calculus::{positive_eigensystem, EigenSystem};
use crate::conductivity::ConductivityField;
use crate::error::{Error, Result};
use crate::nd::NdMatrix;
use nalgebra::DMatrix;

/// Absolute tolerance of the monotonicity forms relative to `‖x‖²`.
pub const MONOTONICITY_TOL: f64 = 1e-10;
/// Relative tolerance of the fractional-power forms.
pub const LOEWNER_HEINZ_TOL: f64 = 1e-9;

/// An ordered pair `σ₁ ≤ σ₂` with its ND matrices.
pub struct OrderedPair<'a> {
    pub sigma1: &'a ConductivityField<f64>,
    pub sigma2: &'a ConductivityField<f64>,
    pub lambda1: &'a NdMatrix<f64>,
    pub lambda2: &'a NdMatrix<f64>,
}

impl OrderedPair<'_> {
    fn check(&self) -> Result<()> {
        let (s1, s2) = (self.sigma1.conductivity(), self.sigma2.conductivity());
        if !s1.dominated_by(&s2) {
            let worst = s1.sub(&s2)?.max();
            return Err(Error::InputOrder(format!("σ₁ exceeds σ₂ by up to {worst:e}")));
        }
        if self.lambda1.dim() != self.lambda2.dim() {
            return Err(Error::Dimension("ND matrices of different sizes".into()));
        }
        Ok(())
    }
}

fn quadratic_forms(m: &DMatrix<f64>, x: &DMatrix<f64>) -> Vec<f64> {
    let mx = m * x;
    (0..x.ncols()).map(|j| x.column(j).dot(&mx.column(j))).collect()
}

/// `min_x xᵀ(Λ(σ₁) - Λ(σ₂))x / ‖x‖²` over the columns of `vectors`.
pub fn monotonicity_check(pair: &OrderedPair<'_>, vectors: &DMatrix<f64>) -> Result<ExperimentReport> {
    pair.check()?;
    let d = pair.lambda1.matrix() - pair.lambda2.matrix();
    let forms = quadratic_forms(&d, vectors);
    let worst = forms
        .iter()
        .enumerate()
        .map(|(j, f)| f / vectors.column(j).norm_squared())
        .fold(f64::INFINITY, f64::min);
    let mut report = ExperimentReport::new("monotonicity");
    report.param("vectors", vectors.ncols()).param("dim", d.nrows());
    report.gate(Gate::at_least("min_normalized_form", worst, -MONOTONICITY_TOL));
    Ok(report)
}

/// Smallest relative slack `(q_big - q_small)/max(q_big, q_small)` over the
/// vectors.
fn min_relative_slack(small: &DMatrix<f64>, big: &DMatrix<f64>, vectors: &DMatrix<f64>) -> f64 {
    let (qs, qb) = (quadratic_forms(small, vectors), quadratic_forms(big, vectors));
    qs.iter()
        .zip(&qb)
        .map(|(s, b)| {
            let scale = s.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (b - s) / scale
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn powers(e: &EigenSystem<f64>, r: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    (e.reconstruct(|l| l.powf(2.0 * r)), e.reconstruct(|l| l.powf(-2.0 * r)))
}

/// Both fractional-power inequalities for `r ∈ [0, 1/2]`.
pub fn loewner_heinz_check(pair: &OrderedPair<'_>, r: f64, vectors: &DMatrix<f64>) -> Result<ExperimentReport> {
    pair.check()?;
    if !(0.0..=0.5).contains(&r) {
        return Err(Error::InvalidInput(format!("r = {r} must lie in [0, 1/2]")));
    }
    let (p1, m1) = powers(&positive_eigensystem(pair.lambda1.matrix())?, r);
    let (p2, m2) = powers(&positive_eigensystem(pair.lambda2.matrix())?, r);
    // Λ(σ₂)^{2r} ≤ Λ(σ₁)^{2r} and Λ(σ₁)^{-2r} ≤ Λ(σ₂)^{-2r}.
    let forward = min_relative_slack(&p2, &p1, vectors);
    let inverse = min_relative_slack(&m1, &m2, vectors);
    let mut report = ExperimentReport::new("loewner_heinz");
    report.param("r", r).param("vectors", vectors.ncols());
    let mut t = Table::new("slack", &["r", "forward_min_slack", "inverse_min_slack"]);
    t.push(vec![r, forward, inverse]);
    report.tables.push(t);
    report.gate(Gate::at_least("forward_min_slack", forward, -LOEWNER_HEINZ_TOL));
    report.gate(Gate::at_least("inverse_min_slack", inverse, -LOEWNER_HEINZ_TOL));
    Ok(report)
}

/// Runs both checks over several pairs and exponents, one table row per
/// pair and exponent.
pub fn order_survey(pairs: &[OrderedPair<'_>], rs: &[f64], vectors: &DMatrix<f64>) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("order_inequalities");
    report.param("pairs", pairs.len()).param("r", rs).param("vectors", vectors.ncols());
    let mut table = Table::new(
        "order_inequalities",
        &["pair", "r", "monotonicity_min", "forward_min_slack", "inverse_min_slack"],
    );
    let (mut mono, mut fwd, mut inv) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for (i, pair) in pairs.iter().enumerate() {
        let m = monotonicity_check(pair, vectors)?.gates[0].value;
        mono = mono.min(m);
        for &r in rs {
            let lh = loewner_heinz_check(pair, r, vectors)?;
            let (f, v) = (lh.gates[0].value, lh.gates[1].value);
            fwd = fwd.min(f);
            inv = inv.min(v);
            table.push(vec![i as f64, r, m, f, v]);
        }
    }
    report.tables.push(table);
    report.gate(Gate::at_least("monotonicity_min", mono, -MONOTONICITY_TOL));
    report.gate(Gate::at_least("forward_min_slack", fwd, -LOEWNER_HEINZ_TOL));
    report.gate(Gate::at_least("inverse_min_slack", inv, -LOEWNER_HEINZ_TOL));
    Ok(report)
}
