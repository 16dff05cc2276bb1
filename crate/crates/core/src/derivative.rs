//! Fréchet derivatives of the ND map and of its (shifted) logarithm.
//!
//! `F_τ(σ) = log(Λ(σ) + τI)`. Its first derivative along `η` is
//! `∫₀^∞ R_s DΛ(η) R_s ds` with `R_s = (Λ + (τ + s)I)⁻¹`, which in the
//! eigenbasis of `Λ` is the entrywise product with the divided-difference
//! table of `log`. The second derivative adds the two triple-resolvent
//! terms, whose kernels are second divided differences.

use crate::calculus::{positive_eigensystem, EigenSystem};
use crate::conductivity::ConductivityField;
use crate::divided::{log_dd2, shifted_spectrum, DividedDifferenceTable};
use crate::error::{Error, Result};
use crate::fem::ForwardModel;
use crate::quadrature::{integrate_half_line, QuadOptions};
use crate::scalar::Real;
use crate::sobolev::{symmetrize, Signature, SobolevOperator};
use nalgebra::DMatrix;

/// Highest derivative order of the ND map that is evaluated.
pub const MAX_ORDER: usize = 3;

fn nd_signature<T: Real>() -> Signature<T> {
    Signature::fixed(T::lit(-0.5), T::lit(0.5))
}

/// `DΛ(σ; η)`: entries `-∫ η ∇u_j·∇u_k`.
pub fn dlambda<T: Real>(model: &ForwardModel<'_, T>, eta: &ConductivityField<T>) -> Result<SobolevOperator<T>> {
    SobolevOperator::symmetric(model.dlambda_matrix(eta)?, nd_signature())
}

/// Base point, directions and shift of a derivative evaluation.
#[derive(Debug, Clone)]
pub struct DerivativeRequest<T> {
    pub directions: Vec<ConductivityField<T>>,
    pub tau: T,
}

impl<T: Real> DerivativeRequest<T> {
    pub fn new(directions: Vec<ConductivityField<T>>, tau: T) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidInput("a derivative needs at least one direction".into()));
        }
        if directions.len() > MAX_ORDER {
            return Err(Error::OrderCap(directions.len()));
        }
        if !(tau >= T::zero()) {
            return Err(Error::Domain(format!("shift τ = {:e} must be nonnegative", tau)));
        }
        Ok(DerivativeRequest { directions, tau })
    }

    pub fn order(&self) -> usize {
        self.directions.len()
    }
}

/// `D^kΛ(σ; η_1, …, η_k)` by the permutation formula.
pub fn dk_lambda<T: Real>(model: &ForwardModel<'_, T>, request: &DerivativeRequest<T>) -> Result<SobolevOperator<T>> {
    let dirs: Vec<&ConductivityField<T>> = request.directions.iter().collect();
    SobolevOperator::symmetric(model.dk_lambda_matrix(&dirs)?, nd_signature())
}

/// `Φ (C ⊙ Φᵀ D Φ) Φᵀ`, the derivative of `log(A + τI)` along `D`.
pub fn df_tau_eigen<T: Real>(e: &EigenSystem<T>, d: &DMatrix<T>, tau: T) -> Result<DMatrix<T>> {
    let table = DividedDifferenceTable::new(e, tau)?;
    let inner = e.to_eigenbasis(d).component_mul(table.table());
    Ok(symmetrize(&e.from_eigenbasis(&inner)))
}

/// Second derivative of `log(A + τI)` given `H = D²A(η, ξ)`, `B = DA(η)`,
/// `C = DA(ξ)`.
pub fn d2f_tau_eigen<T: Real>(
    e: &EigenSystem<T>,
    h: &DMatrix<T>,
    b: &DMatrix<T>,
    c: &DMatrix<T>,
    tau: T,
) -> Result<DMatrix<T>> {
    let mu = shifted_spectrum(e, tau)?;
    let table = DividedDifferenceTable::new(e, tau)?;
    let hh = e.to_eigenbasis(h);
    let bb = e.to_eigenbasis(b);
    let cc = e.to_eigenbasis(c);
    let n = mu.len();
    let mut out = hh.component_mul(table.table());
    for j in 0..n {
        for k in j..n {
            let mut acc = T::zero();
            for m in 0..n {
                acc += log_dd2(mu[j], mu[m], mu[k]) * (bb[(j, m)] * cc[(m, k)] + cc[(j, m)] * bb[(m, k)]);
            }
            out[(j, k)] += acc;
            if k != j {
                out[(k, j)] += acc;
            }
        }
    }
    Ok(symmetrize(&e.from_eigenbasis(&out)))
}

/// `DF_τ(σ; η)` from the eigenbasis representation.
pub fn df_tau_spectral<T: Real>(
    model: &ForwardModel<'_, T>,
    eta: &ConductivityField<T>,
    tau: T,
) -> Result<SobolevOperator<T>> {
    let e = positive_eigensystem(model.nd().matrix())?;
    let d = model.dlambda_matrix(eta)?;
    SobolevOperator::symmetric(df_tau_eigen(&e, &d, tau)?, Signature::l2())
}

/// `∫₀^∞ R_s D R_s ds` by adaptive quadrature.
pub fn df_tau_quadrature_matrix<T: Real>(
    a: &DMatrix<T>,
    d: &DMatrix<T>,
    tau: T,
    opts: QuadOptions<T>,
) -> Result<DMatrix<T>> {
    let scale = substitution_scale(a, tau)?;
    let q = integrate_half_line(
        |s| {
            let r = resolvent(a, tau + s)?;
            Ok(&r * d * &r)
        },
        scale,
        opts,
    )?;
    Ok(symmetrize(&q.value))
}

/// Triple-resolvent integral for the second derivative.
pub fn d2f_tau_quadrature_matrix<T: Real>(
    a: &DMatrix<T>,
    h: &DMatrix<T>,
    b: &DMatrix<T>,
    c: &DMatrix<T>,
    tau: T,
    opts: QuadOptions<T>,
) -> Result<DMatrix<T>> {
    let scale = substitution_scale(a, tau)?;
    let q = integrate_half_line(
        |s| {
            let r = resolvent(a, tau + s)?;
            let rb = &r * b;
            let rc = &r * c;
            Ok(&r * h * &r - &rb * &rc * &r - &rc * &rb * &r)
        },
        scale,
        opts,
    )?;
    Ok(symmetrize(&q.value))
}

/// `DF_τ(σ; η)` by quadrature of the resolvent integral.
pub fn df_tau_quadrature<T: Real>(
    model: &ForwardModel<'_, T>,
    eta: &ConductivityField<T>,
    tau: T,
    opts: QuadOptions<T>,
) -> Result<SobolevOperator<T>> {
    let d = model.dlambda_matrix(eta)?;
    SobolevOperator::symmetric(
        df_tau_quadrature_matrix(model.nd().matrix(), &d, tau, opts)?,
        Signature::l2(),
    )
}

/// `DL(κ; η) = DF_0(e^κ; η e^κ)`. The model must be built at `σ = e^κ`.
pub fn dl<T: Real>(model: &ForwardModel<'_, T>, eta: &ConductivityField<T>) -> Result<SobolevOperator<T>> {
    let direction = eta.mul(model.sigma())?;
    df_tau_spectral(model, &direction, T::zero())
}

/// `D²F_τ(σ; η, ξ)` in closed form.
pub fn d2f_tau<T: Real>(
    model: &ForwardModel<'_, T>,
    eta: &ConductivityField<T>,
    xi: &ConductivityField<T>,
    tau: T,
) -> Result<SobolevOperator<T>> {
    let e = positive_eigensystem(model.nd().matrix())?;
    let h = model.dk_lambda_matrix(&[eta, xi])?;
    let b = model.dlambda_matrix(eta)?;
    let c = model.dlambda_matrix(xi)?;
    SobolevOperator::symmetric(d2f_tau_eigen(&e, &h, &b, &c, tau)?, Signature::l2())
}

/// `D²F_τ(σ; η, ξ)` by quadrature of the three resolvent integrals.
pub fn d2f_tau_quadrature<T: Real>(
    model: &ForwardModel<'_, T>,
    eta: &ConductivityField<T>,
    xi: &ConductivityField<T>,
    tau: T,
    opts: QuadOptions<T>,
) -> Result<SobolevOperator<T>> {
    let h = model.dk_lambda_matrix(&[eta, xi])?;
    let b = model.dlambda_matrix(eta)?;
    let c = model.dlambda_matrix(xi)?;
    SobolevOperator::symmetric(
        d2f_tau_quadrature_matrix(model.nd().matrix(), &h, &b, &c, tau, opts)?,
        Signature::l2(),
    )
}

/// Geometric mean of the extreme eigenvalues plus the shift.
fn substitution_scale<T: Real>(a: &DMatrix<T>, tau: T) -> Result<T> {
    let e = positive_eigensystem(a)?;
    if !(tau >= T::zero()) {
        return Err(Error::Domain(format!("shift τ = {:e} must be nonnegative", tau)));
    }
    Ok((e.lambda_max() * e.lambda_min()).sqrt() + tau)
}

fn resolvent<T: Real>(a: &DMatrix<T>, shift: T) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let shifted = a + DMatrix::identity(n, n) * shift;
    shifted
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::SingularSystem {
            pivot: 0,
            reason: format!("A + {:e} I is not positive definite", shift),
        })
}
