//! Spectral decomposition of ND matrices and functions of them: logarithm,
//! shifted logarithm and fractional powers, plus the σ-dependent spectral
//! Sobolev norms.

use crate::basis::BoundaryVector;
use crate::error::{Error, Result};
use crate::nd::NdMatrix;
use crate::scalar::Real;
use crate::sobolev::{symmetrize, Signature, SobolevIndex, SobolevOperator};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem<T: Real> {
    values: DVector<T>,
    vectors: DMatrix<T>,
}

impl<T: Real> EigenSystem<T> {
    /// Decomposes a symmetric matrix without checking definiteness.
    pub fn of_symmetric(m: &DMatrix<T>) -> Self {
        let eig = SymmetricEigen::new(symmetrize(m));
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
        let mut vectors = DMatrix::zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(old).into_owned();
            // First component that is not negligible is made positive.
            let scale = col.amax();
            if let Some(c) = col.iter().find(|c| c.abs() > scale * T::lit(1e-8)) {
                if *c < T::zero() {
                    col.neg_mut();
                }
            }
            vectors.set_column(new, &col);
        }
        EigenSystem { values, vectors }
    }

    pub fn values(&self) -> &DVector<T> {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<T> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_max(&self) -> T {
        self.values[0]
    }

    pub fn lambda_min(&self) -> T {
        self.values[self.dim() - 1]
    }

    /// `Φ diag(g(λ)) Φᵀ`.
    pub fn reconstruct(&self, g: impl Fn(T) -> T) -> DMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(g(l));
        }
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    /// Coefficients `⟨f, φ_k⟩`.
    pub fn spectral_coefficients(&self, f: &DVector<T>) -> DVector<T> {
        self.vectors.tr_mul(f)
    }

    /// `Φᵀ M Φ`.
    pub fn to_eigenbasis(&self, m: &DMatrix<T>) -> DMatrix<T> {
        self.vectors.tr_mul(m) * &self.vectors
    }

    /// `Φ M Φᵀ`.
    pub fn from_eigenbasis(&self, m: &DMatrix<T>) -> DMatrix<T> {
        &self.vectors * m * self.vectors.transpose()
    }
}

/// Eigensystem of an ND matrix; fails if any eigenvalue is not positive.
pub fn eigensystem<T: Real>(a: &NdMatrix<T>) -> Result<EigenSystem<T>> {
    positive_eigensystem(a.matrix())
}

pub fn positive_eigensystem<T: Real>(m: &DMatrix<T>) -> Result<EigenSystem<T>> {
    let e = EigenSystem::of_symmetric(m);
    if e.dim() == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    if !(e.lambda_min() > T::zero()) {
        return Err(Error::Definiteness {
            min_eigenvalue: e.lambda_min().as_f64(),
        });
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralFunction<T> {
    /// `log λ`.
    Log,
    /// `log(λ + τ)`, `τ ≥ 0`.
    ShiftedLog { tau: T },
    /// `λ^{2r}` with `2r ∈ [-1, 1]`.
    Power { two_r: T },
}

impl<T: Real> SpectralFunction<T> {
    pub fn shifted_log(tau: T) -> Result<Self> {
        if !(tau >= T::zero()) || !tau.is_finite() {
            return Err(Error::Domain(format!("shift τ = {:e} must be nonnegative", tau)));
        }
        Ok(SpectralFunction::ShiftedLog { tau })
    }

    pub fn power(two_r: T) -> Result<Self> {
        if !(two_r.abs() <= T::one()) {
            return Err(Error::Domain(format!("power 2r = {:e} outside [-1, 1]", two_r)));
        }
        Ok(SpectralFunction::Power { two_r })
    }

    fn tau(&self) -> T {
        match *self {
            SpectralFunction::ShiftedLog { tau } => tau,
            _ => T::zero(),
        }
    }

    pub fn eval(&self, lambda: T) -> T {
        match *self {
            SpectralFunction::Log => lambda.ln(),
            SpectralFunction::ShiftedLog { tau } => (lambda + tau).ln(),
            SpectralFunction::Power { two_r } => lambda.powf(two_r),
        }
    }

    /// Mapping property of the resulting operator.
    pub fn signature(&self) -> Signature<T> {
        match *self {
            SpectralFunction::ShiftedLog { tau } if tau > T::zero() => Signature::l2(),
            SpectralFunction::Log | SpectralFunction::ShiftedLog { .. } => Signature::EpsilonShift,
            SpectralFunction::Power { two_r } => {
                let r = two_r * T::lit(0.5);
                Signature::fixed(-r, r)
            }
        }
    }
}

/// `Φ diag(g(λ_k)) Φᵀ` for the given spectral function.
pub fn apply_spectral_function<T: Real>(e: &EigenSystem<T>, f: SpectralFunction<T>) -> Result<SobolevOperator<T>> {
    let needs_positive = match f {
        SpectralFunction::Power { two_r } => two_r != T::zero(),
        _ => true,
    };
    if needs_positive && !(e.lambda_min() + f.tau() > T::zero()) {
        return Err(Error::Domain(format!(
            "spectral function undefined at eigenvalue {:e} with shift {:e}",
            e.lambda_min(),
            f.tau()
        )));
    }
    SobolevOperator::symmetric(e.reconstruct(|l| f.eval(l)), f.signature())
}

/// `‖f‖_{r,σ} = (Σ λ_k^{-2r} ⟨f, φ_k⟩²)^{1/2}`.
pub fn sigma_norm<T: Real>(f: &BoundaryVector<T>, r: SobolevIndex<T>, e: &EigenSystem<T>) -> T {
    sigma_norm_coeffs(f.coeffs(), r.value(), e)
}

pub fn sigma_norm_coeffs<T: Real>(f: &DVector<T>, r: T, e: &EigenSystem<T>) -> T {
    let c = e.spectral_coefficients(f);
    let minus_two_r = -(r + r);
    c.iter()
        .zip(e.values().iter())
        .fold(T::zero(), |acc, (&ck, &l)| acc + l.powf(minus_two_r) * ck * ck)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nd::analytic_nd_constant_order;
    use std::f64::consts::E;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    #[test]
    fn diagonal_eigensystem() {
        let e = positive_eigensystem(&diag(&[1.0, 2.0])).unwrap();
        assert_eq!(e.values().as_slice(), &[2.0, 1.0]);
        let p = e.vectors();
        assert!(max_abs(&(p.abs() - DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]))) < 1e-15);
        assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn two_by_two() {
        let e = positive_eigensystem(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((e.values()[0] - 3.0f64).abs() < 1e-14 && (e.values()[1] - 1.0f64).abs() < 1e-14);
        let s = 0.5f64.sqrt();
        assert!((e.vectors()[(0, 0)] - s).abs() < 1e-14 && (e.vectors()[(1, 0)] - s).abs() < 1e-14);
        assert!((e.vectors()[(0, 1)] - s).abs() < 1e-14 && (e.vectors()[(1, 1)] + s).abs() < 1e-14);
    }

    #[test]
    fn invariants_on_random_spd() {
        let b = DMatrix::from_fn(10, 10, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5);
        let a = &b * b.transpose() + DMatrix::identity(10, 10) * 0.1;
        let e = positive_eigensystem(&a).unwrap();
        let p = e.vectors();
        assert!(max_abs(&(p.transpose() * p - DMatrix::identity(10, 10))) < 1e-10);
        assert!(max_abs(&(e.reconstruct(|l| l) - &a)) < 1e-10 * a.norm());
        assert!(e.values().as_slice().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(matches!(
            positive_eigensystem(&diag(&[1.0, 0.0])),
            Err(Error::Definiteness { .. })
        ));
    }

    #[test]
    fn spectral_function_examples() {
        let e = positive_eigensystem(&diag(&[E, 1.0])).unwrap();
        let l = apply_spectral_function(&e, SpectralFunction::Log).unwrap();
        assert!(max_abs(&(l.matrix() - diag(&[1.0, 0.0]))) < 1e-15);
        assert_eq!(l.signature(), Signature::EpsilonShift);

        let e = positive_eigensystem(&diag(&[4.0, 1.0])).unwrap();
        let p = apply_spectral_function(&e, SpectralFunction::power(1.0).unwrap()).unwrap();
        assert!(max_abs(&(p.matrix() - diag(&[4.0, 1.0]))) < 1e-14);
        assert_eq!(p.signature(), Signature::fixed(-0.5, 0.5));
        let q = apply_spectral_function(&e, SpectralFunction::power(-1.0).unwrap()).unwrap();
        assert!(max_abs(&(q.matrix() - diag(&[0.25, 1.0]))) < 1e-15);

        let e = positive_eigensystem(&diag(&[1.0])).unwrap();
        let s = apply_spectral_function(&e, SpectralFunction::shifted_log(E - 1.0).unwrap()).unwrap();
        assert!((s.matrix()[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(s.signature(), Signature::l2());
    }

    #[test]
    fn spec_validation() {
        assert!(SpectralFunction::<f64>::shifted_log(-1e-3).is_err());
        assert!(SpectralFunction::<f64>::power(1.5).is_err());
        let e = EigenSystem::of_symmetric(&diag(&[1.0, -1.0]));
        assert!(matches!(
            apply_spectral_function(&e, SpectralFunction::Log),
            Err(Error::Domain(_))
        ));
        assert!(apply_spectral_function(&e, SpectralFunction::shifted_log(2.0).unwrap()).is_ok());
    }

    #[test]
    fn power_round_trip() {
        let b = DMatrix::from_fn(8, 8, |i, j| ((i + 2 * j) % 5) as f64 / 5.0);
        let a = &b * b.transpose() + DMatrix::identity(8, 8) * 0.05;
        let e = positive_eigensystem(&a).unwrap();
        for two_r in [-1.0, -0.5, 0.3, 1.0] {
            let p = apply_spectral_function(&e, SpectralFunction::power(two_r).unwrap()).unwrap();
            let q = apply_spectral_function(&e, SpectralFunction::power(-two_r).unwrap()).unwrap();
            assert!(max_abs(&(p.matrix() * q.matrix() - DMatrix::identity(8, 8))) < 1e-9);
        }
    }

    #[test]
    fn shifted_log_difference_eigenvalues() {
        let a = analytic_nd_constant_order(1.0, 4).unwrap();
        let e = eigensystem(&a).unwrap();
        let tau = 0.3f64;
        let l = apply_spectral_function(&e, SpectralFunction::Log).unwrap();
        let lt = apply_spectral_function(&e, SpectralFunction::shifted_log(tau).unwrap()).unwrap();
        let diff = EigenSystem::of_symmetric(&(lt.matrix() - l.matrix()));
        let mut expected: Vec<f64> = e.values().iter().map(|&l| (1.0 + tau / l).ln()).collect();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in diff.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn sigma_norm_examples() {
        let a = analytic_nd_constant_order(1.0, 4).unwrap();
        let e = eigensystem(&a).unwrap();
        let half = SobolevIndex::sigma(0.5).unwrap();
        let cos1 = BoundaryVector::new(DVector::from_fn(8, |i, _| if i == 0 { 1.0 } else { 0.0 })).unwrap();
        let cos2 = BoundaryVector::new(DVector::from_fn(8, |i, _| if i == 2 { 1.0 } else { 0.0 })).unwrap();
        assert!((sigma_norm(&cos1, half, &e) - 1.0f64).abs() < 1e-14);
        assert!((sigma_norm(&cos2, half, &e) - 2f64.sqrt()).abs() < 1e-14);
        let f = BoundaryVector::new(DVector::from_fn(8, |i, _| i as f64 - 3.0)).unwrap();
        assert!((sigma_norm(&f, SobolevIndex::zero(), &e) - f.l2_norm()).abs() < 1e-13);
    }
}
