//! Galerkin sections of the Neumann-to-Dirichlet map.

use crate::basis::{frequency, BoundaryBasis};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sobolev::symmetrize;
use nalgebra::{DMatrix, SymmetricEigen};

/// Symmetric positive definite `2N × 2N` matrix `A_jk = ⟨Λ f_k, f_j⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct NdMatrix<T: Real> {
    matrix: DMatrix<T>,
    max_frequency: usize,
    sigma_hash: String,
    asymmetry: T,
}

impl<T: Real> NdMatrix<T> {
    /// Symmetrizes `raw`, recording `max |A - Aᵀ|` beforehand, and checks
    /// positive definiteness.
    pub fn new(raw: DMatrix<T>, sigma_hash: impl Into<String>) -> Result<Self> {
        let n = raw.nrows();
        if n != raw.ncols() || n == 0 || !n.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "ND matrix must be square of even size, got {}x{}",
                n,
                raw.ncols()
            )));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("nonfinite ND matrix entry".into()));
        }
        let asymmetry = (&raw - raw.transpose()).iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let matrix = symmetrize(&raw);
        if matrix.clone().cholesky().is_none() {
            let min = SymmetricEigen::new(matrix.clone())
                .eigenvalues
                .iter()
                .copied()
                .reduce(|a, v| a.min(v))
                .unwrap_or(T::zero());
            return Err(Error::Definiteness {
                min_eigenvalue: min.as_f64(),
            });
        }
        Ok(NdMatrix {
            matrix,
            max_frequency: n / 2,
            sigma_hash: sigma_hash.into(),
            asymmetry,
        })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_frequency(&self) -> usize {
        self.max_frequency
    }

    pub fn sigma_hash(&self) -> &str {
        &self.sigma_hash
    }

    /// Largest `|A_jk - A_kj|` before symmetrization.
    pub fn asymmetry(&self) -> T {
        self.asymmetry
    }

    /// Leading `2n × 2n` block, the section for basis order `n`.
    pub fn truncate(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.max_frequency {
            return Err(Error::Dimension(format!(
                "cannot truncate order {} to {}",
                self.max_frequency, n
            )));
        }
        NdMatrix::new(
            self.matrix.view((0, 0), (2 * n, 2 * n)).into_owned(),
            self.sigma_hash.clone(),
        )
    }
}

/// `Λ(σ₀)` on the disk for constant `σ₀`: `diag(1/(σ₀ n))` in the basis order.
pub fn analytic_nd_constant<T: Real>(sigma0: T, basis: &BoundaryBasis<T>) -> Result<NdMatrix<T>> {
    analytic_nd_constant_order(sigma0, basis.max_frequency())
}

pub fn analytic_nd_constant_order<T: Real>(sigma0: T, max_frequency: usize) -> Result<NdMatrix<T>> {
    if !(sigma0 > T::zero()) || !sigma0.is_finite() {
        return Err(Error::Domain(format!("constant conductivity {:e} is not positive", sigma0)));
    }
    let dim = 2 * max_frequency;
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            T::one() / (sigma0 * T::from_count(frequency(i)))
        } else {
            T::zero()
        }
    });
    NdMatrix::new(m, format!("const:{}", sigma0.as_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_examples() {
        let a = analytic_nd_constant_order(1.0, 2).unwrap();
        let d: Vec<f64> = a.matrix().diagonal().iter().copied().collect();
        assert_eq!(d, vec![1.0, 1.0, 0.5, 0.5]);
        let b = analytic_nd_constant_order(2.0, 2).unwrap();
        let d: Vec<f64> = b.matrix().diagonal().iter().copied().collect();
        assert_eq!(d, vec![0.5, 0.5, 0.25, 0.25]);
        assert!(analytic_nd_constant_order(0.0, 2).is_err());
    }

    #[test]
    fn symmetrizes_and_records_asymmetry() {
        let raw = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 2.0]);
        let a = NdMatrix::new(raw, "x").unwrap();
        assert_eq!(a.asymmetry(), 0.5);
        assert_eq!(a.matrix(), &a.matrix().transpose());
        assert_eq!(a.matrix()[(0, 1)], 0.75);
    }

    #[test]
    fn rejects_indefinite() {
        let raw = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match NdMatrix::new(raw, "x") {
            Err(Error::Definiteness { min_eigenvalue }) => assert!((min_eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncation_keeps_leading_block() {
        let a = analytic_nd_constant_order(1.0, 4).unwrap();
        let t = a.truncate(2).unwrap();
        assert_eq!(t.dim(), 4);
        assert_eq!(t.matrix()[(3, 3)], 0.5);
        assert!(a.truncate(5).is_err());
    }
}
