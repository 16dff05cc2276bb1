//! Sobolev indices, Fourier weights and Sobolev-signed operator norms.
//!
//! On the circle the `H^r` norm of a mean-free function with coefficients
//! `c_i` is `(Σ w_{n_i}(r)² c_i²)^{1/2}` with `w_n(r) = (1 + n²)^{r/2}`.

use crate::basis::frequency;
use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// A Sobolev exponent `r`, checked against the interval of the norm family.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SobolevIndex<T>(T);

impl<T: Real> SobolevIndex<T> {
    /// Index for σ-dependent spectral norms, `r ∈ [-1/2, 1/2]`.
    pub fn sigma(r: T) -> Result<Self> {
        Self::within(r, T::lit(0.5))
    }

    /// Index for Fourier norms, `r ∈ [-1, 1]`.
    pub fn fourier(r: T) -> Result<Self> {
        Self::within(r, T::one())
    }

    fn within(r: T, bound: T) -> Result<Self> {
        if !r.is_finite() || r.abs() > bound {
            return Err(Error::Domain(format!(
                "Sobolev index {:e} outside [-{:e}, {:e}]",
                r, bound, bound
            )));
        }
        Ok(SobolevIndex(r))
    }

    pub fn zero() -> Self {
        SobolevIndex(T::zero())
    }

    pub fn value(self) -> T {
        self.0
    }
}

impl<T: Real> std::ops::Neg for SobolevIndex<T> {
    type Output = Self;

    fn neg(self) -> Self {
        SobolevIndex(-self.0)
    }
}

pub fn fourier_weight<T: Real>(n: usize, r: T) -> T {
    (T::one() + T::from_count(n * n)).powf(r * T::lit(0.5))
}

/// Fourier weights for each of the `dim` basis functions.
pub fn fourier_weights<T: Real>(dim: usize, r: T) -> DVector<T> {
    DVector::from_fn(dim, |i, _| fourier_weight(frequency(i), r))
}

/// Fourier `H^r` norm of a coefficient vector.
pub fn fourier_norm<T: Real>(coeffs: &DVector<T>, r: SobolevIndex<T>) -> T {
    coeffs
        .component_mul(&fourier_weights(coeffs.len(), r.value()))
        .norm()
}

/// Mapping property attached to an operator matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signature<T> {
    /// Bounded from `H^{r_in}` to `H^{r_out}`.
    Fixed { r_in: T, r_out: T },
    /// Bounded `H^ε → H^{-ε}` for every `ε > 0` but not for `ε = 0`.
    EpsilonShift,
}

impl<T: Real> Signature<T> {
    pub fn fixed(r_in: T, r_out: T) -> Self {
        Signature::Fixed { r_in, r_out }
    }

    pub fn l2() -> Self {
        Signature::Fixed {
            r_in: T::zero(),
            r_out: T::zero(),
        }
    }

    /// Short text form used in CSV headers.
    pub fn label(&self) -> String {
        match self {
            Signature::Fixed { r_in, r_out } => format!("{}->{}", r_in.as_f64(), r_out.as_f64()),
            Signature::EpsilonShift => "eps->-eps".to_string(),
        }
    }
}

/// A matrix in a `BoundaryBasis` tagged with its Sobolev signature.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevOperator<T: Real> {
    matrix: DMatrix<T>,
    signature: Signature<T>,
    symmetric: bool,
}

impl<T: Real> SobolevOperator<T> {
    /// General (not necessarily symmetric) operator.
    pub fn new(matrix: DMatrix<T>, signature: Signature<T>) -> Result<Self> {
        check_square(&matrix)?;
        Ok(SobolevOperator {
            matrix,
            signature,
            symmetric: false,
        })
    }

    /// Symmetric operator; the matrix is replaced by `(M + Mᵀ)/2`.
    pub fn symmetric(matrix: DMatrix<T>, signature: Signature<T>) -> Result<Self> {
        check_square(&matrix)?;
        let matrix = symmetrize(&matrix);
        Ok(SobolevOperator {
            matrix,
            signature,
            symmetric: true,
        })
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn signature(&self) -> Signature<T> {
        self.signature
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Operator norm in its own signature. For `EpsilonShift` the caller must
    /// pick an `ε`, so this falls back to the spectral norm.
    pub fn own_norm(&self) -> T {
        match self.signature {
            Signature::Fixed { r_in, r_out } => {
                weighted_norm(&self.matrix, r_in, r_out, self.symmetric)
            }
            Signature::EpsilonShift => weighted_norm(&self.matrix, T::zero(), T::zero(), self.symmetric),
        }
    }
}

fn check_square<T: Real>(m: &DMatrix<T>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "operator matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// `‖D_out T D_in^{-1}‖₂` with Fourier weight diagonals.
pub fn sobolev_operator_norm<T: Real>(
    op: &SobolevOperator<T>,
    r_in: SobolevIndex<T>,
    r_out: SobolevIndex<T>,
) -> T {
    weighted_norm(op.matrix(), r_in.value(), r_out.value(), op.is_symmetric())
}

/// Largest singular value of `D_out M D_in^{-1}`. When `M` is symmetric and
/// `r_out = -r_in` the weighted matrix is symmetric too, and the cheaper
/// symmetric eigensolver gives the same value.
pub fn weighted_norm<T: Real>(m: &DMatrix<T>, r_in: T, r_out: T, symmetric: bool) -> T {
    let dim = m.nrows();
    let w_out = fourier_weights(dim, r_out);
    let w_in = fourier_weights(dim, r_in);
    let weighted = DMatrix::from_fn(dim, m.ncols(), |i, j| w_out[i] * m[(i, j)] / w_in[j]);
    if symmetric && r_out == -r_in {
        spectral_norm_symmetric(&symmetrize(&weighted))
    } else {
        spectral_norm(&weighted)
    }
}

pub fn spectral_norm<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(T::zero(), |a, &s| a.max(s))
}

pub fn spectral_norm_symmetric<T: Real>(m: &DMatrix<T>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .fold(T::zero(), |a, &l| a.max(l.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_norms() {
        let op = SobolevOperator::symmetric(DMatrix::<f64>::identity(2, 2), Signature::l2()).unwrap();
        let z = SobolevIndex::zero();
        assert!((sobolev_operator_norm(&op, z, z) - 1.0).abs() < 1e-14);
        // Weights (1+n²)^{∓ε/2} multiply to (1+n²)^{-ε}; for N = 1, ε = 1/2 that is 2^{-1/2}.
        let e = SobolevIndex::fourier(0.5).unwrap();
        let v = sobolev_operator_norm(&op, e, -e);
        assert!((v - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn diagonal_norm() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let op = SobolevOperator::new(m, Signature::l2()).unwrap();
        let z = SobolevIndex::<f64>::zero();
        assert!((sobolev_operator_norm(&op, z, z) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn index_ranges() {
        assert!(SobolevIndex::sigma(0.5).is_ok());
        assert!(SobolevIndex::sigma(0.51).is_err());
        assert!(SobolevIndex::fourier(-1.0).is_ok());
        assert!(SobolevIndex::fourier(1.5).is_err());
        assert!(SobolevIndex::fourier(f64::NAN).is_err());
    }

    #[test]
    fn symmetric_path_matches_svd() {
        let m = DMatrix::from_fn(6, 6, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let a = weighted_norm(&m, 0.3, -0.3, true);
        let b = weighted_norm(&m, 0.3, -0.3, false);
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn rejects_non_square() {
        assert!(SobolevOperator::new(DMatrix::<f64>::zeros(3, 2), Signature::l2()).is_err());
    }

    fn matrix(dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0f64..1.0, dim * dim)
            .prop_map(move |v| DMatrix::from_vec(dim, dim, v))
    }

    proptest! {
        #[test]
        fn submultiplicative(s in matrix(6), t in matrix(6),
                             r1 in -1.0f64..1.0, r2 in -1.0f64..1.0, r3 in -1.0f64..1.0) {
            let st = &s * &t;
            let lhs = weighted_norm(&st, r1, r3, false);
            let rhs = weighted_norm(&s, r2, r3, false) * weighted_norm(&t, r1, r2, false);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14);
        }
    }
}
