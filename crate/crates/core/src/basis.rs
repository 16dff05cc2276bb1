//! Zero-mean trigonometric basis on the unit circle and its trapezoid quadrature.

use crate::error::{Error, Result};
use crate::mesh::DiskMesh;
use crate::scalar::Real;
use nalgebra::{DMatrix, DVector};

/// `cos θ, sin θ, …, cos Nθ, sin Nθ`, each divided by `√π`, sampled at the
/// equally spaced boundary nodes. Quadrature weights are all `2π / n_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryBasis<T> {
    max_frequency: usize,
    n_boundary: usize,
    /// `n_b × 2N` nodal samples.
    samples: DMatrix<T>,
}

/// Frequency of the `i`-th basis function.
pub fn frequency(i: usize) -> usize {
    i / 2 + 1
}

pub fn boundary_trig_basis<T: Real>(mesh: &DiskMesh<T>, max_frequency: usize) -> Result<BoundaryBasis<T>> {
    BoundaryBasis::on_circle(mesh.n_boundary(), max_frequency)
}

impl<T: Real> BoundaryBasis<T> {
    /// Basis on `n_boundary` equally spaced points starting at angle 0.
    pub fn on_circle(n_boundary: usize, max_frequency: usize) -> Result<Self> {
        if max_frequency == 0 {
            return Err(Error::InvalidInput("basis order N must be at least 1".into()));
        }
        if 8 * max_frequency > n_boundary {
            return Err(Error::Aliasing {
                max_frequency,
                needed: 8 * max_frequency,
                available: n_boundary,
            });
        }
        let norm = T::one() / T::pi().sqrt();
        let dim = 2 * max_frequency;
        let samples = DMatrix::from_fn(n_boundary, dim, |k, i| {
            // Reduce n·k modulo n_b so the angle stays in [0, 2π) at every frequency.
            let m = (frequency(i) * k) % n_boundary;
            let angle = T::two_pi() * T::from_count(m) / T::from_count(n_boundary);
            if i % 2 == 0 {
                angle.cos() * norm
            } else {
                angle.sin() * norm
            }
        });
        Ok(BoundaryBasis {
            max_frequency,
            n_boundary,
            samples,
        })
    }

    pub fn max_frequency(&self) -> usize {
        self.max_frequency
    }

    pub fn dim(&self) -> usize {
        2 * self.max_frequency
    }

    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    pub fn weight(&self) -> T {
        T::two_pi() / T::from_count(self.n_boundary)
    }

    /// Nodal samples, one column per basis function.
    pub fn samples(&self) -> &DMatrix<T> {
        &self.samples
    }

    /// Frequencies of all basis functions in order.
    pub fn frequencies(&self) -> Vec<usize> {
        (0..self.dim()).map(frequency).collect()
    }

    pub fn gram(&self) -> DMatrix<T> {
        self.samples.tr_mul(&self.samples) * self.weight()
    }

    /// Quadrature mean of a nodal boundary function.
    pub fn quadrature_mean(&self, values: &[T]) -> T {
        values.iter().fold(T::zero(), |a, &v| a + v) / T::from_count(values.len())
    }

    /// Nodal values of a coefficient vector.
    pub fn evaluate(&self, f: &BoundaryVector<T>) -> Vec<T> {
        (&self.samples * &f.coeffs).iter().copied().collect()
    }

    /// Quadrature inner products `⟨values, f_i⟩`. The mean is not removed;
    /// the basis already annihilates constants on the nodes.
    pub fn project(&self, values: &[T]) -> Result<BoundaryVector<T>> {
        if values.len() != self.n_boundary {
            return Err(Error::Dimension(format!(
                "{} boundary values for {} nodes",
                values.len(),
                self.n_boundary
            )));
        }
        let v = DVector::from_column_slice(values);
        Ok(BoundaryVector {
            coeffs: self.samples.tr_mul(&v) * self.weight(),
        })
    }

    /// Subtracts the quadrature mean, then expands in the basis.
    pub fn mean_free_project(&self, values: &[T]) -> Result<BoundaryVector<T>> {
        let mean = self.quadrature_mean(values);
        let shifted: Vec<T> = values.iter().map(|&v| v - mean).collect();
        self.project(&shifted)
    }
}

/// Coefficients of a mean-free boundary function in a `BoundaryBasis`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVector<T> {
    coeffs: DVector<T>,
}

impl<T: Real> BoundaryVector<T> {
    pub fn new(coeffs: DVector<T>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("nonfinite boundary coefficient".into()));
        }
        Ok(BoundaryVector { coeffs })
    }

    pub fn zeros(dim: usize) -> Self {
        BoundaryVector {
            coeffs: DVector::zeros(dim),
        }
    }

    /// The `i`-th basis function itself.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut coeffs = DVector::zeros(dim);
        coeffs[i] = T::one();
        BoundaryVector { coeffs }
    }

    pub fn coeffs(&self) -> &DVector<T> {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// L² norm on the circle (the basis is orthonormal).
    pub fn l2_norm(&self) -> T {
        self.coeffs.norm()
    }
}
