//! Matrix logarithm by a resolvent contour integral,
//! `log A = (2πi)⁻¹ ∮ log z (zI - A)⁻¹ dz`, as an independent check of the
//! eigendecomposition route.
//!
//! The contour is the circle through `λ_min/2` and `2λ_max`. The trapezoid
//! rule on it converges like `q^n` where `q` is the larger of the pole ratio
//! `max |λ - c|/ρ` and the branch-point ratio `ρ/c`; the node count is doubled
//! until successive sums agree.

use crate::error::{Error, Result};
use crate::nd::NdMatrix;
use crate::scalar::Real;
use crate::sobolev::{Signature, SobolevOperator};
use nalgebra::{Complex, DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct ContourOptions<T> {
    /// Starting node count.
    pub n_quad: usize,
    /// Largest entry change between successive doublings, relative to `max(1, max |entry|)`.
    pub tol: T,
    pub max_nodes: usize,
}

impl<T: Real> ContourOptions<T> {
    pub fn new(n_quad: usize) -> Self {
        ContourOptions {
            n_quad,
            tol: T::lit(1e-12),
            max_nodes: 1 << 15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContourLog<T: Real> {
    pub operator: SobolevOperator<T>,
    /// Largest `|Im|` entry of the final sum.
    pub imag_residual: T,
    pub nodes: usize,
    /// Entry change at the last doubling.
    pub change: T,
    pub center: T,
    pub radius: T,
}

pub fn riesz_dunford_log<T: Real>(a: &NdMatrix<T>, n_quad: usize) -> Result<ContourLog<T>> {
    riesz_dunford_log_with(a.matrix(), ContourOptions::new(n_quad))
}

pub fn riesz_dunford_log_with<T: Real>(a: &DMatrix<T>, opts: ContourOptions<T>) -> Result<ContourLog<T>> {
    let n = a.nrows();
    if n == 0 || n != a.ncols() {
        return Err(Error::Dimension("contour logarithm needs a nonempty square matrix".into()));
    }
    if opts.n_quad < 4 {
        return Err(Error::InvalidInput("at least 4 contour nodes are required".into()));
    }
    let (lo, hi) = spectral_bounds(a)?;
    let left = lo * T::lit(0.5);
    let right = hi + hi;
    let center = (left + right) * T::lit(0.5);
    let radius = (right - left) * T::lit(0.5);

    let pole_ratio = ((lo - center) / radius).abs().max(((hi - center) / radius).abs());
    let q = pole_ratio.max(radius / center);
    let predicted = (opts.tol.ln() / q.ln()).as_f64().ceil();
    if !(predicted.is_finite()) || predicted > opts.max_nodes as f64 {
        return Err(Error::Contour(format!(
            "spectrum [{:e}, {:e}] needs about {} nodes, cap is {}",
            lo, hi, predicted, opts.max_nodes
        )));
    }

    let mut nodes = opts.n_quad;
    let (mut re, mut im) = node_sum(a, center, radius, nodes, 0, 1)?;
    loop {
        let next = 2 * nodes;
        if next > opts.max_nodes {
            return Err(Error::Convergence(format!(
                "contour sum not converged at {} nodes",
                nodes
            )));
        }
        let (re_odd, im_odd) = node_sum(a, center, radius, next, 1, 2)?;
        let half = T::lit(0.5);
        let new_re = (&re + re_odd) * half;
        let new_im = (&im + im_odd) * half;
        let change = (&new_re - &re).amax();
        let scale = T::one().max(new_re.amax());
        re = new_re;
        im = new_im;
        nodes = next;
        if change <= opts.tol * scale {
            let imag_residual = im.amax();
            return Ok(ContourLog {
                operator: SobolevOperator::symmetric(re, Signature::EpsilonShift)?,
                imag_residual,
                nodes,
                change,
                center,
                radius,
            });
        }
    }
}

/// `(1/n) Σ log z_j ρ e^{iθ_j} (z_j - A)⁻¹` over `j = first, first + step, …`,
/// with `θ_j = 2πj/n`. Returns the real and imaginary parts, already divided
/// by `n / step` so that the full sum is the average of interleaved parts.
fn node_sum<T: Real>(
    a: &DMatrix<T>,
    center: T,
    radius: T,
    n: usize,
    first: usize,
    step: usize,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let dim = a.nrows();
    let mut re = DMatrix::zeros(dim, dim);
    let mut im = DMatrix::zeros(dim, dim);
    let count = T::from_count(n / step);
    for j in (first..n).step_by(step) {
        let theta = T::two_pi() * T::from_count(j) / T::from_count(n);
        let (s, c) = theta.sin_cos();
        let z = Complex::new(center + radius * c, radius * s);
        let log_z = Complex::new((z.re * z.re + z.im * z.im).sqrt().ln(), z.im.atan2(z.re));
        let w = log_z * Complex::new(radius * c, radius * s) / Complex::new(count, T::zero());
        let shifted = DMatrix::from_fn(dim, dim, |r, k| {
            let diag = if r == k { z } else { Complex::new(T::zero(), T::zero()) };
            diag - Complex::new(a[(r, k)], T::zero())
        });
        let resolvent = shifted
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Contour(format!("contour node {j} hits the spectrum")))?;
        for (idx, r) in resolvent.iter().enumerate() {
            re[idx] += w.re * r.re - w.im * r.im;
            im[idx] += w.re * r.im + w.im * r.re;
        }
    }
    Ok((re, im))
}

/// Estimates of `(λ_min, λ_max)` by inverse and direct power iteration,
/// independent of any eigendecomposition.
pub fn spectral_bounds<T: Real>(a: &DMatrix<T>) -> Result<(T, T)> {
    let n = a.nrows();
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Contour("matrix is not positive definite".into()))?;
    let start = DVector::from_fn(n, |i, _| T::one() + T::lit(0.1) * T::from_count(i + 1).sin());
    let hi = power_iteration(|v| a * v, start.clone());
    let inv = power_iteration(|v| chol.solve(v), start);
    if !(inv > T::zero()) {
        return Err(Error::Contour("smallest eigenvalue estimate is not positive".into()));
    }
    Ok((T::one() / inv, hi))
}

fn power_iteration<T: Real>(apply: impl Fn(&DVector<T>) -> DVector<T>, mut v: DVector<T>) -> T {
    v /= v.norm();
    let mut est = T::zero();
    for _ in 0..1000 {
        let w = apply(&v);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == T::zero() {
            return T::zero();
        }
        v = w / norm;
        if (next - est).abs() <= T::lit(1e-12) * next.abs() {
            return next;
        }
        est = next;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{apply_spectral_function, positive_eigensystem, SpectralFunction};

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn diagonal_example() {
        let a = NdMatrix::new(diag(&[2.0, 1.0]), "x").unwrap();
        let out = riesz_dunford_log(&a, 64).unwrap();
        let expected = diag(&[2f64.ln(), 0.0]);
        assert!((out.operator.matrix() - expected).amax() < 1e-10);
        assert!(out.imag_residual < 1e-10);
        assert!(out.nodes >= 128);
    }

    #[test]
    fn matches_spectral_log() {
        let b = DMatrix::from_fn(6, 6, |i, j| ((3 * i + 5 * j) % 7) as f64 / 7.0 - 0.4);
        let a = &b * b.transpose() + DMatrix::identity(6, 6) * 0.2;
        let out = riesz_dunford_log_with(&a, ContourOptions::new(32)).unwrap();
        let e = positive_eigensystem(&a).unwrap();
        let l = apply_spectral_function(&e, SpectralFunction::Log).unwrap();
        assert!((out.operator.matrix() - l.matrix()).amax() < 1e-9);
        assert!(out.imag_residual < 1e-10);
    }

    #[test]
    fn bounds_bracket_spectrum() {
        let a = diag(&[5.0, 3.0, 0.25]);
        let (lo, hi) = spectral_bounds(&a).unwrap();
        assert!((lo - 0.25).abs() < 1e-6 && (hi - 5.0).abs() < 1e-6);
    }

    #[test]
    fn ill_conditioned_is_refused() {
        let a = diag(&[1.0, 1e-6]);
        assert!(matches!(
            riesz_dunford_log_with(&a, ContourOptions::new(64)),
            Err(Error::Contour(_))
        ));
        let b = diag(&[1.0, -1.0]);
        assert!(matches!(
            riesz_dunford_log_with(&b, ContourOptions::new(64)),
            Err(Error::Contour(_))
        ));
    }

    #[test]
    fn node_cap_reports_nonconvergence() {
        let a = diag(&[2.0, 1.0]);
        let opts = ContourOptions {
            n_quad: 8,
            tol: 1e-12,
            max_nodes: 32,
        };
        // Prediction (about 110 nodes) already exceeds the cap.
        assert!(matches!(riesz_dunford_log_with(&a, opts), Err(Error::Contour(_))));
        let opts = ContourOptions {
            n_quad: 8,
            tol: 1e-3,
            max_nodes: 32,
        };
        // Predicted 28 nodes fits, but the 16 → 32 change is still about q^16.
        assert!(matches!(riesz_dunford_log_with(&a, opts), Err(Error::Convergence(_))));
        let opts = ContourOptions {
            n_quad: 8,
            tol: 1e-3,
            max_nodes: 256,
        };
        assert!(riesz_dunford_log_with(&a, opts).is_ok());
    }
}
