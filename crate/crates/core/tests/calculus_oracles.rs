//! Matrix-function oracles independent of the FEM: the contour logarithm, the
//! matrix exponential, resolvent quadrature and finite differences of the
//! spectral logarithm on random SPD matrices.

use lognd::calculus::{apply_spectral_function, positive_eigensystem, SpectralFunction};
use lognd::contour::{riesz_dunford_log_with, ContourOptions};
use lognd::derivative::{d2f_tau_eigen, d2f_tau_quadrature_matrix, df_tau_eigen, df_tau_quadrature_matrix};
use lognd::quadrature::QuadOptions;
use lognd::sobolev::spectral_norm;
use nalgebra::DMatrix;
use proptest::prelude::*;

const DIM: usize = 6;

/// `M Mᵀ/DIM + δI`, condition number at most a few hundred.
fn spd() -> impl Strategy<Value = DMatrix<f64>> {
    (prop::collection::vec(-1.0f64..1.0, DIM * DIM), 0.02f64..1.0).prop_map(|(v, delta)| {
        let m = DMatrix::from_vec(DIM, DIM, v);
        &m * m.transpose() / DIM as f64 + DMatrix::identity(DIM, DIM) * delta
    })
}

fn symmetric() -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, DIM * DIM).prop_map(|v| {
        let m = DMatrix::from_vec(DIM, DIM, v);
        (&m + m.transpose()) * 0.5
    })
}

fn log_tau(a: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    positive_eigensystem(a).unwrap().reconstruct(|l| (l + tau).ln())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exponential_inverts_the_logarithm(a in spd()) {
        let e = positive_eigensystem(&a).unwrap();
        let log = apply_spectral_function(&e, SpectralFunction::Log).unwrap();
        let back = log.matrix().clone().exp();
        prop_assert!((back - &a).amax() <= 1e-10 * a.amax());
    }

    #[test]
    fn contour_log_agrees(a in spd()) {
        let c = riesz_dunford_log_with(&a, ContourOptions::new(64)).unwrap();
        prop_assert!(spectral_norm(&(c.operator.matrix() - log_tau(&a, 0.0))) < 1e-9);
    }

    #[test]
    fn powers_compose(a in spd(), r in 0.05f64..0.5) {
        let e = positive_eigensystem(&a).unwrap();
        let half = apply_spectral_function(&e, SpectralFunction::power(r).unwrap()).unwrap();
        let full = apply_spectral_function(&e, SpectralFunction::power(2.0 * r).unwrap()).unwrap();
        let prod = half.matrix() * half.matrix();
        prop_assert!((prod - full.matrix()).amax() <= 1e-12 * full.matrix().amax().max(1.0));
    }

    #[test]
    fn first_derivative_matches_quadrature(a in spd(), d in symmetric(), tau in prop::sample::select(vec![0.0, 0.01, 0.1, 1.0])) {
        let e = positive_eigensystem(&a).unwrap();
        let closed = df_tau_eigen(&e, &d, tau).unwrap();
        let quad = df_tau_quadrature_matrix(&a, &d, tau, QuadOptions::default()).unwrap();
        prop_assert!(spectral_norm(&(&closed - quad)) <= 1e-8 * spectral_norm(&closed).max(1.0));
    }

    #[test]
    fn second_derivative_matches_quadrature(a in spd(), b in symmetric(), c in symmetric(), tau in prop::sample::select(vec![0.0, 0.1, 1.0])) {
        let e = positive_eigensystem(&a).unwrap();
        let h = (&b * 0.3 + &c * 0.2) * 0.5;
        let closed = d2f_tau_eigen(&e, &h, &b, &c, tau).unwrap();
        let quad = d2f_tau_quadrature_matrix(&a, &h, &b, &c, tau, QuadOptions::default()).unwrap();
        prop_assert!(spectral_norm(&(&closed - quad)) <= 1e-8 * spectral_norm(&closed).max(1.0));
    }

    #[test]
    fn first_derivative_matches_central_differences(a in spd(), d in symmetric(), tau in 0.0f64..1.0) {
        let e = positive_eigensystem(&a).unwrap();
        let exact = df_tau_eigen(&e, &d, tau).unwrap();
        // Keep A ± tD well inside the positive cone.
        let t = 1e-3 * e.lambda_min() / spectral_norm(&d).max(1e-12);
        let fd = (log_tau(&(&a + &d * t), tau) - log_tau(&(&a - &d * t), tau)) / (2.0 * t);
        prop_assert!(spectral_norm(&(fd - &exact)) <= 1e-4 * spectral_norm(&exact).max(1e-8));
    }

    #[test]
    fn second_derivative_matches_central_differences(a in spd(), b in symmetric(), c in symmetric(), tau in 0.0f64..1.0) {
        // Affine path A + sB + tC: the second derivative has no H term.
        let e = positive_eigensystem(&a).unwrap();
        let zero = DMatrix::zeros(DIM, DIM);
        let exact = d2f_tau_eigen(&e, &zero, &b, &c, tau).unwrap();
        let t = 1e-3 * e.lambda_min() / spectral_norm(&c).max(1e-12);
        let first = |m: &DMatrix<f64>| df_tau_eigen(&positive_eigensystem(m).unwrap(), &b, tau).unwrap();
        let fd = (first(&(&a + &c * t)) - first(&(&a - &c * t))) / (2.0 * t);
        prop_assert!(spectral_norm(&(fd - &exact)) <= 1e-4 * spectral_norm(&exact).max(1e-8));
    }
}
