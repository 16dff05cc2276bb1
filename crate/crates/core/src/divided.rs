//! First and second divided differences of `log`, evaluated without
//! cancellation for nearly coincident arguments.
//!
//! They are the kernels of the resolvent integrals
//! `∫₀^∞ ds / ((a+s)(b+s)) = log[a,b]` and
//! `∫₀^∞ ds / ((a+s)(b+s)(c+s)) = -log[a,b,c]`.

use crate::calculus::EigenSystem;
use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::DMatrix;

/// `log[a, b] = (log a - log b)/(a - b)`, `1/a` when `a = b`.
///
/// Written as `log1p(d/m)/d` with `d = |a - b|`, `m = min(a, b)`: the log1p
/// argument is nonnegative so neither branch cancels.
pub fn log_dd1<T: Real>(a: T, b: T) -> T {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let d = hi - lo;
    if d == T::zero() {
        return T::one() / lo;
    }
    let x = d / lo;
    x.ln_1p() / d
}

/// Relative spread below which `log_dd2` switches to its Taylor series.
const SERIES_SPREAD: f64 = 1e-3;

/// `log[a, b, c]`, symmetric in its arguments.
pub fn log_dd2<T: Real>(a: T, b: T, c: T) -> T {
    let mut x = [a, b, c];
    x.sort_by(|p, q| q.partial_cmp(p).unwrap_or(std::cmp::Ordering::Equal));
    let [hi, mid, lo] = x;
    let m = (hi + mid + lo) / T::lit(3.0);
    if hi - lo <= T::lit(SERIES_SPREAD) * m {
        let y = [hi - m, mid - m, lo - m];
        let mut sum = T::zero();
        let mut m_pow = m * m;
        for k in 0..5 {
            let term = complete_homogeneous(k, y) / (T::from_count(k + 2) * m_pow);
            sum += if k % 2 == 0 { -term } else { term };
            m_pow *= m;
        }
        return sum;
    }
    (log_dd1(hi, mid) - log_dd1(mid, lo)) / (hi - lo)
}

/// `h_k(y₀, y₁, y₂) = Σ_{i+j+l=k} y₀^i y₁^j y₂^l`.
fn complete_homogeneous<T: Real>(k: usize, y: [T; 3]) -> T {
    let mut sum = T::zero();
    for i in 0..=k {
        for j in 0..=k - i {
            let l = k - i - j;
            sum += y[0].powi(i as i32) * y[1].powi(j as i32) * y[2].powi(l as i32);
        }
    }
    sum
}

/// `C_jk = log[λ_j + τ, λ_k + τ]` for an eigensystem.
#[derive(Debug, Clone, PartialEq)]
pub struct DividedDifferenceTable<T: Real> {
    table: DMatrix<T>,
    tau: T,
}

impl<T: Real> DividedDifferenceTable<T> {
    pub fn new(e: &EigenSystem<T>, tau: T) -> Result<Self> {
        let shifted = shifted_spectrum(e, tau)?;
        Ok(Self::from_shifted(&shifted, tau))
    }

    fn from_shifted(mu: &[T], tau: T) -> Self {
        let n = mu.len();
        let mut table = DMatrix::zeros(n, n);
        for j in 0..n {
            table[(j, j)] = T::one() / mu[j];
            for k in j + 1..n {
                let c = log_dd1(mu[j], mu[k]);
                table[(j, k)] = c;
                table[(k, j)] = c;
            }
        }
        DividedDifferenceTable { table, tau }
    }

    pub fn table(&self) -> &DMatrix<T> {
        &self.table
    }

    pub fn tau(&self) -> T {
        self.tau
    }
}

/// `λ_k + τ`, refusing nonpositive values.
pub fn shifted_spectrum<T: Real>(e: &EigenSystem<T>, tau: T) -> Result<Vec<T>> {
    if !(tau >= T::zero()) {
        return Err(Error::Domain(format!("shift τ = {:e} must be nonnegative", tau)));
    }
    let mu: Vec<T> = e.values().iter().map(|&l| l + tau).collect();
    if mu.iter().any(|&m| !(m > T::zero())) {
        return Err(Error::Domain(format!(
            "λ_min + τ = {:e} is not positive",
            e.lambda_min() + tau
        )));
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::positive_eigensystem;
    use crate::quadrature::{integrate_half_line, QuadOptions};
    use nalgebra::DVector;
    use proptest::prelude::*;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn examples() {
        assert!((log_dd1(E, E) - 1.0 / E).abs() < 1e-16);
        assert!((log_dd1(2.0, 1.0) - LN_2).abs() < 1e-15);
        assert!((log_dd1(1.0 + 1.0, 3.0 + 1.0) - LN_2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn near_coincidence_is_smooth() {
        for d in [1e-4, 1e-8, 1e-12, 1e-15] {
            let a = 1.0 + d;
            let de: f64 = a - 1.0;
            let exact = 1.0 - de / 2.0 + de * de / 3.0 - de.powi(3) / 4.0;
            assert!((log_dd1(a, 1.0) - exact).abs() < 1e-15, "d = {d}");
        }
        // Widely separated arguments keep full precision too.
        assert!((log_dd1(1e-20, 1.0f64) - 46.051701859880914 / (1.0 - 1e-20)).abs() < 1e-13);
    }

    #[test]
    fn table_invariants() {
        let e = positive_eigensystem(&DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 1.0, 0.2]))).unwrap();
        let t = DividedDifferenceTable::new(&e, 0.5).unwrap();
        let c = t.table();
        assert_eq!(c, &c.transpose());
        assert!(c.iter().all(|&v| v > 0.0));
        for j in 0..4 {
            assert_eq!(c[(j, j)], 1.0 / (e.values()[j] + 0.5));
        }
        assert!(DividedDifferenceTable::new(&e, -0.3).is_err());
    }

    #[test]
    fn dd2_matches_resolvent_integral() {
        for (a, b, c) in [(3.0f64, 1.0, 0.1), (1.0, 1.0, 1.0), (2.0, 2.0 + 1e-9, 2.0 - 1e-9), (5.0, 0.01, 0.01)] {
            let q = integrate_half_line(
                |s| Ok(DMatrix::from_element(1, 1, 1.0 / ((a + s) * (b + s) * (c + s)))),
                (a * c).sqrt(),
                QuadOptions::default(),
            )
            .unwrap();
            let v = -log_dd2(a, b, c);
            assert!((q.value[(0, 0)] - v).abs() < 1e-10 * v, "({a}, {b}, {c})");
        }
        assert!((log_dd2(2.0, 2.0, 2.0f64) + 1.0 / 8.0).abs() < 1e-16);
    }

    proptest! {
        #[test]
        fn dd2_series_and_direct_agree(m in 0.01f64..10.0, s in 1.05e-3f64..3e-3, t in 0.0f64..1.0) {
            // Just above the switch the direct formula is still accurate; the
            // series evaluated there must agree.
            let (a, b, c) = (m * (1.0 + s / 2.0), m * (1.0 + (t - 0.5) * s), m * (1.0 - s / 2.0));
            let direct = log_dd2(a, b, c);
            let y = [a - (a + b + c) / 3.0, b - (a + b + c) / 3.0, c - (a + b + c) / 3.0];
            let mm = (a + b + c) / 3.0;
            let series: f64 = (0..5).map(|k| {
                let term = complete_homogeneous(k, y) / ((k + 2) as f64 * mm.powi(k as i32 + 2));
                if k % 2 == 0 { -term } else { term }
            }).sum();
            prop_assert!((direct - series).abs() < 1e-10 * series.abs());
        }

        #[test]
        fn dd1_symmetric_positive(a in 1e-6f64..1e3, b in 1e-6f64..1e3) {
            prop_assert_eq!(log_dd1(a, b), log_dd1(b, a));
            prop_assert!(log_dd1(a, b) > 0.0);
        }

        #[test]
        fn dd2_symmetric(a in 0.01f64..10.0, b in 0.01f64..10.0, c in 0.01f64..10.0) {
            let v = log_dd2(a, b, c);
            prop_assert_eq!(v, log_dd2(c, a, b));
            prop_assert_eq!(v, log_dd2(b, c, a));
            prop_assert!(v < 0.0);
        }
    }
}
