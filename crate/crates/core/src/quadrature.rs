//! Globally adaptive Gauss–Kronrod (7/15) quadrature for matrix-valued
//! integrands, with a rational map for integrals over `[0, ∞)`.

use crate::error::{Error, Result};
use crate::scalar::Real;
use nalgebra::DMatrix;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_segments: usize,
}

impl<T: Real> Default for QuadOptions<T> {
    fn default() -> Self {
        QuadOptions {
            rel_tol: T::lit(1e-11),
            abs_tol: T::lit(1e-14),
            max_segments: 4000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult<T: Real> {
    pub value: DMatrix<T>,
    /// Sum of `max |K15 - G7|` over the final segments.
    pub error_estimate: T,
    pub segments: usize,
    pub evaluations: usize,
}

struct Segment<T: Real> {
    a: T,
    b: T,
    value: DMatrix<T>,
    error: T,
}

fn gk15<T: Real, F>(f: &F, a: T, b: T) -> Result<Segment<T>>
where
    F: Fn(T) -> Result<DMatrix<T>>,
{
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let f0 = f(mid)?;
    let mut kronrod = &f0 * T::lit(WGK[7]);
    let mut gauss = &f0 * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let sum = f(mid - dx)? + f(mid + dx)?;
        kronrod += &sum * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss += &sum * T::lit(WG[j / 2]);
        }
    }
    kronrod *= half;
    gauss *= half;
    let error = (&kronrod - &gauss).amax();
    Ok(Segment {
        a,
        b,
        value: kronrod,
        error,
    })
}

/// `∫_a^b f`, bisecting the segment with the largest error estimate until the
/// total estimate is below `max(abs_tol, rel_tol · max |I|)`.
pub fn integrate<T: Real, F>(f: F, a: T, b: T, opts: QuadOptions<T>) -> Result<QuadResult<T>>
where
    F: Fn(T) -> Result<DMatrix<T>>,
{
    let mut segments = vec![gk15(&f, a, b)?];
    let mut evaluations = 15;
    loop {
        let total = segments
            .iter()
            .skip(1)
            .fold(segments[0].value.clone(), |acc, s| acc + &s.value);
        let error = segments.iter().fold(T::zero(), |acc, s| acc + s.error);
        if error <= opts.abs_tol.max(opts.rel_tol * total.amax()) {
            return Ok(QuadResult {
                value: total,
                error_estimate: error,
                segments: segments.len(),
                evaluations,
            });
        }
        if segments.len() >= opts.max_segments {
            return Err(Error::Convergence(format!(
                "quadrature error estimate {:e} after {} segments",
                error,
                segments.len()
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .fold(0, |best, (i, s)| if s.error > segments[best].error { i } else { best });
        let s = segments.swap_remove(worst);
        let mid = (s.a + s.b) * T::lit(0.5);
        segments.push(gk15(&f, s.a, mid)?);
        segments.push(gk15(&f, mid, s.b)?);
        evaluations += 30;
    }
}

/// `∫_0^∞ g(s) ds` through `s = scale · t / (1 - t)`.
pub fn integrate_half_line<T: Real, F>(g: F, scale: T, opts: QuadOptions<T>) -> Result<QuadResult<T>>
where
    F: Fn(T) -> Result<DMatrix<T>>,
{
    if !(scale > T::zero()) {
        return Err(Error::InvalidInput(format!("substitution scale {:e} must be positive", scale)));
    }
    integrate(
        |t: T| {
            let one_minus = T::one() - t;
            let s = scale * t / one_minus;
            Ok(g(s)? * (scale / (one_minus * one_minus)))
        },
        T::zero(),
        T::one(),
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_element(1, 1, v))
    }

    #[test]
    fn polynomial_is_exact() {
        // G7 is exact to degree 13, so its difference from K15 vanishes too.
        let r = integrate(|x: f64| scalar(x.powi(13)), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value[(0, 0)] - 1.0 / 14.0).abs() < 1e-15);
        assert_eq!(r.segments, 1);
        let r = integrate(|x: f64| scalar(x.powi(20)), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value[(0, 0)] - 1.0 / 21.0).abs() < 1e-15);
    }

    #[test]
    fn half_line_resolvent_square() {
        let r = integrate_half_line(|s| scalar(1.0 / ((1.0 + s) * (1.0 + s))), 1.0, QuadOptions::default()).unwrap();
        assert!((r.value[(0, 0)] - 1.0).abs() < 1e-12);
        // ∫ ds/((a+s)(b+s)) = log(a/b)/(a-b).
        let (a, b) = (3.0f64, 0.01);
        let r = integrate_half_line(|s| scalar(1.0 / ((a + s) * (b + s))), (a * b).sqrt(), QuadOptions::default())
            .unwrap();
        let exact = (a / b).ln() / (a - b);
        assert!((r.value[(0, 0)] - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn matrix_valued() {
        let r = integrate(
            |x: f64| Ok(DMatrix::from_row_slice(2, 2, &[x.exp(), x.sin(), 0.0, 1.0])),
            0.0,
            2.0,
            QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value[(0, 0)] - (2f64.exp() - 1.0)).abs() < 1e-12);
        assert!((r.value[(0, 1)] - (1.0 - 2f64.cos())).abs() < 1e-12);
        assert!((r.value[(1, 1)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_on_peak() {
        let r = integrate(|x: f64| scalar(1.0 / (1e-4 + x * x)), -1.0, 1.0, QuadOptions::default()).unwrap();
        let exact = 2.0 * (1.0 / 1e-2f64) * (1.0 / 1e-2f64).atan();
        assert!((r.value[(0, 0)] - exact).abs() < 1e-9 * exact);
        assert!(r.segments > 1);
    }

    #[test]
    fn segment_cap() {
        let opts = QuadOptions {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_segments: 3,
        };
        let r = integrate(|x: f64| scalar(x.abs().sqrt()), -1.0, 1.0, opts);
        assert!(matches!(r, Err(Error::Convergence(_))));
    }
}
