//! Least-squares line fits for convergence rates.

use super::report::LineFit;
use crate::error::{Error, Result};

pub fn fit_line(name: &str, x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a line fit needs at least two paired points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("line fit data must be finite".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("line fit abscissae are all equal".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(LineFit {
        name: name.to_string(),
        slope,
        intercept,
        residual: (sse / n).sqrt(),
        points: x.len(),
        log_log: false,
    })
}

/// Fit of `ln y` against `ln x`; all values must be positive.
pub fn loglog_fit(name: &str, x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(format!("log-log fit {name} needs positive data")));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mut fit = fit_line(name, &lx, &ly)?;
    fit.log_log = true;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_law() {
        let x = [0.1, 0.2, 0.4, 0.8];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        let f = loglog_fit("p", &x, &y).unwrap();
        assert!((f.slope - 1.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_line("a", &[1.0], &[1.0]).is_err());
        assert!(fit_line("a", &[1.0, 1.0], &[1.0, 2.0]).is_err());
        assert!(loglog_fit("a", &[1.0, 2.0], &[0.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn residual_is_rms_of_noise(a in -3.0f64..3.0, b in -3.0f64..3.0, e in 0.0f64..1.0) {
            // Alternating ±e around a line through symmetric abscissae is
            // orthogonal to both fit directions, so the fit recovers the line.
            let x = [-1.5, -0.5, 0.5, 1.5];
            let noise = [e, -e, -e, e];
            let y: Vec<f64> = x.iter().zip(noise).map(|(x, n)| a * x + b + n).collect();
            let f = fit_line("l", &x, &y).unwrap();
            prop_assert!((f.slope - a).abs() < 1e-12);
            prop_assert!((f.intercept - b).abs() < 1e-12);
            prop_assert!((f.residual - e).abs() < 1e-12);
        }
    }
}
