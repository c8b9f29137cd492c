//! Least-squares exponential rate fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// d(log y)/dt
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub residual_rms: f64,
    pub points: usize,
}

/// Fits `log y = intercept + slope · t` over the samples with `t` inside
/// `window` (inclusive; `None` keeps everything).
pub fn fit_exponential(series: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<FitResult> {
    let picked: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, _)| window.is_none_or(|(a, b)| (a..=b).contains(t)))
        .collect();
    if picked.len() < MIN_FIT_POINTS {
        return Err(Error::invalid(format!(
            "exponential fit needs at least {MIN_FIT_POINTS} points, got {}",
            picked.len()
        )));
    }
    if let Some((t, y)) = picked.iter().find(|(_, y)| !(*y > 0.0) || !y.is_finite()) {
        return Err(Error::invalid(format!("nonpositive value {y} at t = {t}")));
    }
    let logs: Vec<(f64, f64)> = picked.iter().map(|&(t, y)| (t, y.ln())).collect();
    let (slope, intercept) = linear_least_squares(&logs)?;
    let rms = (logs
        .iter()
        .map(|(t, l)| (l - intercept - slope * t).powi(2))
        .sum::<f64>()
        / logs.len() as f64)
        .sqrt();
    let t0 = picked.first().map(|p| p.0).unwrap_or(0.0);
    let t1 = picked.last().map(|p| p.0).unwrap_or(0.0);
    Ok(FitResult { slope, intercept, window: (t0, t1), residual_rms: rms, points: picked.len() })
}

/// Ordinary least squares `y = a + b t`; returns `(b, a)`.
pub fn linear_least_squares(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = points.len() as f64;
    let tm = points.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = points.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = points.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::invalid("fit window has no spread in t"));
    }
    let sty: f64 = points.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let slope = sty / stt;
    Ok((slope, ym - slope * tm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..50).map(|i| i as f64 * 0.1).map(|t| (t, f(t))).collect()
    }

    #[test]
    fn exact_exponential() {
        let r = fit_exponential(&grid(|t| (3.0 * t).exp()), None).unwrap();
        assert!((r.slope - 3.0).abs() < 1e-9);
        assert!(r.residual_rms < 1e-9);
    }

    #[test]
    fn constant_has_zero_slope() {
        let r = fit_exponential(&grid(|_| 2.5), None).unwrap();
        assert!(r.slope.abs() < 1e-14);
    }

    #[test]
    fn scale_invariance() {
        let a = fit_exponential(&grid(|t| (-1.3 * t).exp() * (1.0 + 0.1 * t.sin())), Some((1.0, 4.0))).unwrap();
        let b = fit_exponential(&grid(|t| 1e5 * (-1.3 * t).exp() * (1.0 + 0.1 * t.sin())), Some((1.0, 4.0))).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-12);
        assert_eq!(a.window, (1.0, 4.0));
    }

    #[test]
    fn errors() {
        assert!(fit_exponential(&grid(|t| t - 1.0), None).is_err());
        assert!(fit_exponential(&grid(|t| t.exp())[..5], None).is_err());
    }
}
