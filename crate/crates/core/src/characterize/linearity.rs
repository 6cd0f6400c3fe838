use crate::error::{Error, Result};
use crate::numeric::line_fit;

pub const DEFAULT_LINEARITY_THRESHOLD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityReport {
    pub slope: f64,
    pub intercept: f64,
    /// `max |measured − fit| / max |measured|`
    pub max_deviation: f64,
    /// `max |measured − injected| / max |measured|`, the deviation from a
    /// unit-gain transfer without refitting.
    pub unity_deviation: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Straight-line fit of measured against injected charges.
pub fn linearity_check(injected: &[f64], measured: &[f64], threshold: f64) -> Result<LinearityReport> {
    if injected.len() != measured.len() {
        return Err(Error::InvalidInput(format!(
            "{} injected charges but {} measurements",
            injected.len(),
            measured.len()
        )));
    }
    if injected.len() < 5 {
        return Err(Error::InvalidInput("linearity check needs at least 5 points".into()));
    }
    if injected.iter().chain(measured).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite charge in linearity data".into()));
    }
    if !(threshold > 0.0) {
        return Err(Error::Domain {
            what: "threshold",
            value: threshold,
            domain: "(0, inf)",
        });
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    if spread(injected) == 0.0 || spread(measured) == 0.0 {
        return Err(Error::InvalidInput(
            "degenerate linearity data: all values are equal".into(),
        ));
    }
    let (intercept, slope) = line_fit(injected, measured)?;
    let full_scale = measured.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let max_deviation = injected
        .iter()
        .zip(measured)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max)
        / full_scale;
    let unity_deviation = injected
        .iter()
        .zip(measured)
        .map(|(x, y)| (y - x).abs())
        .fold(0.0, f64::max)
        / full_scale;
    Ok(LinearityReport {
        slope,
        intercept,
        max_deviation,
        unity_deviation,
        threshold,
        passed: max_deviation <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;

    #[test]
    fn linear_data_have_no_deviation() {
        let x = linspace(0.0, 1e5, 11);
        let y: Vec<f64> = x.iter().map(|x| 0.97 * x + 120.0).collect();
        let r = linearity_check(&x, &y, DEFAULT_LINEARITY_THRESHOLD).unwrap();
        assert!(r.max_deviation < 1e-12);
        assert!((r.slope - 0.97).abs() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn quadratic_term_leaves_a_known_residual() {
        // y = x + a·x²/F on 11 uniform points over [0, F]
        let (f, a) = (1e5, 0.005);
        let x = linspace(0.0, f, 11);
        let y: Vec<f64> = x.iter().map(|x| x + a * x * x / f).collect();
        let r = linearity_check(&x, &y, DEFAULT_LINEARITY_THRESHOLD).unwrap();
        // straight-line fit of u² over u = 0, 0.1, …, 1: slope 1, intercept −0.15,
        // largest residual 0.15 at the end points
        let oracle = a * 0.15 * f / (f * (1.0 + a));
        assert!((r.max_deviation - oracle).abs() < 1e-12, "{}", r.max_deviation);
        assert!((r.unity_deviation - a / (1.0 + a)).abs() < 1e-12);
        assert!(r.passed);
        let strict = linearity_check(&x, &y, 5e-4).unwrap();
        assert!(!strict.passed);
    }

    #[test]
    fn degenerate_input_is_an_error() {
        assert!(linearity_check(&[1.0; 6], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 0.01).is_err());
        assert!(linearity_check(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0], 0.01).is_err());
    }
}
