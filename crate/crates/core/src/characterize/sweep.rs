//! Charge variance versus LO power. CSV form: `lo_photons,variance_e2`.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockstate::{data_lines, parse_fields};
use crate::numeric::{line_fit, weighted_fit};
use crate::simulator::{pulse_charge, DetectorParams};

/// Residual classical noise must stay below this fraction of the shot-noise
/// variance for a point to count as shot-noise limited.
pub const SHOT_LIMIT_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub lo_photons: f64,
    /// Charge variance per pulse, electrons².
    pub variance_e2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseScalingFit {
    /// `√max(σ_e², 0)`, electrons.
    pub sigma_e_fit: f64,
    pub sigma_e2_fit: f64,
    pub sigma_e2_err: f64,
    /// Electrons² per LO photon, an estimate of `κη`.
    pub gain_fit: f64,
    pub gain_err: f64,
    /// Slope of `log √(Var − σ_e²)` against `log N`.
    pub exponent_fit: f64,
    /// `Var − (gain·N + σ_e²)` per point.
    pub residuals: Vec<f64>,
    /// Points whose background-subtracted variance is not positive; they
    /// are left out of the exponent fit.
    pub excluded: Vec<bool>,
}

impl NoiseScalingFit {
    /// `lo_photons,variance_e2,fitted_e2,residual_e2,excluded`
    pub fn residuals_csv(&self, points: &[SweepPoint]) -> String {
        let mut out = String::from("lo_photons,variance_e2,fitted_e2,residual_e2,excluded\n");
        for ((p, r), x) in points.iter().zip(&self.residuals).zip(&self.excluded) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.lo_photons,
                p.variance_e2,
                p.variance_e2 - r,
                r,
                *x as u8
            );
        }
        out
    }
}

fn validate_sweep(points: &[SweepPoint], min_points: usize) -> Result<()> {
    if points.len() < min_points {
        return Err(Error::InvalidInput(format!(
            "noise sweep needs at least {min_points} points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points
        .iter()
        .find(|p| !(p.lo_photons > 0.0 && p.lo_photons.is_finite() && p.variance_e2 > 0.0 && p.variance_e2.is_finite()))
    {
        return Err(Error::InvalidInput(format!(
            "sweep point ({}, {}) needs positive finite LO photons and variance",
            p.lo_photons, p.variance_e2
        )));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        (lo.min(p.lo_photons), hi.max(p.lo_photons))
    });
    let decades = (hi / lo).log10();
    if decades < 1.5 {
        return Err(Error::InvalidInput(format!(
            "noise sweep spans {decades:.2} decades of LO power; at least 1.5 are needed"
        )));
    }
    Ok(())
}

/// Fits `Var = gain·N + σ_e²` with weights `1/Var²`, then the exponent of
/// the background-subtracted RMS.
pub fn noise_scaling_fit(points: &[SweepPoint]) -> Result<NoiseScalingFit> {
    validate_sweep(points, 6)?;
    let design: Vec<Vec<f64>> = points.iter().map(|p| vec![p.lo_photons, 1.0]).collect();
    let y: Vec<f64> = points.iter().map(|p| p.variance_e2).collect();
    let weights: Vec<f64> = y.iter().map(|v| 1.0 / (v * v)).collect();
    let fit = weighted_fit(&design, &y, &weights)?;
    let (gain, floor) = (fit.coefficients[0], fit.coefficients[1]);

    let residuals: Vec<f64> = points
        .iter()
        .map(|p| p.variance_e2 - gain * p.lo_photons - floor)
        .collect();
    let excluded: Vec<bool> = points.iter().map(|p| p.variance_e2 - floor <= 0.0).collect();
    for (p, _) in points.iter().zip(&excluded).filter(|(_, x)| **x) {
        log::warn!(
            "LO {:.3e}: variance {:.4e} is below the fitted background {floor:.4e}; point excluded",
            p.lo_photons,
            p.variance_e2
        );
    }
    let (log_n, log_rms): (Vec<f64>, Vec<f64>) = points
        .iter()
        .zip(&excluded)
        .filter(|(_, x)| !**x)
        .map(|(p, _)| (p.lo_photons.ln(), 0.5 * (p.variance_e2 - floor).ln()))
        .unzip();
    if log_n.len() < 2 {
        return Err(Error::Numerical(
            "fewer than two points remain above the fitted background".into(),
        ));
    }
    let (_, exponent) = line_fit(&log_n, &log_rms)?;
    Ok(NoiseScalingFit {
        sigma_e_fit: floor.max(0.0).sqrt(),
        sigma_e2_fit: floor,
        sigma_e2_err: fit.std_err(1),
        gain_fit: gain,
        gain_err: fit.std_err(0),
        exponent_fit: exponent,
        residuals,
        excluded,
    })
}

/// Measured form of the subtraction figure.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtractionMeasurement {
    /// Largest swept LO photon number that is still shot-noise limited.
    pub max_shot_limited_photons: f64,
    pub subtraction_db: f64,
    /// Every point was shot-noise limited, so the figure is a lower bound
    /// set by the sweep range.
    pub limited_by_sweep: bool,
    pub gain_fit: f64,
    pub floor_fit: f64,
    /// Coefficient of `N²`, the classical leakage.
    pub quadratic_fit: f64,
}

/// Fits `Var = σ² + g·N + c·N²` and walks up the sweep until the classical
/// part `Var − σ² − g·N` reaches `SHOT_LIMIT_FRACTION · g·N`.
pub fn measured_subtraction(points: &[SweepPoint]) -> Result<SubtractionMeasurement> {
    validate_sweep(points, 6)?;
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.lo_photons.total_cmp(&b.lo_photons));
    // scaled N keeps the normal matrix well conditioned
    let scale = sorted.last().map(|p| p.lo_photons).unwrap_or(1.0);
    let design: Vec<Vec<f64>> = sorted
        .iter()
        .map(|p| {
            let n = p.lo_photons / scale;
            vec![1.0, n, n * n]
        })
        .collect();
    let y: Vec<f64> = sorted.iter().map(|p| p.variance_e2).collect();
    let weights: Vec<f64> = y.iter().map(|v| 1.0 / (v * v)).collect();
    let beta = weighted_fit(&design, &y, &weights)?.coefficients;
    let (floor, gain, quadratic) = (beta[0], beta[1] / scale, beta[2] / (scale * scale));
    if !(gain > 0.0) {
        return Err(Error::Numerical(format!(
            "fitted shot-noise gain {gain:.3e} is not positive"
        )));
    }
    let mut last = None;
    for p in &sorted {
        let shot = gain * p.lo_photons;
        if p.variance_e2 - floor - shot < SHOT_LIMIT_FRACTION * shot {
            last = Some(p.lo_photons);
        } else {
            break;
        }
    }
    let Some(n_max) = last else {
        return Err(Error::Numerical("no swept LO power is shot-noise limited".into()));
    };
    Ok(SubtractionMeasurement {
        max_shot_limited_photons: n_max,
        subtraction_db: 10.0 * n_max.log10(),
        limited_by_sweep: n_max == sorted[sorted.len() - 1].lo_photons,
        gain_fit: gain,
        floor_fit: floor,
        quadratic_fit: quadratic,
    })
}

/// Vacuum-input charge variance at each LO photon number, from `pulses`
/// simulated pulses per point. Point `i` uses ChaCha stream `i` of `seed`.
pub fn simulate_noise_sweep(
    params: &DetectorParams,
    lo_photons: &[f64],
    pulses: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    if pulses < 2 {
        return Err(Error::InvalidInput("need at least two pulses per sweep point".into()));
    }
    lo_photons
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let p = DetectorParams {
                lo_photons: n,
                ..params.clone()
            };
            p.validate()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (mut sum, mut sum2) = (0.0, 0.0);
            for _ in 0..pulses {
                let g: f64 = StandardNormal.sample(&mut rng);
                let q = pulse_charge(g * 0.5f64.sqrt(), &p, &mut rng).charge_e;
                sum += q;
                sum2 += q * q;
            }
            let mean = sum / pulses as f64;
            Ok(SweepPoint {
                lo_photons: n,
                variance_e2: (sum2 - pulses as f64 * mean * mean) / (pulses - 1) as f64,
            })
        })
        .collect()
}

pub fn write_sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("lo_photons,variance_e2\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.lo_photons, p.variance_e2);
    }
    out
}

pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepPoint>> {
    let mut points = Vec::new();
    for (i, (line_no, line)) in data_lines(text).enumerate() {
        if i == 0 && line.starts_with("lo_photons") {
            continue;
        }
        let [lo_photons, variance_e2] = parse_fields::<2>(line_no, line)?;
        points.push(SweepPoint {
            lo_photons,
            variance_e2,
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("sweep CSV has no points".into()));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::logspace;

    fn exact_sweep(gain: f64, floor: f64) -> Vec<SweepPoint> {
        logspace(3e6, 3e8, 10)
            .into_iter()
            .map(|n| SweepPoint {
                lo_photons: n,
                variance_e2: gain * n + floor,
            })
            .collect()
    }

    #[test]
    fn exact_data_are_recovered() {
        let fit = noise_scaling_fit(&exact_sweep(0.0837, 730.0 * 730.0)).unwrap();
        assert!((fit.sigma_e_fit - 730.0).abs() < 1e-6);
        assert!((fit.gain_fit - 0.0837).abs() < 1e-12);
        assert!((fit.exponent_fit - 0.5).abs() < 1e-9);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-6));
    }

    #[test]
    fn fit_is_scale_covariant() {
        let points = simulate_noise_sweep(&DetectorParams::default(), &logspace(3e6, 3e8, 8), 5000, 9).unwrap();
        let base = noise_scaling_fit(&points).unwrap();
        let c = 37.5;
        let scaled: Vec<SweepPoint> = points
            .iter()
            .map(|p| SweepPoint {
                variance_e2: c * p.variance_e2,
                ..*p
            })
            .collect();
        let fit = noise_scaling_fit(&scaled).unwrap();
        assert!((fit.gain_fit / (c * base.gain_fit) - 1.0).abs() < 1e-9);
        assert!((fit.sigma_e2_fit / (c * base.sigma_e2_fit) - 1.0).abs() < 1e-9);
        assert!((fit.exponent_fit - base.exponent_fit).abs() < 1e-6);
    }

    #[test]
    fn points_below_background_are_excluded() {
        // background-dominated low end, as for a noisy amplifier
        let mut points = exact_sweep(0.0837, 1.0e7);
        points[0].variance_e2 = 0.99e7;
        let fit = noise_scaling_fit(&points).unwrap();
        assert!(fit.excluded[0]);
        assert_eq!(fit.excluded.iter().filter(|x| **x).count(), 1);
        assert!(fit.residuals_csv(&points).lines().nth(1).unwrap().ends_with(",1"));
    }

    #[test]
    fn rejects_short_or_narrow_sweeps() {
        let points = exact_sweep(0.08, 1.0);
        assert!(noise_scaling_fit(&points[..5]).is_err());
        let narrow: Vec<SweepPoint> = logspace(1e7, 2e8, 8)
            .into_iter()
            .map(|n| SweepPoint {
                lo_photons: n,
                variance_e2: n,
            })
            .collect();
        assert!(noise_scaling_fit(&narrow).is_err());
        let mut bad = points.clone();
        bad[3].variance_e2 = f64::NAN;
        assert!(noise_scaling_fit(&bad).is_err());
    }

    #[test]
    fn clean_sweep_is_limited_by_its_range() {
        let m = measured_subtraction(&exact_sweep(0.0837, 5.3e5)).unwrap();
        assert!(m.limited_by_sweep);
        assert!((m.max_shot_limited_photons - 3e8).abs() < 1.0);
        assert!(m.quadratic_fit.abs() < 1e-15);
    }

    #[test]
    fn quadratic_leakage_sets_the_threshold() {
        // c·N² = g·N/2 at N = g/(2c) = 2e7
        let (g, c) = (0.08, 2e-9);
        let points: Vec<SweepPoint> = logspace(1e6, 1e9, 31)
            .into_iter()
            .map(|n| SweepPoint {
                lo_photons: n,
                variance_e2: 5e5 + g * n + c * n * n,
            })
            .collect();
        let m = measured_subtraction(&points).unwrap();
        assert!(!m.limited_by_sweep);
        let step = 10f64.powf(0.1);
        assert!(m.max_shot_limited_photons <= 2e7 && m.max_shot_limited_photons * step > 2e7);
    }

    #[test]
    fn csv_round_trip() {
        let points = exact_sweep(0.08, 1e5);
        assert_eq!(read_sweep_csv(&write_sweep_csv(&points)).unwrap(), points);
        assert!(read_sweep_csv("lo_photons,variance_e2\n1e6\n").is_err());
    }

    #[test]
    fn simulated_sweep_is_reproducible() {
        let n = [1e6, 1e7];
        let a = simulate_noise_sweep(&DetectorParams::default(), &n, 1000, 4).unwrap();
        let b = simulate_noise_sweep(&DetectorParams::default(), &n, 1000, 4).unwrap();
        assert_eq!(a, b);
    }
}
