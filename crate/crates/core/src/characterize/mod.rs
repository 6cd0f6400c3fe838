//! Detector metrology: noise-versus-LO-power fits, the electronic noise
//! floor, SNR, subtraction and spectral whiteness.
//!
//! Two subtraction figures are kept apart. [`subtraction_db`] is the ratio
//! of LO photons per pulse to the shot-noise level at the largest power that
//! is still shot-noise limited. [`common_mode_rejection_db`] is the
//! suppression of common-mode intensity fluctuations set by the splitting
//! imbalance.

mod linearity;
mod spectrum;
mod sweep;

pub use linearity::{linearity_check, LinearityReport, DEFAULT_LINEARITY_THRESHOLD};
pub use spectrum::{spectrum_report, welch_psd, SpectralLine, SpectralReport, WelchOptions};
pub use sweep::{
    measured_subtraction, noise_scaling_fit, read_sweep_csv, simulate_noise_sweep, write_sweep_csv, NoiseScalingFit,
    SubtractionMeasurement, SweepPoint, SHOT_LIMIT_FRACTION,
};

use crate::error::{Error, Result};
use crate::simulator::DetectorParams;

/// Shot-noise to electronic-noise power ratio, `10·log₁₀(κηN/σ_e²)`.
/// Infinite when `σ_e = 0`.
pub fn snr_db(params: &DetectorParams) -> Result<f64> {
    params.validate()?;
    if params.sigma_e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (params.shot_variance() / (params.sigma_e * params.sigma_e)).log10())
}

/// `10·log₁₀(N_max)` for the largest shot-noise limited LO photon number.
pub fn subtraction_db(max_shot_limited_photons: f64) -> Result<f64> {
    if !(max_shot_limited_photons > 0.0 && max_shot_limited_photons.is_finite()) {
        return Err(Error::Domain {
            what: "max_shot_limited_photons",
            value: max_shot_limited_photons,
            domain: "(0, inf)",
        });
    }
    Ok(10.0 * max_shot_limited_photons.log10())
}

/// Common-mode rejection of a difference measurement with splitting
/// imbalance `δ`: `−20·log₁₀ δ`. Infinite for a perfectly balanced detector.
pub fn common_mode_rejection_db(imbalance: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&imbalance) {
        return Err(Error::Domain {
            what: "imbalance",
            value: imbalance,
            domain: "[0, 0.5)",
        });
    }
    if imbalance == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-20.0 * imbalance.log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_snr_is_fourteen_db() {
        assert!((snr_db(&DetectorParams::default()).unwrap() - 14.0).abs() < 1e-9);
    }

    #[test]
    fn snr_scales_with_lo_power_and_noise_floor() {
        let base = DetectorParams::default();
        let tenfold = DetectorParams {
            lo_photons: base.lo_photons * 10.0,
            ..base.clone()
        };
        assert!((snr_db(&tenfold).unwrap() - snr_db(&base).unwrap() - 10.0).abs() < 1e-9);
        let noisy = DetectorParams {
            sigma_e: base.sigma_e * 2.0,
            ..base.clone()
        };
        let shift = snr_db(&noisy).unwrap() - snr_db(&base).unwrap();
        assert!((shift + 20.0 * 2f64.log10()).abs() < 1e-9);
        assert!((shift + 6.02).abs() < 0.01);
        let quiet = DetectorParams { sigma_e: 0.0, ..base };
        assert_eq!(snr_db(&quiet).unwrap(), f64::INFINITY);
    }

    #[test]
    fn subtraction_figures() {
        assert!((subtraction_db(3e8).unwrap() - 84.77).abs() < 0.01);
        assert!((subtraction_db(1e6).unwrap() - 60.0).abs() < 1e-12);
        assert!(subtraction_db(0.0).is_err());
        assert!((common_mode_rejection_db(1e-4).unwrap() - 80.0).abs() < 1e-9);
        assert_eq!(common_mode_rejection_db(0.0).unwrap(), f64::INFINITY);
        assert!(common_mode_rejection_db(0.6).is_err());
    }
}
