//! Monte Carlo model of a pulsed balanced homodyne detector.
//!
//! Each pulse yields one difference charge
//!
//! ```text
//! Q = √(2κηN) · x + δκ (N − N̄) + e,    e ~ 𝒩(0, σ_e²)
//! ```
//!
//! where `x` is a quadrature of the signal state after the detection loss
//! `η`, `N` the LO photon number of that pulse, `κ` the fraction of the
//! photocharge seen by the peak-sampling shaper, `δ` the residual splitting
//! imbalance and `σ_e` the electronic noise floor. For a vacuum input and
//! `δ = 0` the charge variance is `κηN̄ + σ_e²`.
//!
//! Every pulse draws from its own counter-based ChaCha stream keyed by
//! `(seed, pulse index)`, so runs are reproducible regardless of how the
//! pulses are scheduled across threads.

mod io;
mod sampler;
mod trace;

pub use io::{read_acquisition_csv, write_acquisition_csv};
pub use sampler::{sample_quadrature, QuadratureSampler, DEFAULT_HALF_WIDTH, DEFAULT_NODES};
pub use trace::{emit_trace, Trace, TraceConfig};

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fockstate::{apply_loss, DensityMatrix};

/// Overall detection efficiency assumed when none is given.
pub const DEFAULT_ETA: f64 = 0.91;
/// Electronic noise floor, electrons RMS per pulse.
pub const DEFAULT_SIGMA_E: f64 = 730.0;
/// LO photons per pulse at the reference operating point.
pub const DEFAULT_LO_PHOTONS: f64 = 1.6e8;
pub const DEFAULT_REP_RATE_HZ: f64 = 204_000.0;
/// Shot-to-electronic noise power ratio the default `κ` is calibrated to.
pub const REFERENCE_SNR_DB: f64 = 14.0;

/// The charge-collection factor `κ` for which `10·log₁₀(κηN/σ_e²)` equals
/// `snr_db`.
pub fn calibrated_kappa(snr_db: f64, lo_photons: f64, eta: f64, sigma_e: f64) -> f64 {
    10f64.powf(snr_db / 10.0) * sigma_e * sigma_e / (eta * lo_photons)
}

/// Detector constants.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    /// Overall quantum efficiency, including optical losses.
    pub eta_total: f64,
    /// Fraction of the difference photocharge captured by the peak-sampled
    /// shaping amplifier.
    pub kappa: f64,
    /// Electronic noise, electrons RMS per pulse.
    pub sigma_e: f64,
    /// Residual splitting asymmetry after attenuator balancing.
    pub imbalance: f64,
    /// Mean LO photons per pulse.
    pub lo_photons: f64,
    pub rep_rate_hz: f64,
    /// Draw the LO photon number per pulse from a Poisson distribution.
    pub poisson_lo: bool,
    /// Classical relative intensity noise of the LO, fractional RMS per
    /// pulse. Only visible through the imbalance.
    pub lo_rin: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            eta_total: DEFAULT_ETA,
            kappa: calibrated_kappa(REFERENCE_SNR_DB, DEFAULT_LO_PHOTONS, DEFAULT_ETA, DEFAULT_SIGMA_E),
            sigma_e: DEFAULT_SIGMA_E,
            imbalance: 0.0,
            lo_photons: DEFAULT_LO_PHOTONS,
            rep_rate_hz: DEFAULT_REP_RATE_HZ,
            poisson_lo: true,
            lo_rin: 0.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        let domain = |what, value, ok: bool, domain| {
            if ok {
                Ok(())
            } else {
                Err(Error::Domain { what, value, domain })
            }
        };
        domain(
            "eta_total",
            self.eta_total,
            self.eta_total > 0.0 && self.eta_total <= 1.0,
            "(0, 1]",
        )?;
        domain("kappa", self.kappa, self.kappa > 0.0 && self.kappa <= 1.0, "(0, 1]")?;
        domain(
            "sigma_e",
            self.sigma_e,
            self.sigma_e >= 0.0 && self.sigma_e.is_finite(),
            "[0, inf)",
        )?;
        domain(
            "imbalance",
            self.imbalance,
            (0.0..0.5).contains(&self.imbalance),
            "[0, 0.5)",
        )?;
        domain(
            "lo_photons",
            self.lo_photons,
            self.lo_photons > 0.0 && self.lo_photons.is_finite(),
            "(0, inf)",
        )?;
        domain(
            "rep_rate_hz",
            self.rep_rate_hz,
            self.rep_rate_hz > 0.0 && self.rep_rate_hz.is_finite(),
            "(0, inf)",
        )?;
        domain(
            "lo_rin",
            self.lo_rin,
            self.lo_rin >= 0.0 && self.lo_rin.is_finite(),
            "[0, inf)",
        )?;
        Ok(())
    }

    /// Gain from quadrature to charge at the mean LO power, `√(2κηN̄)`.
    pub fn model_gain(&self) -> f64 {
        (2.0 * self.kappa * self.eta_total * self.lo_photons).sqrt()
    }

    /// Shot-noise variance of the charge for vacuum input, `κηN̄`.
    pub fn shot_variance(&self) -> f64 {
        self.kappa * self.eta_total * self.lo_photons
    }

    /// Variance of the LO photon number per pulse.
    pub fn lo_number_variance(&self) -> f64 {
        let classical = (self.lo_rin * self.lo_photons).powi(2);
        if self.poisson_lo {
            self.lo_photons + classical
        } else {
            classical
        }
    }

    /// Expected charge variance for vacuum input: shot noise, imbalance
    /// leakage and electronic noise.
    pub fn vacuum_charge_variance(&self) -> f64 {
        self.shot_variance()
            + (self.imbalance * self.kappa).powi(2) * self.lo_number_variance()
            + self.sigma_e * self.sigma_e
    }
}

/// Charge of one pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseCharge {
    pub charge_e: f64,
    pub lo_n: f64,
}

/// Difference charge for one pulse whose detected quadrature is `x`.
///
/// `x` must already include the detection loss: draw it from
/// `apply_loss(ρ, η)`, not from `ρ`.
pub fn pulse_charge<R: Rng + ?Sized>(x: f64, params: &DetectorParams, rng: &mut R) -> PulseCharge {
    let mean = if params.lo_rin > 0.0 {
        let g: f64 = StandardNormal.sample(rng);
        (params.lo_photons * (1.0 + params.lo_rin * g)).max(0.0)
    } else {
        params.lo_photons
    };
    let lo_n = if params.poisson_lo && mean > 0.0 {
        Poisson::new(mean).expect("finite positive mean").sample(rng)
    } else {
        mean
    };
    let electronic = if params.sigma_e > 0.0 {
        let g: f64 = StandardNormal.sample(rng);
        params.sigma_e * g
    } else {
        0.0
    };
    let signal = (2.0 * params.kappa * params.eta_total * lo_n).sqrt() * x;
    let leakage = params.imbalance * params.kappa * (lo_n - params.lo_photons);
    PulseCharge {
        charge_e: signal + leakage + electronic,
        lo_n,
    }
}

/// How the piezo scan moves the LO phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanProfile {
    /// Constant phase `2π·s/n_phases` within segment `s`.
    #[default]
    Stepped,
    /// Phase ramps linearly from 0 to 2π over the whole run.
    Continuous,
}

/// How recorded charges are converted back to quadrature units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Calibration {
    /// Divide by the true model gain `√(2κηN̄)`.
    #[default]
    ModelGain,
    /// Divide by `√(2·Var_vac)`, the gain an experimenter obtains by setting
    /// the measured vacuum variance to 1/2. Electronic noise then acts as
    /// an extra loss.
    Vacuum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionConfig {
    pub n_pulses: usize,
    pub n_phases: usize,
    pub scan: ScanProfile,
    /// End-to-end RMS of the slow phase random walk, degrees.
    pub drift_deg: f64,
    pub seed: u64,
    pub calibration: Calibration,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            n_pulses: 262_144,
            n_phases: 64,
            scan: ScanProfile::Stepped,
            drift_deg: 8.0,
            seed: 0,
            calibration: Calibration::ModelGain,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pulses == 0 || self.n_phases == 0 {
            return Err(Error::InvalidInput("n_pulses and n_phases must be positive".into()));
        }
        if !self.n_pulses.is_multiple_of(self.n_phases) {
            return Err(Error::InvalidInput(format!(
                "n_pulses = {} is not divisible by n_phases = {}",
                self.n_pulses, self.n_phases
            )));
        }
        if !(self.drift_deg >= 0.0 && self.drift_deg.is_finite()) {
            return Err(Error::Domain {
                what: "drift_deg",
                value: self.drift_deg,
                domain: "[0, inf)",
            });
        }
        Ok(())
    }

    pub fn pulses_per_segment(&self) -> usize {
        self.n_pulses / self.n_phases
    }

    /// Nominal scan phase of a pulse (no drift).
    pub fn scan_phase(&self, index: usize) -> f64 {
        match self.scan {
            ScanProfile::Stepped => TAU * (index / self.pulses_per_segment()) as f64 / self.n_phases as f64,
            ScanProfile::Continuous => TAU * index as f64 / self.n_pulses as f64,
        }
    }
}

/// One simulated pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub index: usize,
    /// Actual LO phase, scan plus drift, wrapped into `[0, 2π)`.
    pub theta_true: f64,
    pub charge_e: f64,
    pub lo_n: f64,
}

/// One calibrated quadrature measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSample {
    /// LO phase in radians as known to the experimenter.
    pub theta: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Acquisition {
    pub records: Vec<PulseRecord>,
    /// Quadratures tagged with the nominal scan phase.
    pub samples: Vec<QuadratureSample>,
    /// Charge-to-quadrature gain used for `samples`.
    pub gain: f64,
}

pub fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

fn pulse_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gaussian random walk starting at 0 whose end-to-end RMS is `drift_rad`.
fn drift_walk(config: &AcquisitionConfig) -> Vec<f64> {
    let n = config.n_pulses;
    if config.drift_deg == 0.0 || n < 2 {
        return vec![0.0; n];
    }
    let step = config.drift_deg.to_radians() / ((n - 1) as f64).sqrt();
    let mut rng = pulse_rng(config.seed, u64::MAX);
    let mut walk = Vec::with_capacity(n);
    let mut current = 0.0;
    walk.push(current);
    for _ in 1..n {
        let g: f64 = StandardNormal.sample(&mut rng);
        current += step * g;
        walk.push(current);
    }
    walk
}

/// Simulates a full phase-scanned acquisition of `rho`.
pub fn run_acquisition(
    rho: &DensityMatrix,
    params: &DetectorParams,
    config: &AcquisitionConfig,
) -> Result<Acquisition> {
    params.validate()?;
    config.validate()?;
    let detected = apply_loss(rho, params.eta_total)?;
    let sampler = QuadratureSampler::new(&detected)?;
    let drift = drift_walk(config);
    let gain = match config.calibration {
        Calibration::ModelGain => params.model_gain(),
        Calibration::Vacuum => (2.0 * params.vacuum_charge_variance()).sqrt(),
    };

    let records: Vec<PulseRecord> = (0..config.n_pulses)
        .into_par_iter()
        .map(|index| {
            let mut rng = pulse_rng(config.seed, index as u64);
            let theta_true = wrap_phase(config.scan_phase(index) + drift[index]);
            let x = sampler.sample(theta_true, &mut rng);
            let charge = pulse_charge(x, params, &mut rng);
            PulseRecord {
                index,
                theta_true,
                charge_e: charge.charge_e,
                lo_n: charge.lo_n,
            }
        })
        .collect();

    let samples = records
        .iter()
        .map(|r| QuadratureSample {
            theta: config.scan_phase(r.index),
            value: r.charge_e / gain,
        })
        .collect();
    Ok(Acquisition { records, samples, gain })
}

/// Effective efficiency of the vacuum-calibrated detector: optical
/// efficiency times the electronic-noise dilution
/// `κηN̄ / Var_vac`.
pub fn effective_efficiency(params: &DetectorParams) -> f64 {
    params.eta_total * params.shot_variance() / params.vacuum_charge_variance()
}

/// Mean phase drift per segment relative to the nominal scan, radians,
/// wrapped into `(−π, π]`.
pub fn segment_drift(acq: &Acquisition, config: &AcquisitionConfig) -> Vec<f64> {
    let per = config.pulses_per_segment();
    acq.records
        .chunks(per)
        .map(|seg| {
            seg.iter()
                .map(|r| (r.theta_true - config.scan_phase(r.index) + PI).rem_euclid(TAU) - PI)
                .sum::<f64>()
                / seg.len() as f64
        })
        .collect()
}
