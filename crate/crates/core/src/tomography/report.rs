use std::fmt;
use std::fmt::Write as _;

use super::ReconstructedState;
use crate::fockstate::DensityMatrix;
use crate::numeric::ln_factorial;
use crate::C64;

/// Summary of a reconstructed state.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub n_samples: usize,
    pub mean_photon_number: f64,
    pub mean_photon_number_err: f64,
    pub photon_distribution: Vec<f64>,
    pub photon_distribution_err: Vec<f64>,
    /// Poisson distribution with the same mean.
    pub poisson_reference: Vec<f64>,
    pub trace: f64,
    pub reference_alpha: Option<C64>,
    pub fidelity: Option<f64>,
}

pub fn poisson_distribution(mean: f64, len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| {
            if mean <= 0.0 {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (n as f64 * mean.ln() - mean - ln_factorial(n)).exp()
            }
        })
        .collect()
}

pub fn reconstruct_report(state: &ReconstructedState, reference_alpha: Option<C64>) -> ReconstructionReport {
    let rho = &state.rho;
    let mean = rho.mean_photon_number();
    ReconstructionReport {
        n_samples: state.n_samples,
        mean_photon_number: mean,
        mean_photon_number_err: state.mean_photon_number_err,
        photon_distribution: rho.photon_number_distribution(),
        photon_distribution_err: (0..rho.dim()).map(|n| state.std_err(n, n)).collect(),
        poisson_reference: poisson_distribution(mean, rho.dim()),
        trace: rho.trace(),
        reference_alpha,
        fidelity: reference_alpha.map(|a| rho.fidelity_with_coherent(a)),
    }
}

impl ReconstructionReport {
    /// `n,probability,std_err,poisson`
    pub fn photon_csv(&self) -> String {
        let mut out = String::from("n,probability,std_err,poisson\n");
        for (n, ((p, e), q)) in self
            .photon_distribution
            .iter()
            .zip(&self.photon_distribution_err)
            .zip(&self.poisson_reference)
            .enumerate()
        {
            let _ = writeln!(out, "{n},{p},{e},{q}");
        }
        out
    }
}

/// Coherent amplitude maximizing `⟨α|ρ|α⟩`, by compass search started
/// from `⟨a⟩`.
pub fn fit_coherent_amplitude(rho: &DensityMatrix) -> C64 {
    let mut best = rho.mean_amplitude();
    let mut best_f = rho.fidelity_with_coherent(best);
    let mut step = 0.1f64.max(0.05 * best.norm());
    let directions = [
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, -1.0),
    ];
    while step > 1e-7 {
        let mut improved = false;
        for d in directions {
            let trial = best + d * step;
            let f = rho.fidelity_with_coherent(trial);
            if f > best_f {
                best = trial;
                best_f = f;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

impl fmt::Display for ReconstructionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples: {}", self.n_samples)?;
        writeln!(f, "trace: {:.6}", self.trace)?;
        writeln!(
            f,
            "mean photon number: {:.4} +/- {:.4}",
            self.mean_photon_number, self.mean_photon_number_err
        )?;
        if let Some(a) = self.reference_alpha {
            writeln!(f, "reference alpha: {:.4} {:+.4}i", a.re, a.im)?;
        }
        if let Some(fid) = self.fidelity {
            writeln!(f, "fidelity: {fid:.4}")?;
        }
        writeln!(f, "n  p(n)  err  poisson")?;
        for (n, ((p, e), q)) in self
            .photon_distribution
            .iter()
            .zip(&self.photon_distribution_err)
            .zip(&self.poisson_reference)
            .enumerate()
        {
            writeln!(f, "{n}  {p:.5}  {e:.5}  {q:.5}")?;
        }
        Ok(())
    }
}
