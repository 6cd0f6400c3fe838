use rayon::prelude::*;

use super::marginals::{angular_weights, fold_phase, symmetric_range};
use super::pattern::{build_pattern_table, default_grid, minimum_half_width, pair_index, PatternTable};
use crate::error::{Error, Result};
use crate::fockstate::DensityMatrix;
use crate::numeric::{pairwise_reduce, REDUCTION_CHUNK};
use crate::simulator::QuadratureSample;
use crate::C64;

/// How samples are weighted across phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseWeighting {
    /// Every sample counts equally; right for phases drawn uniformly.
    #[default]
    Uniform,
    /// Samples form this many contiguous equal segments, each weighted by
    /// the angular interval its folded phase covers in `[0, π)`.
    Segments(usize),
}

/// Density matrix estimated by pattern-function sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedState {
    pub rho: DensityMatrix,
    /// Standard error of each element's modulus, row-major `dim × dim`.
    pub std_err: Vec<f64>,
    /// Standard error of `Σ n ρ̂_nn`, from the per-sample spread of
    /// `Σ n f_nn(x)` (the diagonal estimates are strongly correlated).
    pub mean_photon_number_err: f64,
    pub n_samples: usize,
}

impl ReconstructedState {
    pub fn std_err(&self, m: usize, n: usize) -> f64 {
        self.std_err[m * self.rho.dim() + n]
    }
}

/// Per-pair running sums of `z = f_mn(x) e^{i(m−n)θ}` and `|z|²`, plus the
/// photon-number kernel `Σ n f_nn(x)`.
#[derive(Clone)]
struct Moments {
    sum: Vec<C64>,
    sum_sq: Vec<f64>,
    number: f64,
    number_sq: f64,
    count: usize,
}

impl Moments {
    fn zero(pairs: usize) -> Self {
        Self {
            sum: vec![C64::new(0.0, 0.0); pairs],
            sum_sq: vec![0.0; pairs],
            number: 0.0,
            number_sq: 0.0,
            count: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        self.number += other.number;
        self.number_sq += other.number_sq;
        self.count += other.count;
        self
    }
}

fn accumulate(table: &PatternTable, samples: &[QuadratureSample]) -> Result<Moments> {
    let dim = table.dim();
    let pairs = table.pairs();
    let parts: Vec<Moments> = samples
        .par_chunks(REDUCTION_CHUNK)
        .map(|chunk| {
            let mut acc = Moments::zero(pairs);
            let mut f = vec![0.0; pairs];
            let mut rot = vec![C64::new(1.0, 0.0); dim];
            for s in chunk {
                if !table.interpolate_into(s.value, &mut f) {
                    return Err(Error::InvalidInput(format!(
                        "quadrature {} lies outside the pattern table",
                        s.value
                    )));
                }
                let step = C64::from_polar(1.0, s.theta);
                for d in 1..dim {
                    rot[d] = rot[d - 1] * step;
                }
                for m in 0..dim {
                    for n in 0..=m {
                        let k = pair_index(m, n);
                        acc.sum[k] += f[k] * rot[m - n];
                        acc.sum_sq[k] += f[k] * f[k];
                    }
                }
                let g: f64 = (1..dim).map(|n| n as f64 * f[pair_index(n, n)]).sum();
                acc.number += g;
                acc.number_sq += g * g;
            }
            acc.count = chunk.len();
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_reduce(parts, Moments::merge).unwrap_or_else(|| Moments::zero(pairs)))
}

/// Table covering `dim` and every sample value.
pub fn table_for_samples(samples: &[QuadratureSample], dim: usize) -> Result<PatternTable> {
    let reach = samples.iter().map(|s| s.value.abs()).fold(0.0, f64::max);
    let half_width = symmetric_range(reach).max(minimum_half_width(dim)) + 0.5;
    build_pattern_table(dim, &default_grid(dim, half_width))
}

/// `ρ̂_mn = ⟨f_mn(x_j) e^{i(m−n)θ_j}⟩` over samples with uniform weights.
pub fn sample_density_matrix(samples: &[QuadratureSample], dim: usize) -> Result<ReconstructedState> {
    sample_density_matrix_with(samples, &table_for_samples(samples, dim)?, PhaseWeighting::Uniform)
}

/// Pattern-function estimate using a prebuilt table and the given phase
/// weighting.
pub fn sample_density_matrix_with(
    samples: &[QuadratureSample],
    table: &PatternTable,
    weighting: PhaseWeighting,
) -> Result<ReconstructedState> {
    let dim = table.dim();
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to reconstruct from".into()));
    }
    if samples.iter().any(|s| !s.theta.is_finite()) {
        return Err(Error::InvalidInput("samples have unset phases".into()));
    }
    if samples.len() < 10 * dim * dim {
        log::warn!(
            "{} samples for a {dim}-dimensional reconstruction; at least {} recommended",
            samples.len(),
            10 * dim * dim
        );
    }
    let segments: Vec<&[QuadratureSample]> = match weighting {
        PhaseWeighting::Uniform => vec![samples],
        PhaseWeighting::Segments(k) => {
            if k == 0 || !samples.len().is_multiple_of(k) {
                return Err(Error::InvalidInput(format!(
                    "{} samples do not split into {k} equal segments",
                    samples.len()
                )));
            }
            samples.chunks(samples.len() / k).collect()
        }
    };
    let weights: Vec<f64> = if segments.len() == 1 {
        vec![1.0]
    } else {
        let folded: Vec<f64> = segments
            .iter()
            .map(|seg| {
                let (s, c) = seg
                    .iter()
                    .fold((0.0, 0.0), |(s, c), x| (s + x.theta.sin(), c + x.theta.cos()));
                fold_phase(s.atan2(c)).0
            })
            .collect();
        angular_weights(&folded)
            .into_iter()
            .map(|w| w / std::f64::consts::PI)
            .collect()
    };
    let moments: Vec<Moments> = segments
        .iter()
        .map(|seg| accumulate(table, seg))
        .collect::<Result<_>>()?;

    let pairs = table.pairs();
    let mut estimate = vec![C64::new(0.0, 0.0); pairs];
    let mut variance = vec![0.0; pairs];
    let mut number_variance = 0.0;
    for (mom, &u) in moments.iter().zip(&weights) {
        let n = mom.count as f64;
        let correction = if mom.count > 1 { n / (n - 1.0) } else { 0.0 };
        let g = mom.number / n;
        number_variance += u * u * ((mom.number_sq / n - g * g) * correction).max(0.0) / n;
        for k in 0..pairs {
            let mean = mom.sum[k] / n;
            estimate[k] += u * mean;
            // E|z|² − |E z|², unbiased
            let spread = ((mom.sum_sq[k] / n - mean.norm_sqr()) * correction).max(0.0);
            variance[k] += u * u * spread / n;
        }
    }
    let rho = DensityMatrix::from_upper(dim, |m, n| estimate[pair_index(m, n)].conj())?;
    let mut std_err = vec![0.0; dim * dim];
    for m in 0..dim {
        for n in 0..dim {
            std_err[m * dim + n] = variance[pair_index(m, n)].sqrt();
        }
    }
    Ok(ReconstructedState {
        rho,
        std_err,
        mean_photon_number_err: number_variance.sqrt(),
        n_samples: samples.len(),
    })
}

/// Gives every sample the phase of its segment, e.g. after
/// [`estimate_phases`](super::estimate_phases).
pub fn assign_phases(samples: &[QuadratureSample], phases: &[f64]) -> Result<Vec<QuadratureSample>> {
    if phases.is_empty() || !samples.len().is_multiple_of(phases.len()) {
        return Err(Error::InvalidInput(format!(
            "{} samples do not split into {} segments",
            samples.len(),
            phases.len()
        )));
    }
    let per = samples.len() / phases.len();
    Ok(samples
        .iter()
        .enumerate()
        .map(|(i, s)| QuadratureSample {
            theta: phases[i / per],
            value: s.value,
        })
        .collect())
}
