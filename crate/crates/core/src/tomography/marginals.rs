use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fockstate::DensityMatrix;
use crate::simulator::QuadratureSample;

/// Histogram range granularity: the symmetric range is `max |x|` rounded up
/// to a multiple of this.
pub const RANGE_STEP: f64 = 0.5;
pub const DEFAULT_BINS: usize = 128;

/// Phase-binned quadrature histograms, one row per scan segment.
///
/// Rows hold probability densities over `n_bins` equal bins spanning
/// `[−half_range, half_range]`. Histograms built from samples also keep the
/// raw counts and the exact per-segment sample moments; analytic marginals
/// carry the moments of their densities.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    n_bins: usize,
    half_range: f64,
    phases: Option<Vec<f64>>,
    counts: Option<Vec<u64>>,
    densities: Vec<f64>,
    totals: Vec<usize>,
    means: Vec<f64>,
    variances: Vec<f64>,
}

/// Circular mean of the phases, wrapped into `[0, 2π)`. `None` if any phase
/// is missing or the phases cancel.
fn circular_mean(thetas: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut c) = (0.0, 0.0);
    for t in thetas {
        if !t.is_finite() {
            return None;
        }
        s += t.sin();
        c += t.cos();
    }
    if s.hypot(c) < 1e-12 {
        return None;
    }
    Some(s.atan2(c).rem_euclid(TAU))
}

pub(crate) fn symmetric_range(max_abs: f64) -> f64 {
    ((max_abs / RANGE_STEP).ceil() * RANGE_STEP).max(RANGE_STEP)
}

/// Slices `samples` (acquisition order) into `n_phases` contiguous segments
/// and histograms each over a common symmetric range.
pub fn bin_marginals(samples: &[QuadratureSample], n_phases: usize, n_bins: usize) -> Result<Marginals> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples to bin".into()));
    }
    if n_phases == 0 || n_bins == 0 {
        return Err(Error::InvalidInput("n_phases and n_bins must be positive".into()));
    }
    if !samples.len().is_multiple_of(n_phases) {
        return Err(Error::InvalidInput(format!(
            "{} samples do not split into {n_phases} equal segments",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !s.value.is_finite()) {
        return Err(Error::InvalidInput("non-finite quadrature value".into()));
    }
    let per = samples.len() / n_phases;
    let half_range = symmetric_range(samples.iter().map(|s| s.value.abs()).fold(0.0, f64::max));
    let width = 2.0 * half_range / n_bins as f64;

    let mut counts = vec![0u64; n_phases * n_bins];
    let mut means = Vec::with_capacity(n_phases);
    let mut variances = Vec::with_capacity(n_phases);
    let mut phases = Some(Vec::with_capacity(n_phases));
    for (i, segment) in samples.chunks(per).enumerate() {
        let row = &mut counts[i * n_bins..(i + 1) * n_bins];
        for s in segment {
            let b = ((s.value + half_range) / width).floor() as isize;
            row[b.clamp(0, n_bins as isize - 1) as usize] += 1;
        }
        let n = segment.len() as f64;
        let mean = segment.iter().map(|s| s.value).sum::<f64>() / n;
        let var = if segment.len() > 1 {
            segment.iter().map(|s| (s.value - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        means.push(mean);
        variances.push(var);
        phases = phases.and_then(|mut p: Vec<f64>| {
            p.push(circular_mean(segment.iter().map(|s| s.theta))?);
            Some(p)
        });
    }
    let densities = counts.iter().map(|&c| c as f64 / (per as f64 * width)).collect();
    Ok(Marginals {
        n_bins,
        half_range,
        phases,
        counts: Some(counts),
        densities,
        totals: vec![per; n_phases],
        means,
        variances,
    })
}

impl Marginals {
    /// Exact bin-averaged marginals of `rho` at the given phases, for
    /// validating reconstructions without sampling noise.
    pub fn from_state(rho: &DensityMatrix, phases: &[f64], n_bins: usize, half_range: f64) -> Result<Self> {
        if phases.is_empty() || n_bins == 0 || !(half_range > 0.0) {
            return Err(Error::InvalidInput(
                "analytic marginals need phases, bins and a positive range".into(),
            ));
        }
        let width = 2.0 * half_range / n_bins as f64;
        // Simpson within each bin
        const SUB: usize = 16;
        let h = width / SUB as f64;
        let mut densities = Vec::with_capacity(phases.len() * n_bins);
        let mut means = Vec::with_capacity(phases.len());
        let mut variances = Vec::with_capacity(phases.len());
        for &theta in phases {
            let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
            for b in 0..n_bins {
                let lo = -half_range + b as f64 * width;
                let mut acc = 0.0;
                for j in 0..=SUB {
                    let x = lo + j as f64 * h;
                    let w = if j == 0 || j == SUB {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let p = w * rho.marginal_density(theta, x) * h / 3.0;
                    acc += p;
                    m1 += p * x;
                    m2 += p * x * x;
                }
                m0 += acc;
                densities.push(acc / width);
            }
            let mean = m1 / m0;
            means.push(mean);
            variances.push(m2 / m0 - mean * mean);
        }
        Ok(Self {
            n_bins,
            half_range,
            phases: Some(phases.iter().map(|t| t.rem_euclid(TAU)).collect()),
            counts: None,
            densities,
            totals: vec![0; phases.len()],
            means,
            variances,
        })
    }

    pub fn n_phases(&self) -> usize {
        self.means.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn half_range(&self) -> f64 {
        self.half_range
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.half_range / self.n_bins as f64
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.n_bins)
            .map(|b| -self.half_range + b as f64 * self.bin_width())
            .collect()
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        -self.half_range + (b as f64 + 0.5) * self.bin_width()
    }

    pub fn phases(&self) -> Option<&[f64]> {
        self.phases.as_deref()
    }

    /// Replaces the segment phases (wrapped into `[0, 2π)`).
    pub fn set_phases(&mut self, phases: &[f64]) -> Result<()> {
        if phases.len() != self.n_phases() {
            return Err(Error::InvalidInput(format!(
                "{} phases for {} segments",
                phases.len(),
                self.n_phases()
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite phase".into()));
        }
        self.phases = Some(phases.iter().map(|p| p.rem_euclid(TAU)).collect());
        Ok(())
    }

    pub fn clear_phases(&mut self) {
        self.phases = None;
    }

    /// Raw counts of segment `i`, if built from samples.
    pub fn counts(&self, i: usize) -> Option<&[u64]> {
        self.counts.as_ref().map(|c| &c[i * self.n_bins..(i + 1) * self.n_bins])
    }

    /// Probability density per bin of segment `i`.
    pub fn density(&self, i: usize) -> &[f64] {
        &self.densities[i * self.n_bins..(i + 1) * self.n_bins]
    }

    /// Sample count per segment (zero for analytic marginals).
    pub fn totals(&self) -> &[usize] {
        &self.totals
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Standard error of each segment mean; zero for analytic marginals.
    pub fn standard_errors(&self) -> Vec<f64> {
        self.variances
            .iter()
            .zip(&self.totals)
            .map(|(v, &n)| if n > 0 { (v / n as f64).sqrt() } else { 0.0 })
            .collect()
    }

    /// `segment,theta_rad,bin_center,count`. The phase column is empty while
    /// phases are unset; analytic marginals write densities in place of
    /// counts.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("segment,theta_rad,bin_center,count\n");
        for i in 0..self.n_phases() {
            let theta = self.phases.as_ref().map(|p| p[i].to_string()).unwrap_or_default();
            for b in 0..self.n_bins {
                let _ = match &self.counts {
                    Some(c) => writeln!(out, "{i},{theta},{},{}", self.bin_center(b), c[i * self.n_bins + b]),
                    None => writeln!(
                        out,
                        "{i},{theta},{},{}",
                        self.bin_center(b),
                        self.densities[i * self.n_bins + b]
                    ),
                };
            }
        }
        out
    }
}

/// Folds a phase into `[0, π)`, reporting whether the quadrature axis flips.
pub(crate) fn fold_phase(theta: f64) -> (f64, bool) {
    let t = theta.rem_euclid(TAU);
    if t >= PI {
        ((t - PI).min(PI.next_down()), true)
    } else {
        (t, false)
    }
}

/// Angular weights for projections at `folded` phases in `[0, π)`: half the
/// gap to each neighbour on the circle of circumference π. Sums to π.
pub(crate) fn angular_weights(folded: &[f64]) -> Vec<f64> {
    let n = folded.len();
    if n == 1 {
        return vec![PI];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| folded[a].total_cmp(&folded[b]));
    let mut weights = vec![0.0; n];
    for (k, &i) in order.iter().enumerate() {
        let prev = folded[order[(k + n - 1) % n]];
        let next = folded[order[(k + 1) % n]];
        let gap_prev = (folded[i] - prev).rem_euclid(PI);
        let gap_next = (next - folded[i]).rem_euclid(PI);
        weights[i] = 0.5 * (gap_prev + gap_next);
    }
    // duplicate phases split their shared gap; renormalize rounding drift
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w *= PI / total);
    } else {
        weights.iter_mut().for_each(|w| *w = PI / n as f64);
    }
    weights
}
