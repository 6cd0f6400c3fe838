//! Filtered back-projection from phase-binned marginals to the Wigner
//! function,
//!
//! ```text
//! W(q, p) = 1/(2π²) ∫_0^π dθ ∫ dx pr(x, θ) K(x − q cos θ − p sin θ),
//! K(y) = ∫_0^{k_c} k cos(ky) dk.
//! ```
//!
//! Segments are folded into `[0, π)` (`θ → θ − π`, `x → −x`) and weighted by
//! the angular interval they cover. Each histogram is treated as piecewise
//! constant, so the `x` integral is done exactly per bin with the
//! antiderivative of the kernel, `G(y) = (1 − cos k_c y)/y`.

use rayon::prelude::*;

use super::marginals::{angular_weights, fold_phase};
use super::Marginals;
use crate::error::{Error, Result};
use crate::fockstate::{validate_axis, WignerGrid};
use crate::numeric::weighted_least_squares;

pub const DEFAULT_CUTOFF: f64 = 7.25;

const SERIES_LIMIT: f64 = 1e-3;

/// `K(y) = (k_c y sin k_c y + cos k_c y − 1)/y²`, with its Taylor series for
/// `|y| < 1e-3`.
pub fn radon_kernel(y: f64, kc: f64) -> f64 {
    if y.abs() < SERIES_LIMIT {
        let u2 = (kc * y).powi(2);
        kc * kc * (0.5 - u2 / 8.0 + u2 * u2 / 144.0)
    } else {
        let u = kc * y;
        (u * u.sin() + u.cos() - 1.0) / (y * y)
    }
}

/// `∫_0^y K = (1 − cos k_c y)/y`, written without cancellation.
pub fn radon_kernel_integral(y: f64, kc: f64) -> f64 {
    if y == 0.0 {
        0.0
    } else {
        2.0 * (0.5 * kc * y).sin().powi(2) / y
    }
}

/// One folded, filtered projection sampled on a uniform `s` grid.
struct FilteredProjection {
    cos: f64,
    sin: f64,
    weight: f64,
    values: Vec<f64>,
}

impl FilteredProjection {
    fn at(&self, s: f64, s0: f64, ds: f64) -> f64 {
        let t = (s - s0) / ds;
        let k = (t.floor().max(0.0) as usize).min(self.values.len() - 2);
        let frac = t - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }
}

/// Filtered back-projection of `marginals` onto the grid.
pub fn inverse_radon(marginals: &Marginals, cutoff_kc: f64, q_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid> {
    if !(cutoff_kc > 0.0) || !cutoff_kc.is_finite() {
        return Err(Error::Domain {
            what: "cutoff",
            value: cutoff_kc,
            domain: "(0, inf)",
        });
    }
    validate_axis("q", q_axis)?;
    validate_axis("p", p_axis)?;
    let phases = marginals
        .phases()
        .ok_or_else(|| Error::InvalidInput("marginal phases are unset; estimate or assign them first".into()))?;
    let reach = q_axis[0]
        .abs()
        .max(q_axis[q_axis.len() - 1].abs())
        .max(p_axis[0].abs())
        .max(p_axis[p_axis.len() - 1].abs());
    if reach > marginals.half_range() + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "grid extends to {reach}, beyond the sampled quadrature range ±{}",
            marginals.half_range()
        )));
    }

    let folded: Vec<(f64, bool)> = phases.iter().map(|&t| fold_phase(t)).collect();
    let weights = angular_weights(&folded.iter().map(|f| f.0).collect::<Vec<_>>());
    let s_max = q_axis
        .iter()
        .flat_map(|q| [p_axis[0], p_axis[p_axis.len() - 1]].map(|p| q.hypot(p)))
        .fold(0.0, f64::max)
        + 1e-9;
    // The s step divides the bin width, so every `edge − s` lies on one
    // lattice and G is tabulated once for all projections.
    let n_bins = marginals.n_bins();
    let width = marginals.bin_width();
    let per_bin = (width / (0.02 / cutoff_kc).min(0.005)).ceil() as usize;
    let ds = width / per_bin as f64;
    let n_s = (2.0 * s_max / ds).ceil() as usize + 1;
    let s0 = -s_max;
    let offset = -marginals.half_range() - s0;
    let lattice: Vec<f64> = (0..n_s + n_bins * per_bin)
        .map(|j| radon_kernel_integral(offset + (j as f64 - (n_s - 1) as f64) * ds, cutoff_kc))
        .collect();
    // G(edge_b − s_k) = lattice[b·per_bin − k + n_s − 1]
    let g = |b: usize, k: usize| lattice[b * per_bin + n_s - 1 - k];

    let projections: Vec<FilteredProjection> = (0..marginals.n_phases())
        .into_par_iter()
        .map(|i| {
            let (phi, flip) = folded[i];
            let row = marginals.density(i);
            // a flipped row is read with x → −x; the bins are symmetric
            let density: Vec<f64> = if flip {
                row.iter().rev().copied().collect()
            } else {
                row.to_vec()
            };
            let values = (0..n_s)
                .map(|k| {
                    let mut lower = g(0, k);
                    let mut acc = 0.0;
                    for (b, d) in density.iter().enumerate() {
                        let upper = g(b + 1, k);
                        acc += d * (upper - lower);
                        lower = upper;
                    }
                    acc
                })
                .collect();
            FilteredProjection {
                cos: phi.cos(),
                sin: phi.sin(),
                weight: weights[i],
                values,
            }
        })
        .collect();

    let norm = 1.0 / (2.0 * std::f64::consts::PI.powi(2));
    WignerGrid::from_fn(q_axis.to_vec(), p_axis.to_vec(), |q, p| {
        norm * projections
            .iter()
            .map(|f| f.weight * f.at(q * f.cos + p * f.sin, s0, ds))
            .sum::<f64>()
    })
}

/// Elliptical Gaussian fitted to the main peak of a Wigner function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPeak {
    pub q0: f64,
    pub p0: f64,
    pub amplitude: f64,
    /// Standard deviations along the principal axes, larger first.
    pub sigma_major: f64,
    pub sigma_minor: f64,
}

impl GaussianPeak {
    pub fn mean_sigma(&self) -> f64 {
        (self.sigma_major * self.sigma_minor).sqrt()
    }
}

/// Fits `ln W` by a quadratic over grid points above `threshold` × the
/// maximum and within `radius` of it.
pub fn fit_gaussian_peak(grid: &WignerGrid, threshold: f64, radius: f64) -> Result<GaussianPeak> {
    let (qm, pm, wmax) = grid.peak();
    if !(wmax > 0.0) {
        return Err(Error::Numerical("Wigner function has no positive peak".into()));
    }
    let mut design = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for (iq, &q) in grid.q_axis().iter().enumerate() {
        for (ip, &p) in grid.p_axis().iter().enumerate() {
            let v = grid.value(iq, ip);
            let (dq, dp) = (q - qm, p - pm);
            if v > threshold * wmax && dq.hypot(dp) <= radius {
                design.push(vec![1.0, dq, dp, dq * dq, dp * dp, dq * dp]);
                y.push(v.ln());
                // ln W carries relative noise; weight by W² to favour the core
                w.push(v * v);
            }
        }
    }
    if y.len() < 6 {
        return Err(Error::Numerical("too few points above threshold for a peak fit".into()));
    }
    let c = weighted_least_squares(&design, &y, &w)?;
    // ln W = c0 + bᵀd − ½ dᵀ A d
    let (a11, a22, a12) = (-2.0 * c[3], -2.0 * c[4], -c[5]);
    let det = a11 * a22 - a12 * a12;
    if !(a11 > 0.0 && det > 0.0) {
        return Err(Error::Numerical("peak fit is not a maximum".into()));
    }
    let (dq, dp) = ((a22 * c[1] - a12 * c[2]) / det, (a11 * c[2] - a12 * c[1]) / det);
    let ln_amp = c[0] + 0.5 * (c[1] * dq + c[2] * dp);
    // covariance = A⁻¹, eigenvalues of the 2×2
    let (s11, s22, s12) = (a22 / det, a11 / det, -a12 / det);
    let mid = 0.5 * (s11 + s22);
    let half = (0.25 * (s11 - s22).powi(2) + s12 * s12).sqrt();
    Ok(GaussianPeak {
        q0: qm + dq,
        p0: pm + dp,
        amplitude: ln_amp.exp(),
        sigma_major: (mid + half).sqrt(),
        sigma_minor: (mid - half).max(0.0).sqrt(),
    })
}
