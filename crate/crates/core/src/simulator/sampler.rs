use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fockstate::{fill_wavefunctions, DensityMatrix};
use crate::numeric::linspace;

/// Default half-width of the sampling grid, in quadrature units.
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;
/// Default node count of the sampling grid.
pub const DEFAULT_NODES: usize = 4097;

/// Inverse-CDF sampler for the quadrature marginals of a fixed state.
///
/// The marginal is split into its Fourier components in the phase,
/// `pr(x, θ) = Re Σ_d e^{idθ} A_d(x)`, and each component is integrated once
/// on the grid. The CDF at any phase is then an `O(dim)` sum per node, so
/// a draw costs a binary search over the grid followed by linear
/// interpolation between the bracketing nodes.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    dim: usize,
    nodes: Vec<f64>,
    /// Cumulative integrals, `cumulative[k * dim + d] = ∫_{−L}^{x_k} A_d`.
    cumulative: Vec<C64>,
}

impl QuadratureSampler {
    pub fn new(rho: &DensityMatrix) -> Result<Self> {
        Self::with_grid(rho, DEFAULT_HALF_WIDTH, DEFAULT_NODES)
    }

    pub fn with_grid(rho: &DensityMatrix, half_width: f64, nodes: usize) -> Result<Self> {
        if !(half_width > 0.0) || nodes < 2 {
            return Err(Error::InvalidInput(format!(
                "sampling grid needs half_width > 0 and >= 2 nodes (got {half_width}, {nodes})"
            )));
        }
        let dim = rho.dim();
        let xs = linspace(-half_width, half_width, nodes);
        let step = xs[1] - xs[0];
        let mut psi = vec![0.0; dim];
        let mut components = vec![C64::new(0.0, 0.0); nodes * dim];
        for (k, &x) in xs.iter().enumerate() {
            fill_wavefunctions(x, &mut psi);
            let row = &mut components[k * dim..(k + 1) * dim];
            for m in 0..dim {
                row[0] += rho.get(m, m).re * psi[m] * psi[m];
                for d in 1..(dim - m) {
                    row[d] += 2.0 * rho.get(m, m + d) * psi[m] * psi[m + d];
                }
            }
        }
        let mut cumulative = vec![C64::new(0.0, 0.0); nodes * dim];
        for k in 1..nodes {
            for d in 0..dim {
                let trapezoid = 0.5 * step * (components[(k - 1) * dim + d] + components[k * dim + d]);
                cumulative[k * dim + d] = cumulative[(k - 1) * dim + d] + trapezoid;
            }
        }
        Ok(Self {
            dim,
            nodes: xs,
            cumulative,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn phase_factors(&self, theta: f64) -> Vec<C64> {
        let step = C64::from_polar(1.0, theta);
        let mut out = Vec::with_capacity(self.dim);
        let mut current = C64::new(1.0, 0.0);
        for _ in 0..self.dim {
            out.push(current);
            current *= step;
        }
        out
    }

    fn cdf_at_node(&self, k: usize, phases: &[C64]) -> f64 {
        self.cumulative[k * self.dim..(k + 1) * self.dim]
            .iter()
            .zip(phases)
            .map(|(c, e)| (c * e).re)
            .sum()
    }

    /// Grid CDF at `x` and phase `theta`, normalized to the mass on the grid.
    pub fn cdf(&self, theta: f64, x: f64) -> f64 {
        let phases = self.phase_factors(theta);
        let last = self.nodes.len() - 1;
        let total = self.cdf_at_node(last, &phases);
        if x <= self.nodes[0] {
            return 0.0;
        }
        if x >= self.nodes[last] {
            return 1.0;
        }
        let step = self.nodes[1] - self.nodes[0];
        let t = (x - self.nodes[0]) / step;
        let k = (t.floor() as usize).min(last - 1);
        let frac = t - k as f64;
        let lo = self.cdf_at_node(k, &phases);
        let hi = self.cdf_at_node(k + 1, &phases);
        (lo + frac * (hi - lo)) / total
    }

    /// Quantile function at probability `u ∈ [0, 1)`.
    pub fn quantile(&self, theta: f64, u: f64) -> f64 {
        let phases = self.phase_factors(theta);
        let last = self.nodes.len() - 1;
        let target = u * self.cdf_at_node(last, &phases);
        // invariant: cdf(lo) <= target < cdf(hi)
        let (mut lo, mut hi) = (0usize, last);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf_at_node(mid, &phases) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c_lo = self.cdf_at_node(lo, &phases);
        let c_hi = self.cdf_at_node(hi, &phases);
        let frac = if c_hi > c_lo {
            ((target - c_lo) / (c_hi - c_lo)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        self.nodes[lo] + frac * (self.nodes[hi] - self.nodes[lo])
    }

    pub fn sample<R: Rng + ?Sized>(&self, theta: f64, rng: &mut R) -> f64 {
        self.quantile(theta, rng.random::<f64>())
    }
}

/// One draw from `pr(x, θ)` of `rho`. Builds a fresh sampler; use
/// [`QuadratureSampler`] directly when drawing repeatedly from one state.
pub fn sample_quadrature<R: Rng + ?Sized>(rho: &DensityMatrix, theta: f64, rng: &mut R) -> Result<f64> {
    Ok(QuadratureSampler::new(rho)?.sample(theta, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockstate::{coherent_density_matrix, fock_density_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn draws(rho: &DensityMatrix, theta: f64, n: usize, seed: u64) -> Vec<f64> {
        let sampler = QuadratureSampler::new(rho).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sampler.sample(theta, &mut rng)).collect()
    }

    fn mean_var(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        (mean, v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn vacuum_variance() {
        let v = draws(&DensityMatrix::vacuum(4).unwrap(), 0.3, 100_000, 1);
        let (mean, var) = mean_var(&v);
        assert!(mean.abs() < 0.01);
        assert!((var - 0.5).abs() < 0.01, "{var}");
    }

    #[test]
    fn coherent_mean() {
        let rho = coherent_density_matrix(C64::new(2.24, 0.0), 20).unwrap();
        let (mean, _) = mean_var(&draws(&rho, 0.0, 100_000, 2));
        assert!((mean - 2f64.sqrt() * 2.24).abs() < 0.01, "{mean}");
    }

    #[test]
    fn single_photon_central_hole() {
        // ∫_{|x|<0.1} 2x² e^{−x²}/√π dx by 2000-point midpoint rule
        let h = 0.2 / 2000.0;
        let oracle: f64 = (0..2000)
            .map(|i| {
                let x = -0.1 + (i as f64 + 0.5) * h;
                2.0 * x * x * (-x * x).exp() / PI.sqrt() * h
            })
            .sum();
        // mpmath quadrature: 7.477553e-4
        assert!((oracle - 7.477_553e-4).abs() < 1e-9);
        let rho = fock_density_matrix(1, 3).unwrap();
        let v = draws(&rho, 1.0, 100_000, 3);
        let frac = v.iter().filter(|x| x.abs() < 0.1).count() as f64 / v.len() as f64;
        // binomial standard error √(p/N) ≈ 8.6e-5
        assert!((frac - oracle).abs() < 2.6e-4, "{frac}");
    }

    #[test]
    fn kolmogorov_smirnov_distance_is_small() {
        let rho = coherent_density_matrix(C64::from_polar(1.2, 0.7), 16).unwrap();
        let theta = 2.0;
        let mut v = draws(&rho, theta, 10_000, 4);
        v.sort_by(f64::total_cmp);
        // analytic CDF by fine midpoint integration of the marginal
        let h = 1e-3;
        let analytic_cdf = |x: f64| -> f64 {
            let steps = ((x + 10.0) / h) as usize;
            (0..steps)
                .map(|i| rho.marginal_density(theta, -10.0 + (i as f64 + 0.5) * h) * h)
                .sum()
        };
        let n = v.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, x) in v.iter().enumerate().step_by(50) {
            let f = analytic_cdf(*x);
            ks = ks.max((f - i as f64 / n).abs()).max((f - (i + 1) as f64 / n).abs());
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn quantile_inverts_cdf() {
        let rho = coherent_density_matrix(C64::new(0.4, -1.0), 12).unwrap();
        let sampler = QuadratureSampler::new(&rho).unwrap();
        for &u in &[0.01, 0.3, 0.5, 0.77, 0.999] {
            let x = sampler.quantile(1.3, u);
            assert!((sampler.cdf(1.3, x) - u).abs() < 1e-9);
        }
    }
}
