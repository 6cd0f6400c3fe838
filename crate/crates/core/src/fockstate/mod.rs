//! Single-mode quantum states in a truncated Fock basis.
//!
//! # Quadrature convention
//!
//! Every module in this crate uses
//!
//! ```text
//! x̂_θ = (â e^{−iθ} + â† e^{iθ}) / √2
//! ```
//!
//! so the vacuum has quadrature variance 1/2 and a coherent state |α⟩ has
//! `⟨x̂_θ⟩ = √2 |α| cos(θ − arg α)`. The quadrature eigenstates are
//! `|x, θ⟩ = Σ_n e^{inθ} ψ_n(x) |n⟩`, hence
//!
//! ```text
//! pr(x, θ) = Σ_{mn} ρ_{mn} e^{−i(m−n)θ} ψ_m(x) ψ_n(x).
//! ```
//!
//! To convert to the variance-1/4 convention (`x̂ = (â + â†)/2`) divide
//! quadratures by √2 and multiply densities by √2.

mod hermite;
mod io;
mod wigner;

pub use hermite::{fill_wavefunctions, hermite_wavefunction, hermite_wavefunctions, MAX_HERMITE_ORDER};
pub(crate) use io::{data_lines, parse_fields};
pub(crate) use wigner::validate_axis;
pub use wigner::{wigner_from_density, wigner_point, WignerGrid};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{range, Error, Result};
use crate::numeric::ln_binomial;

/// Fock truncation used when none is given.
pub const DEFAULT_DIM: usize = 20;

/// Negative eigenvalues or densities smaller in magnitude than this are
/// treated as roundoff.
pub const ROUNDOFF_TOLERANCE: f64 = 1e-12;

/// Smallest eigenvalue accepted by [`DensityMatrix::validate`].
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Density matrix in the Fock basis, photon numbers `0..dim`.
///
/// Hermiticity is exact: every constructor stores `(A + A†)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    elements: Vec<C64>,
    truncated_weight: f64,
}

impl DensityMatrix {
    /// Builds a density matrix from row-major elements, symmetrizing to an
    /// exactly Hermitian matrix. Fails if the input is visibly non-Hermitian
    /// (deviation above 1e-9 of the largest element).
    pub fn from_elements(dim: usize, elements: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(range("dim", 0.0, ">= 1"));
        }
        if elements.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} elements for dim {dim}, got {}",
                dim * dim,
                elements.len()
            )));
        }
        if elements.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite density matrix element".into()));
        }
        let scale = elements.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let mut out = elements.clone();
        for m in 0..dim {
            for n in m..dim {
                let a = elements[m * dim + n];
                let b = elements[n * dim + m].conj();
                if (a - b).norm() > 1e-9 * scale {
                    return Err(Error::InvalidInput(format!(
                        "element ({m},{n}) is not the conjugate of ({n},{m})"
                    )));
                }
                let avg = 0.5 * (a + b);
                out[m * dim + n] = avg;
                out[n * dim + m] = avg.conj();
            }
            out[m * dim + m].im = 0.0;
        }
        Ok(Self {
            dim,
            elements: out,
            truncated_weight: 0.0,
        })
    }

    /// Builds from a generator `f(m, n)`; only `m ≤ n` is queried, the lower
    /// triangle is filled by conjugation.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        if dim == 0 {
            return Err(range("dim", 0.0, ">= 1"));
        }
        let mut elements = vec![C64::new(0.0, 0.0); dim * dim];
        for m in 0..dim {
            for n in m..dim {
                let z = f(m, n);
                elements[m * dim + n] = z;
                elements[n * dim + m] = z.conj();
            }
            elements[m * dim + m].im = 0.0;
        }
        Ok(Self {
            dim,
            elements,
            truncated_weight: 0.0,
        })
    }

    /// Pure state `|c⟩⟨c|` from Fock amplitudes.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        Self::from_upper(amplitudes.len(), |m, n| amplitudes[m] * amplitudes[n].conj())
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        fock_density_matrix(0, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.elements[m * self.dim + n]
    }

    /// Row-major elements.
    pub fn elements(&self) -> &[C64] {
        &self.elements
    }

    /// Probability weight that fell outside the truncation when the state was
    /// constructed. Never folded back into the matrix.
    pub fn truncated_weight(&self) -> f64 {
        self.truncated_weight
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|n| self.get(n, n).re).sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.get(n, n).re).sum()
    }

    /// Diagonal of the matrix; sums to the trace.
    pub fn photon_number_distribution(&self) -> Vec<f64> {
        (0..self.dim).map(|n| self.get(n, n).re).collect()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = DMatrix::from_fn(self.dim, self.dim, |r, c| self.get(r, c));
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Checks unit trace (to `trace_tol`, after accounting for the reported
    /// truncation weight) and positivity to [`PSD_TOLERANCE`].
    pub fn validate(&self, trace_tol: f64) -> Result<()> {
        let deficit = 1.0 - self.trace() - self.truncated_weight;
        if deficit.abs() > trace_tol {
            return Err(Error::Numerical(format!(
                "trace {} deviates from 1 by {deficit:e} beyond the reported truncation",
                self.trace()
            )));
        }
        let min = self.eigenvalues()[0];
        if min < -PSD_TOLERANCE {
            return Err(Error::Numerical(format!("negative eigenvalue {min:e}")));
        }
        if min < -ROUNDOFF_TOLERANCE {
            log::debug!("density matrix eigenvalue {min:e} treated as roundoff");
        }
        Ok(())
    }

    /// `U ρ U†` with `U = e^{iφ n̂}`: multiplies `ρ_{mn}` by `e^{i(m−n)φ}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let mut out = self.clone();
        for m in 0..self.dim {
            for n in 0..self.dim {
                out.elements[m * self.dim + n] *= C64::from_polar(1.0, (m as f64 - n as f64) * phi);
            }
        }
        out
    }

    /// Convex combination `Σ w_i ρ_i`; all states must share `dim`.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, r)| r.dim)
            .ok_or_else(|| Error::InvalidInput("empty mixture".into()))?;
        if parts.iter().any(|(_, r)| r.dim != dim) {
            return Err(Error::InvalidInput("mixture of states with different dim".into()));
        }
        let mut elements = vec![C64::new(0.0, 0.0); dim * dim];
        let mut truncated = 0.0;
        for (w, r) in parts {
            for (acc, z) in elements.iter_mut().zip(&r.elements) {
                *acc += *z * *w;
            }
            truncated += w * r.truncated_weight;
        }
        Ok(Self {
            dim,
            elements,
            truncated_weight: truncated,
        })
    }

    /// Quadrature probability density `pr(x, θ)`. Tiny negative values from
    /// truncation are clamped to zero.
    pub fn marginal_density(&self, theta: f64, x: f64) -> f64 {
        let mut psi = vec![0.0; self.dim];
        fill_wavefunctions(x, &mut psi);
        let value = self.marginal_from_wavefunctions(theta, &psi);
        if value < 0.0 {
            if value < -ROUNDOFF_TOLERANCE {
                log::warn!("marginal density {value:e} at x={x}, theta={theta} clamped to 0");
            }
            return 0.0;
        }
        value
    }

    pub(crate) fn marginal_from_wavefunctions(&self, theta: f64, psi: &[f64]) -> f64 {
        let mut total = 0.0;
        for m in 0..self.dim {
            total += self.get(m, m).re * psi[m] * psi[m];
            for n in (m + 1)..self.dim {
                // ρ_mn e^{−i(m−n)θ} + c.c.
                let phase = C64::from_polar(1.0, (n as f64 - m as f64) * theta);
                total += 2.0 * (self.get(m, n) * phase).re * psi[m] * psi[n];
            }
        }
        total
    }

    /// `⟨α|ρ|α⟩`.
    pub fn fidelity_with_coherent(&self, alpha: C64) -> f64 {
        let c = coherent_amplitudes(alpha, self.dim);
        let mut f = C64::new(0.0, 0.0);
        for m in 0..self.dim {
            for n in 0..self.dim {
                f += c[m].conj() * self.get(m, n) * c[n];
            }
        }
        if f.im.abs() > 1e-9 {
            log::warn!("fidelity has imaginary residue {:e}", f.im);
        }
        f.re
    }

    /// `⟨â⟩ = Σ_n √(n+1) ρ_{n+1,n}`.
    pub fn mean_amplitude(&self) -> C64 {
        (0..self.dim.saturating_sub(1))
            .map(|n| self.get(n + 1, n) * ((n + 1) as f64).sqrt())
            .sum()
    }

    /// Wigner function value at the phase-space origin, `(1/π) Σ (−1)ⁿ ρ_{nn}`.
    pub fn wigner_at_origin(&self) -> f64 {
        (0..self.dim)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * self.get(n, n).re)
            .sum::<f64>()
            / std::f64::consts::PI
    }

    pub fn apply_loss(&self, eta: f64) -> Result<Self> {
        apply_loss(self, eta)
    }
}

/// Fock amplitudes `⟨n|α⟩ = e^{−|α|²/2} αⁿ/√n!` for `n < dim`, built by the
/// ratio recursion so no factorial is formed.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut c = Vec::with_capacity(dim);
    let mut current = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            current = current * alpha / (n as f64).sqrt();
        }
        c.push(current);
    }
    c
}

/// `|α⟩⟨α|` truncated to `dim`. The Poisson tail beyond the truncation is
/// reported in [`DensityMatrix::truncated_weight`].
pub fn coherent_density_matrix(alpha: C64, dim: usize) -> Result<DensityMatrix> {
    if dim == 0 {
        return Err(range("dim", 0.0, ">= 1"));
    }
    if alpha.norm_sqr() > dim as f64 / 2.0 {
        log::warn!(
            "|alpha|^2 = {:.3} exceeds dim/2 = {}; truncation may be significant",
            alpha.norm_sqr(),
            dim as f64 / 2.0
        );
    }
    let c = coherent_amplitudes(alpha, dim);
    let mut rho = DensityMatrix::pure(&c)?;
    rho.truncated_weight = poisson_tail(alpha.norm_sqr(), dim);
    Ok(rho)
}

/// `P(N ≥ dim)` for a Poisson variable with the given mean.
fn poisson_tail(mean: f64, dim: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut term = (-mean).exp();
    let mut head = 0.0;
    for n in 0..dim {
        if n > 0 {
            term *= mean / n as f64;
        }
        head += term;
    }
    // summing the tail directly avoids cancellation when it is tiny
    let mut tail = 0.0;
    let mut t = term;
    for n in dim..dim + 2000 {
        t *= mean / n as f64;
        tail += t;
        if t < 1e-300 || t < tail * 1e-17 {
            break;
        }
    }
    if tail > 0.0 {
        tail
    } else {
        (1.0 - head).max(0.0)
    }
}

/// Number state `|n⟩⟨n|`.
pub fn fock_density_matrix(n: usize, dim: usize) -> Result<DensityMatrix> {
    if n >= dim {
        return Err(range("photon number", n as f64, format!("< dim = {dim}")));
    }
    DensityMatrix::from_upper(dim, |a, b| {
        if a == n && b == n {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Random mixed state `A A† / tr(A A†)` with `A` a complex Gaussian
/// (Ginibre) matrix.
pub fn random_density_matrix<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    use rand_distr::{Distribution, StandardNormal};
    if dim == 0 {
        return Err(range("dim", 0.0, ">= 1"));
    }
    let a: Vec<C64> = (0..dim * dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect();
    let mut elements = vec![C64::new(0.0, 0.0); dim * dim];
    for m in 0..dim {
        for n in 0..dim {
            elements[m * dim + n] = (0..dim).map(|k| a[m * dim + k] * a[n * dim + k].conj()).sum();
        }
    }
    let trace: f64 = (0..dim).map(|m| elements[m * dim + m].re).sum();
    elements.iter_mut().for_each(|z| *z /= trace);
    DensityMatrix::from_elements(dim, elements)
}

/// Beamsplitter loss with transmissivity `eta` (generalized Bernoulli
/// transform):
///
/// ```text
/// ρ'_{mn} = Σ_k √(B(m+k,k) B(n+k,k)) ρ_{m+k,n+k},
/// B(N,k) = C(N,k) η^{N−k} (1−η)^k.
/// ```
pub fn apply_loss(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain {
            what: "eta",
            value: eta,
            domain: "[0, 1]",
        });
    }
    let dim = rho.dim;
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let mut out = rho.clone();
    if eta == 0.0 {
        out.elements.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        out.elements[0] = C64::new(rho.trace(), 0.0);
        return Ok(out);
    }
    let (ln_eta, ln_loss) = (eta.ln(), (1.0 - eta).ln());
    // sqrt of the Bernoulli weight B(N, k), indexed [N][k]
    let mut root_weight = vec![0.0; dim * dim];
    for total in 0..dim {
        for k in 0..=total {
            let ln_b = ln_binomial(total, k) + (total - k) as f64 * ln_eta + k as f64 * ln_loss;
            root_weight[total * dim + k] = (0.5 * ln_b).exp();
        }
    }
    for m in 0..dim {
        for n in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..(dim - m.max(n)) {
                acc += rho.get(m + k, n + k) * root_weight[(m + k) * dim + k] * root_weight[(n + k) * dim + k];
            }
            out.elements[m * dim + n] = acc;
        }
        out.elements[m * dim + m].im = 0.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_states_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for dim in 1..7 {
            let rho = random_density_matrix(dim, &mut rng).unwrap();
            rho.validate(1e-12).unwrap();
        }
    }
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_diff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        a.elements()
            .iter()
            .zip(b.elements())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn vacuum_limit_of_coherent_state() {
        let rho = coherent_density_matrix(c(0.0), 5).unwrap();
        assert_eq!(rho, fock_density_matrix(0, 5).unwrap());
        assert_eq!(rho.truncated_weight(), 0.0);
    }

    #[test]
    fn coherent_state_photon_statistics() {
        let rho = coherent_density_matrix(c(2.24), 20).unwrap();
        let mean = 2.24f64 * 2.24;
        // Poisson weight computed independently: e^{-5.0176}
        assert!((rho.get(0, 0).re - 6.6202e-3).abs() < 1e-6);
        assert!((rho.mean_photon_number() - mean).abs() < 1e-3);
        assert!((rho.trace() + rho.truncated_weight() - 1.0).abs() < 1e-12);
        let mut factorial = 1.0;
        for n in 0..=15 {
            if n > 0 {
                factorial *= n as f64;
            }
            let want = (-mean).exp() * mean.powi(n) / factorial;
            let got = rho.get(n as usize, n as usize).re;
            assert!(((got - want) / want).abs() < 1e-12, "n={n}");
        }
        rho.validate(1e-9).unwrap();
    }

    #[test]
    fn fock_states() {
        let one = fock_density_matrix(1, 3).unwrap();
        assert_eq!(one.photon_number_distribution(), vec![0.0, 1.0, 0.0]);
        assert_eq!(one.mean_photon_number(), 1.0);
        assert!(fock_density_matrix(3, 3).is_err());
    }

    #[test]
    fn loss_examples() {
        let one = fock_density_matrix(1, 2).unwrap();
        let lossy = apply_loss(&one, 0.91).unwrap();
        assert!((lossy.get(0, 0).re - 0.09).abs() < 1e-14);
        assert!((lossy.get(1, 1).re - 0.91).abs() < 1e-14);
        assert!((lossy.mean_photon_number() - 0.91).abs() < 1e-14);

        let vac = fock_density_matrix(0, 4).unwrap();
        assert_eq!(apply_loss(&vac, 0.3).unwrap(), vac);

        let coh = coherent_density_matrix(C64::new(0.7, -0.4), 12).unwrap();
        assert_eq!(apply_loss(&coh, 1.0).unwrap(), coh);
        assert!(apply_loss(&coh, 1.2).is_err());
        assert!(apply_loss(&coh, -0.1).is_err());
    }

    #[test]
    fn total_loss_leaves_vacuum() {
        let coh = coherent_density_matrix(c(1.0), 10).unwrap();
        let out = apply_loss(&coh, 0.0).unwrap();
        assert!((out.get(0, 0).re - coh.trace()).abs() < 1e-15);
        assert!((out.trace() - coh.trace()).abs() < 1e-15);
    }

    #[test]
    fn loss_keeps_coherent_states_coherent() {
        let alpha = C64::new(1.1, 0.5);
        let eta = 0.63;
        let lossy = apply_loss(&coherent_density_matrix(alpha, 40).unwrap(), eta).unwrap();
        let direct = coherent_density_matrix(alpha * eta.sqrt(), 40).unwrap();
        assert!(max_diff(&lossy, &direct) < 1e-9);
    }

    #[test]
    fn marginals_of_vacuum_and_single_photon() {
        let vac = DensityMatrix::vacuum(4).unwrap();
        let one = fock_density_matrix(1, 4).unwrap();
        for &x in &[-1.7f64, -0.2, 0.0, 0.9, 2.5] {
            for &theta in &[0.0, 1.0, 4.0] {
                let g = (-x * x).exp() / PI.sqrt();
                assert!((vac.marginal_density(theta, x) - g).abs() < 1e-14);
                assert!((one.marginal_density(theta, x) - 2.0 * x * x * g).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn coherent_marginal_mean_follows_the_convention() {
        let alpha = C64::from_polar(2.24, 0.8);
        let rho = coherent_density_matrix(alpha, 30).unwrap();
        let h = 0.002;
        for &theta in &[0.0, 0.8, 2.0, 3.9] {
            let (mut norm, mut mean) = (0.0, 0.0);
            for i in -6000..=6000 {
                let x = i as f64 * h;
                let p = rho.marginal_density(theta, x);
                norm += p * h;
                mean += x * p * h;
            }
            let want = 2f64.sqrt() * 2.24 * (theta - 0.8).cos();
            assert!((norm - 1.0).abs() < 1e-6);
            assert!((mean - want).abs() < 1e-6, "theta={theta}: {mean} vs {want}");
        }
    }

    #[test]
    fn fidelity_examples() {
        let alpha = c(2.24);
        let rho = coherent_density_matrix(alpha, 20).unwrap();
        assert!(rho.fidelity_with_coherent(alpha) >= 0.999);
        let vac = DensityMatrix::vacuum(20).unwrap();
        assert!((vac.fidelity_with_coherent(alpha) - (-5.0176f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rotation_moves_the_coherent_phase() {
        let rho = coherent_density_matrix(c(1.3), 20).unwrap();
        let rotated = rho.rotated(0.9);
        let direct = coherent_density_matrix(C64::from_polar(1.3, 0.9), 20).unwrap();
        assert!(max_diff(&rotated, &direct) < 1e-14);
    }

    #[test]
    fn from_elements_rejects_non_hermitian_input() {
        let bad = vec![c(0.5), c(0.2), c(0.0), c(0.5)];
        assert!(DensityMatrix::from_elements(2, bad).is_err());
        let good = vec![c(0.5), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.5)];
        let rho = DensityMatrix::from_elements(2, good).unwrap();
        assert_eq!(rho.get(1, 0), C64::new(0.1, -0.2));
    }
}
