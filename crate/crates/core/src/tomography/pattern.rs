//! Pattern functions for direct sampling of density-matrix elements.
//!
//! The sampling kernel for `ρ_{mn}` is
//!
//! ```text
//! f_{mn}(x) = ⟨m| K(x̂ − x) |n⟩,   K(y) = ½ ∫ |k| e^{iky} dk,
//! ```
//!
//! which equals `∂/∂x [ψ_m(x) φ_n(x)]` (`m ≥ n`, `φ_n` the irregular
//! oscillator solution). It is evaluated here through its Fourier form
//!
//! ```text
//! f_{mn}(x) = Re[ i^d ∫_0^∞ k s_{mn}(k) e^{−ikx} dk ],   d = m − n,
//! s_{mn}(k) = ⟨m| D(k/√2) |n⟩ = √(n!/m!) b^d e^{−b²/2} L_n^{(d)}(b²),  b = k/√2,
//! ```
//!
//! The displacement matrix elements are bounded by one and obtained from a
//! normalized Laguerre recursion, and the integral is done by composite
//! Gauss-Legendre quadrature, so the construction stays stable for every
//! order up to [`MAX_PATTERN_DIM`].

use ndarray::Array2;

use crate::error::{range, Error, Result};
use crate::fockstate::validate_axis;
use crate::numeric::{composite_gauss_legendre, linspace, ln_factorial};

/// Largest supported Fock truncation.
pub const MAX_PATTERN_DIM: usize = 25;

const PANEL_WIDTH: f64 = 0.25;
const PANEL_ORDER: usize = 12;

/// Normalized displacement matrix elements `⟨n+d| D(b) |n⟩` for real `b`,
/// all `n + d < dim`. Indexed `[m * dim + n]` for `m ≥ n`.
pub fn displacement_elements(b: f64, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    let y = b * b;
    for d in 0..dim {
        let mut prev = 0.0;
        let mut current = if b == 0.0 {
            if d == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (d as f64 * b.abs().ln() - 0.5 * y - 0.5 * ln_factorial(d)).exp()
                * if b < 0.0 && d % 2 == 1 { -1.0 } else { 1.0 }
        };
        for n in 0..(dim - d) {
            out[(n + d) * dim + n] = current;
            let nf = n as f64;
            let df = d as f64;
            let next = ((2.0 * nf + df + 1.0 - y) * current - (nf * (nf + df)).sqrt() * prev)
                / ((nf + 1.0) * (nf + df + 1.0)).sqrt();
            prev = current;
            current = next;
        }
    }
    out
}

/// Upper integration limit in `k` beyond which every `s_{mn}` is negligible.
fn k_max(dim: usize) -> f64 {
    std::f64::consts::SQRT_2 * (2.0 * (dim as f64).sqrt() + 8.0)
}

/// Quadrature nodes in `k` and the per-pair weighted integrand
/// `w_j k_j s_{mn}(k_j)`, pairs ordered as [`pair_index`].
fn spectral_weights(dim: usize) -> (Vec<f64>, Array2<f64>) {
    let kmax = k_max(dim);
    let panels = (kmax / PANEL_WIDTH).ceil() as usize;
    let (ks, ws) = composite_gauss_legendre(0.0, kmax, panels, PANEL_ORDER);
    let pairs = dim * (dim + 1) / 2;
    let mut weights = Array2::<f64>::zeros((ks.len(), pairs));
    for (j, (&k, &w)) in ks.iter().zip(&ws).enumerate() {
        let elements = displacement_elements(k / std::f64::consts::SQRT_2, dim);
        for m in 0..dim {
            for n in 0..=m {
                weights[[j, pair_index(m, n)]] = w * k * elements[m * dim + n];
            }
        }
    }
    (ks, weights)
}

/// Index of the pair `(m, n)`, `m ≥ n`, in triangular order.
pub fn pair_index(m: usize, n: usize) -> usize {
    let (hi, lo) = if m >= n { (m, n) } else { (n, m) };
    hi * (hi + 1) / 2 + lo
}

/// `±1` and the trigonometric flavour of `Re[i^d e^{−ikx}]`.
fn parity_sign(d: usize) -> f64 {
    if d % 4 < 2 {
        1.0
    } else {
        -1.0
    }
}

/// `f_{mn}(x)` evaluated directly by quadrature, without a table.
pub fn pattern_function(m: usize, n: usize, x: f64) -> Result<f64> {
    let dim = m.max(n) + 1;
    if dim > MAX_PATTERN_DIM {
        return Err(range(
            "pattern function order",
            (dim - 1) as f64,
            format!("< {MAX_PATTERN_DIM}"),
        ));
    }
    let (ks, weights) = spectral_weights(dim);
    let col = pair_index(m, n);
    let d = m.abs_diff(n);
    let sum: f64 = ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let trig = if d.is_multiple_of(2) {
                (k * x).cos()
            } else {
                (k * x).sin()
            };
            weights[[j, col]] * trig
        })
        .sum();
    Ok(parity_sign(d) * sum)
}

/// Tabulated pattern functions on a uniform grid.
#[derive(Debug, Clone)]
pub struct PatternTable {
    dim: usize,
    x_grid: Vec<f64>,
    /// `values[k * pairs + pair_index(m, n)] = f_{mn}(x_k)`
    values: Vec<f64>,
}

/// Grid spacing that keeps linear interpolation of `f_{mn}` accurate to
/// ~1e-4 of its scale: the fastest oscillation has wavenumber
/// `≈ 2√(2·dim − 1)`.
pub fn recommended_spacing(dim: usize) -> f64 {
    let k = 2.0 * ((2 * dim) as f64 - 1.0).max(1.0).sqrt();
    (0.02 / k).min(0.01)
}

/// Smallest half-width the table must cover for `dim`.
pub fn minimum_half_width(dim: usize) -> f64 {
    5f64.max((2.0 * dim as f64).sqrt())
}

/// Uniform grid on `[−half_width, half_width]` at the recommended spacing.
pub fn default_grid(dim: usize, half_width: f64) -> Vec<f64> {
    let h = recommended_spacing(dim);
    let steps = (2.0 * half_width / h).ceil() as usize;
    linspace(-half_width, half_width, steps + 1)
}

/// Tabulates `f_{mn}` for all `m, n < dim` on `x_grid`.
pub fn build_pattern_table(dim: usize, x_grid: &[f64]) -> Result<PatternTable> {
    if dim == 0 || dim > MAX_PATTERN_DIM {
        return Err(range("dim", dim as f64, format!("1..={MAX_PATTERN_DIM}")));
    }
    validate_axis("x", x_grid)?;
    let needed = minimum_half_width(dim);
    if x_grid[0] > -needed || x_grid[x_grid.len() - 1] < needed {
        return Err(Error::InvalidInput(format!(
            "pattern table grid must cover |x| <= {needed:.3} for dim {dim}"
        )));
    }
    let (ks, weights) = spectral_weights(dim);
    let pairs = weights.ncols();
    let cos = Array2::from_shape_fn((x_grid.len(), ks.len()), |(i, j)| (ks[j] * x_grid[i]).cos());
    let sin = Array2::from_shape_fn((x_grid.len(), ks.len()), |(i, j)| (ks[j] * x_grid[i]).sin());
    let even = cos.dot(&weights);
    let odd = sin.dot(&weights);
    let mut values = vec![0.0; x_grid.len() * pairs];
    for m in 0..dim {
        for n in 0..=m {
            let col = pair_index(m, n);
            let d = m - n;
            let source = if d % 2 == 0 { &even } else { &odd };
            let sign = parity_sign(d);
            for k in 0..x_grid.len() {
                values[k * pairs + col] = sign * source[[k, col]];
            }
        }
    }
    Ok(PatternTable {
        dim,
        x_grid: x_grid.to_vec(),
        values,
    })
}

impl PatternTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn pairs(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    /// Tabulated `f_{mn}(x_k)`.
    pub fn at_node(&self, m: usize, n: usize, k: usize) -> f64 {
        self.values[k * self.pairs() + pair_index(m, n)]
    }

    pub fn covers(&self, x: f64) -> bool {
        x >= self.x_grid[0] && x <= self.x_grid[self.x_grid.len() - 1]
    }

    /// Interpolates every pair at `x` into `out` (length [`Self::pairs`]).
    /// Returns `false` if `x` lies outside the grid.
    pub fn interpolate_into(&self, x: f64, out: &mut [f64]) -> bool {
        if !self.covers(x) {
            return false;
        }
        let step = self.x_grid[1] - self.x_grid[0];
        let t = (x - self.x_grid[0]) / step;
        let k = (t.floor() as usize).min(self.x_grid.len() - 2);
        let frac = t - k as f64;
        let pairs = self.pairs();
        let lo = &self.values[k * pairs..(k + 1) * pairs];
        let hi = &self.values[(k + 1) * pairs..(k + 2) * pairs];
        for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
            *o = a + frac * (b - a);
        }
        true
    }

    /// `f_{mn}(x)` by linear interpolation.
    pub fn value(&self, m: usize, n: usize, x: f64) -> Option<f64> {
        let mut row = vec![0.0; self.pairs()];
        self.interpolate_into(x, &mut row).then(|| row[pair_index(m, n)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockstate::hermite_wavefunctions;

    /// Dawson's integral `D(x) = e^{−x²} ∫_0^x e^{t²} dt`, by Simpson's rule.
    fn dawson(x: f64) -> f64 {
        let steps = 4000;
        let h = x / steps as f64;
        let f = |t: f64| (t * t - x * x).exp();
        let inner: f64 = (1..steps)
            .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h))
            .sum();
        (f(0.0) + inner + f(x)) * h / 3.0
    }

    #[test]
    fn ground_pattern_function_matches_the_irregular_solution() {
        // ψ_0 φ_0 = 2D(x), so f_00 = 2D'(x) = 2 − 4x D(x)
        for &x in &[0.0, 0.3, 1.1, 2.5, 4.0, -3.2] {
            let want = 2.0 - 4.0 * x * dawson(x);
            let got = pattern_function(0, 0, x).unwrap();
            assert!((got - want).abs() < 1e-8, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn first_excited_pattern_functions_match_the_irregular_solution() {
        // φ_1 = a†φ_0 = −√2 π^{1/4} e^{x²/2}(1 − 2xD), ψ_1 = √2 x ψ_0:
        // ψ_1 φ_0 = 2√2 x D(x) and ψ_1 φ_1 = −2x(1 − 2xD(x)).
        let h = 1e-4;
        for &x in &[0.2, 0.9, 1.7, 3.0] {
            let f10 = |x: f64| 2.0 * std::f64::consts::SQRT_2 * x * dawson(x);
            let f11 = |x: f64| -2.0 * x * (1.0 - 2.0 * x * dawson(x));
            let d10 = (f10(x + h) - f10(x - h)) / (2.0 * h);
            let d11 = (f11(x + h) - f11(x - h)) / (2.0 * h);
            assert!((pattern_function(1, 0, x).unwrap() - d10).abs() < 1e-6, "f10 at {x}");
            assert!((pattern_function(1, 1, x).unwrap() - d11).abs() < 1e-6, "f11 at {x}");
        }
    }

    #[test]
    fn displacement_columns_are_normalized() {
        for &b in &[0.0, 0.4, 1.7, 3.0] {
            let dim = 70;
            let el = displacement_elements(b, dim);
            for n in 0..10 {
                // column n of a unitary: Σ_m |⟨m|D|n⟩|² = 1, using ⟨m|D(b)|n⟩ = (−1)^{n−m}⟨n|D(b)|m⟩
                let norm: f64 = (0..dim)
                    .map(|m| if m >= n { el[m * dim + n] } else { el[n * dim + m] })
                    .map(|v| v * v)
                    .sum();
                assert!((norm - 1.0).abs() < 1e-12, "b={b} n={n}: {norm}");
            }
        }
    }

    fn table(dim: usize) -> PatternTable {
        build_pattern_table(dim, &default_grid(dim, minimum_half_width(dim) + 3.0)).unwrap()
    }

    /// `∫ f_{mn}(x) ψ_k(x) ψ_l(x) dx` by trapezoid on the table grid.
    fn overlap(t: &PatternTable, m: usize, n: usize, k: usize, l: usize) -> f64 {
        let xs = t.x_grid();
        let h = xs[1] - xs[0];
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let psi = hermite_wavefunctions(k.max(l) + 1, x);
                let w = if i == 0 || i == xs.len() - 1 { 0.5 } else { 1.0 };
                w * t.at_node(m, n, i) * psi[k] * psi[l]
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn vacuum_orthogonality_examples() {
        let t = table(6);
        assert!((overlap(&t, 0, 0, 0, 0) - 1.0).abs() < 1e-3);
        assert!(overlap(&t, 1, 1, 0, 0).abs() < 1e-3);
    }

    #[test]
    fn sampling_identity_for_coherences() {
        let t = table(8);
        // ∫ f_mn ψ_k ψ_l = δ_mk δ_nl whenever k − l = m − n
        for (m, n) in [(3, 1), (5, 2), (7, 0), (4, 4)] {
            for shift in 0..3 {
                let (k, l) = (n + (m - n) + shift, n + shift);
                if k >= 8 {
                    continue;
                }
                let want = if k == m && l == n { 1.0 } else { 0.0 };
                let got = overlap(&t, m, n, k, l);
                assert!((got - want).abs() < 1e-3, "f_{m}{n} vs psi_{k}psi_{l}: {got}");
            }
        }
    }

    #[test]
    fn symmetric_in_its_indices() {
        let t = table(5);
        for x in [-2.0, 0.37, 4.4] {
            for m in 0..5 {
                for n in 0..5 {
                    assert_eq!(t.value(m, n, x), t.value(n, m, x));
                }
            }
        }
    }

    #[test]
    fn interpolation_matches_direct_evaluation() {
        let dim = 20;
        let t = table(dim);
        for (m, n) in [(19, 19), (19, 0), (12, 7), (0, 0)] {
            let scale = t
                .x_grid()
                .iter()
                .enumerate()
                .map(|(k, _)| t.at_node(m, n, k).abs())
                .fold(0.0, f64::max);
            for &x in &[-4.123_45, -0.011_1, 0.505_05, 2.713_57, 5.999_9] {
                let direct = pattern_function(m, n, x).unwrap();
                let interp = t.value(m, n, x).unwrap();
                assert!(
                    (interp - direct).abs() < 1e-4 * scale,
                    "f_{m}{n}({x}): {interp} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn rejects_unsupported_dim_and_short_grids() {
        assert!(build_pattern_table(MAX_PATTERN_DIM + 1, &default_grid(26, 12.0)).is_err());
        assert!(build_pattern_table(4, &default_grid(4, 3.0)).is_err());
    }
}
