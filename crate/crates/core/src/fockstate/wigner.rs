use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::DensityMatrix;
use crate::error::{Error, Result};

/// Wigner function sampled on a rectangular phase-space grid.
///
/// `values[i * p_axis.len() + j]` is `W(q_axis[i], p_axis[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    q_axis: Vec<f64>,
    p_axis: Vec<f64>,
    values: Vec<f64>,
}

pub(crate) fn validate_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::InvalidInput(format!("{name} axis needs at least 2 points")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} axis has non-finite entries")));
    }
    let step = axis[1] - axis[0];
    if step <= 0.0 {
        return Err(Error::InvalidInput(format!("{name} axis is not strictly ascending")));
    }
    let tol = 1e-12 * step.abs().max(axis[0].abs()).max(1.0);
    for w in axis.windows(2) {
        if ((w[1] - w[0]) - step).abs() > tol {
            return Err(Error::InvalidInput(format!("{name} axis is not uniformly spaced")));
        }
    }
    Ok(())
}

impl WignerGrid {
    pub fn new(q_axis: Vec<f64>, p_axis: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_axis("q", &q_axis)?;
        validate_axis("p", &p_axis)?;
        if values.len() != q_axis.len() * p_axis.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} values for a {}x{} axis product",
                values.len(),
                q_axis.len(),
                p_axis.len()
            )));
        }
        Ok(Self { q_axis, p_axis, values })
    }

    /// Fills the grid by evaluating `f(q, p)` at every node.
    pub fn from_fn(q_axis: Vec<f64>, p_axis: Vec<f64>, f: impl Fn(f64, f64) -> f64 + Sync) -> Result<Self> {
        validate_axis("q", &q_axis)?;
        validate_axis("p", &p_axis)?;
        let values = q_axis
            .par_iter()
            .flat_map_iter(|&q| p_axis.iter().map(move |&p| (q, p)).collect::<Vec<_>>())
            .map(|(q, p)| f(q, p))
            .collect();
        Ok(Self { q_axis, p_axis, values })
    }

    pub fn q_axis(&self) -> &[f64] {
        &self.q_axis
    }

    pub fn p_axis(&self) -> &[f64] {
        &self.p_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.p_axis.len() + ip]
    }

    pub fn cell_area(&self) -> f64 {
        (self.q_axis[1] - self.q_axis[0]) * (self.p_axis[1] - self.p_axis[0])
    }

    /// Riemann sum `Σ W · ΔqΔp`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// `(q, p, W)` at the grid maximum.
    pub fn peak(&self) -> (f64, f64, f64) {
        let (idx, &w) = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is never empty");
        let np = self.p_axis.len();
        (self.q_axis[idx / np], self.p_axis[idx % np], w)
    }

    /// Bilinear interpolation; `None` outside the grid.
    pub fn interpolate(&self, q: f64, p: f64) -> Option<f64> {
        let locate = |axis: &[f64], v: f64| -> Option<(usize, f64)> {
            let step = axis[1] - axis[0];
            let t = (v - axis[0]) / step;
            if t < 0.0 || t > (axis.len() - 1) as f64 {
                return None;
            }
            let i = (t.floor() as usize).min(axis.len() - 2);
            Some((i, t - i as f64))
        };
        let (i, tq) = locate(&self.q_axis, q)?;
        let (j, tp) = locate(&self.p_axis, p)?;
        let v00 = self.value(i, j);
        let v01 = self.value(i, j + 1);
        let v10 = self.value(i + 1, j);
        let v11 = self.value(i + 1, j + 1);
        Some((1.0 - tq) * ((1.0 - tp) * v00 + tp * v01) + tq * ((1.0 - tp) * v10 + tp * v11))
    }
}

/// Exact Wigner function of `rho` on the grid, summed over the Laguerre
/// kernels `W = Σ ρ_{mn} W_{mn}(q, p)`.
///
/// The kernels are generated by the standard upward recursion in the
/// variable `β = (q + ip)/√2`, which stays bounded for all orders.
pub fn wigner_from_density(rho: &DensityMatrix, q_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid> {
    WignerGrid::from_fn(q_axis.to_vec(), p_axis.to_vec(), |q, p| wigner_point(rho, q, p))
}

/// `W(q, p)` for a single phase-space point.
pub fn wigner_point(rho: &DensityMatrix, q: f64, p: f64) -> f64 {
    let dim = rho.dim();
    let a = C64::new(q, p) / std::f64::consts::SQRT_2;
    let mut kernels = vec![C64::new(0.0, 0.0); dim];
    kernels[0] = C64::new((-2.0 * a.norm_sqr()).exp() / PI, 0.0);
    let mut w = rho.get(0, 0).re * kernels[0].re;
    for n in 1..dim {
        kernels[n] = 2.0 * a * kernels[n - 1] / (n as f64).sqrt();
        w += 2.0 * (rho.get(0, n) * kernels[n]).re;
    }
    for m in 1..dim {
        let mut temp = kernels[m];
        let mf = (m as f64).sqrt();
        kernels[m] = (2.0 * a.conj() * temp - mf * kernels[m - 1]) / mf;
        w += rho.get(m, m).re * kernels[m].re;
        for n in (m + 1)..dim {
            let next = (2.0 * a * kernels[n - 1] - mf * temp) / (n as f64).sqrt();
            temp = kernels[n];
            kernels[n] = next;
            w += 2.0 * (rho.get(m, n) * kernels[n]).re;
        }
    }
    w
}
