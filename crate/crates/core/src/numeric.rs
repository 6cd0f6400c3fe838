//! Small numerical helpers shared by the physics modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const EXACT_FACTORIAL_MAX: usize = 20;

/// `ln(n!)`. Exact product up to 20, Stirling series with
/// corrections above (absolute error below 1e-14 there).
pub fn ln_factorial(n: usize) -> f64 {
    if n <= EXACT_FACTORIAL_MAX {
        return (2..=n).map(|k| k as f64).product::<f64>().ln();
    }
    let x = n as f64 + 1.0;
    // ln Γ(x) for x > 21
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Nodes and weights of the `order`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if order == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[order - 1 - i] = z;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (base_x, base_w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * order);
    let mut ws = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in base_x.iter().zip(&base_w) {
            xs.push(mid + 0.5 * h * x);
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + step * i as f64).collect()
        }
    }
}

/// Result of [`weighted_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    /// Parameter covariance, row-major, scaled by the reduced χ² of the fit
    /// (NaN when there are no degrees of freedom left).
    pub covariance: Vec<f64>,
    /// `Σ w_i r_i²`
    pub chi2: f64,
}

impl LinearFit {
    pub fn std_err(&self, i: usize) -> f64 {
        let p = self.coefficients.len();
        self.covariance[i * p + i].sqrt()
    }
}

/// Weighted linear least squares: minimizes `Σ w_i (y_i − X_i·β)²`.
/// `design` holds one row per observation.
pub fn weighted_fit(design: &[Vec<f64>], y: &[f64], weights: &[f64]) -> Result<LinearFit> {
    let rows = design.len();
    if rows == 0 || rows != y.len() || rows != weights.len() {
        return Err(Error::InvalidInput("least squares: mismatched or empty inputs".into()));
    }
    let cols = design[0].len();
    if rows < cols {
        return Err(Error::InvalidInput(format!(
            "least squares: {rows} observations for {cols} parameters"
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidInput(
            "least squares: weights must be finite and non-negative".into(),
        ));
    }
    let a = DMatrix::from_fn(rows, cols, |r, c| design[r][c] * weights[r].sqrt());
    let b = DVector::from_iterator(rows, y.iter().zip(weights).map(|(y, w)| y * w.sqrt()));
    let svd = a.clone().svd(true, true);
    let beta = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::Numerical(format!("least squares: {e}")))?;
    let chi2 = (&a * &beta - &b).norm_squared();
    let scale = if rows > cols {
        chi2 / (rows - cols) as f64
    } else {
        f64::NAN
    };
    let covariance = (a.transpose() * &a)
        .try_inverse()
        .map(|m| m.iter().map(|v| v * scale).collect())
        .unwrap_or_else(|| vec![f64::NAN; cols * cols]);
    Ok(LinearFit {
        coefficients: beta.iter().copied().collect(),
        covariance,
        chi2,
    })
}

/// Coefficients of [`weighted_fit`].
pub fn weighted_least_squares(design: &[Vec<f64>], y: &[f64], weights: &[f64]) -> Result<Vec<f64>> {
    Ok(weighted_fit(design, y, weights)?.coefficients)
}

/// Ordinary straight-line fit `y = intercept + slope·x`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let design: Vec<Vec<f64>> = x.iter().map(|&x| vec![1.0, x]).collect();
    let beta = weighted_least_squares(&design, y, &vec![1.0; x.len()])?;
    Ok((beta[0], beta[1]))
}

/// `n` points evenly spaced in `log(x)` from `lo` to `hi`, both included.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

/// Leaf size of parallel reductions. Partial results are formed per chunk
/// and combined with [`pairwise_reduce`], so sums depend only on the input
/// order, never on thread scheduling.
pub const REDUCTION_CHUNK: usize = 4096;

/// Combines `parts` along a fixed balanced binary tree.
pub fn pairwise_reduce<T>(mut parts: Vec<T>, combine: impl Fn(T, T) -> T) -> Option<T> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut iter = parts.into_iter();
        while let Some(a) = iter.next() {
            match iter.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}
