//! Harmonic-oscillator eigenfunctions
//! `ψ_n(x) = π^{-1/4} (2ⁿ n!)^{-1/2} H_n(x) e^{-x²/2}`.
//!
//! Evaluated by the three-term recursion on the normalized functions,
//! `ψ_{n+1} = √(2/(n+1)) x ψ_n − √(n/(n+1)) ψ_{n−1}`, which never forms a
//! raw Hermite polynomial and stays well scaled.

use crate::error::{range, Result};

/// Highest photon number accepted by [`hermite_wavefunction`].
pub const MAX_HERMITE_ORDER: usize = 100;

/// `π^{-1/4}`
pub const PI_POW_NEG_QUARTER: f64 = 0.751_125_544_464_942_5;

/// `ψ_n(x)`.
pub fn hermite_wavefunction(n: usize, x: f64) -> Result<f64> {
    if n > MAX_HERMITE_ORDER {
        return Err(range("photon number", n as f64, format!("0..={MAX_HERMITE_ORDER}")));
    }
    let mut out = [0.0; MAX_HERMITE_ORDER + 1];
    fill_wavefunctions(x, &mut out[..=n]);
    Ok(out[n])
}

/// `ψ_0(x) … ψ_{count−1}(x)`.
pub fn hermite_wavefunctions(count: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; count];
    fill_wavefunctions(x, &mut out);
    out
}

/// Writes `ψ_0(x) … ψ_{out.len()−1}(x)` into `out`.
pub fn fill_wavefunctions(x: f64, out: &mut [f64]) {
    let Some(first) = out.first_mut() else {
        return;
    };
    *first = PI_POW_NEG_QUARTER * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = ((2.0 / (nf + 1.0)).sqrt() * x * out[n]) - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_peak_and_parity() {
        assert!((hermite_wavefunction(0, 0.0).unwrap() - 0.751_126).abs() < 1e-6);
        assert_eq!(hermite_wavefunction(1, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn matches_high_precision_reference_values() {
        // mpmath, 30 digits, from the Hermite-polynomial definition
        let cases = [
            (2, 1.0, 0.322_144_182_556_737_6),
            (5, 0.7, 0.327_296_763_498_510_7),
            (17, -2.3, -0.218_303_681_611_431_7),
            (30, 4.1, -0.185_219_686_429_706_4),
            (50, 9.5, 0.403_827_931_912_872_5),
            (50, -0.3, 0.249_711_838_435_492_9),
        ];
        for (n, x, want) in cases {
            let got = hermite_wavefunction(n, x).unwrap();
            assert!((got - want).abs() < 1e-12, "psi_{n}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn order_above_cap_is_rejected() {
        assert!(hermite_wavefunction(MAX_HERMITE_ORDER + 1, 0.0).is_err());
    }

    #[test]
    fn normalized_and_orthogonal() {
        let h = 0.01;
        let xs: Vec<f64> = (-1200..=1200).map(|i| i as f64 * h).collect();
        let table: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_wavefunctions(12, x)).collect();
        for m in 0..12 {
            for n in 0..12 {
                let overlap: f64 = table.iter().map(|row| row[m] * row[n]).sum::<f64>() * h;
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((overlap - want).abs() < 1e-10, "<{m}|{n}> = {overlap}");
            }
        }
    }
}
