//! Pulsed balanced homodyne detection.
//!
//! * [`fockstate`]: Fock-basis density matrices, loss, marginals, Wigner
//!   functions and fidelities.
//! * [`simulator`]: per-pulse Monte Carlo model of the detector.
//! * [`tomography`]: marginals, phase estimation, inverse Radon
//!   reconstruction of the Wigner function and pattern-function sampling of
//!   the density matrix.
//! * [`characterize`]: noise scaling fits, SNR, subtraction, spectra and
//!   linearity.
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characterize;
pub mod error;
pub mod fockstate;
pub mod numeric;
pub mod simulator;
pub mod tomography;

pub use error::{Error, Result};
pub use fockstate::{DensityMatrix, WignerGrid};
pub use num_complex::Complex64 as C64;
