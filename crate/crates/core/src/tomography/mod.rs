//! Reconstruction of a state from quadrature samples.
//!
//! Samples are sliced into scan segments and histogrammed ([`bin_marginals`]);
//! segment phases follow from the segment means of a state with a coherent
//! amplitude ([`estimate_phases`]). The Wigner function comes from filtered
//! back-projection of the histograms ([`inverse_radon`]) and the density
//! matrix from pattern-function sampling of the raw samples
//! ([`sample_density_matrix`]).

mod marginals;
mod pattern;
mod phase;
mod radon;
mod report;
mod sampling;

pub use marginals::{bin_marginals, Marginals, DEFAULT_BINS, RANGE_STEP};
pub use pattern::{
    build_pattern_table, default_grid, displacement_elements, minimum_half_width, pair_index, pattern_function,
    recommended_spacing, PatternTable, MAX_PATTERN_DIM,
};
pub use phase::{estimate_phases, PHASE_SIGNIFICANCE};
pub use radon::{fit_gaussian_peak, inverse_radon, radon_kernel, radon_kernel_integral, GaussianPeak, DEFAULT_CUTOFF};
pub use report::{fit_coherent_amplitude, poisson_distribution, reconstruct_report, ReconstructionReport};
pub use sampling::{
    assign_phases, sample_density_matrix, sample_density_matrix_with, table_for_samples, PhaseWeighting,
    ReconstructedState,
};
