use std::f64::consts::{SQRT_2, TAU};

use homodyne::fockstate::{
    coherent_density_matrix, fock_density_matrix, hermite_wavefunctions, random_density_matrix, wigner_from_density,
    DensityMatrix,
};
use homodyne::numeric::linspace;
use homodyne::simulator::{
    effective_efficiency, run_acquisition, AcquisitionConfig, Calibration, DetectorParams, QuadratureSample,
    QuadratureSampler,
};
use homodyne::tomography::*;
use homodyne::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform_draws(rho: &DensityMatrix, n: usize, seed: u64) -> Vec<QuadratureSample> {
    let sampler = QuadratureSampler::new(rho).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let theta = rng.random::<f64>() * TAU;
            QuadratureSample {
                theta,
                value: sampler.sample(theta, &mut rng),
            }
        })
        .collect()
}

fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Full-size coherent run, shot-noise calibrated, detected amplitude 2.24.
fn coherent_run(seed: u64) -> (Vec<QuadratureSample>, Vec<f64>, Marginals) {
    let params = DetectorParams::default();
    let source = 2.24 / effective_efficiency(&params).sqrt();
    let rho = coherent_density_matrix(C64::new(source, 0.0), 25).unwrap();
    let config = AcquisitionConfig {
        n_pulses: 262_144,
        calibration: Calibration::Vacuum,
        seed,
        ..Default::default()
    };
    let acq = run_acquisition(&rho, &params, &config).unwrap();
    let truth: Vec<f64> = acq
        .records
        .chunks(4096)
        .map(|seg| {
            let (s, c) = seg
                .iter()
                .fold((0.0, 0.0), |(s, c), r| (s + r.theta_true.sin(), c + r.theta_true.cos()));
            s.atan2(c).rem_euclid(TAU)
        })
        .collect();
    let mut marginals = bin_marginals(&acq.samples, 64, 128).unwrap();
    let phases = estimate_phases(&marginals, None).unwrap();
    marginals.set_phases(&phases).unwrap();
    (assign_phases(&acq.samples, &phases).unwrap(), truth, marginals)
}

#[test]
fn full_size_coherent_tomography() {
    let (samples, truth, marginals) = coherent_run(11);
    let phases = marginals.phases().unwrap();
    let rms = (phases
        .iter()
        .zip(&truth)
        .map(|(a, b)| wrap_distance(*a, *b).powi(2))
        .sum::<f64>()
        / 64.0)
        .sqrt();
    assert!(rms < 0.05, "phase rms error {rms}");

    let table = table_for_samples(&samples, 20).unwrap();
    let state = sample_density_matrix_with(&samples, &table, PhaseWeighting::Segments(64)).unwrap();
    let alpha = fit_coherent_amplitude(&state.rho);
    let report = reconstruct_report(&state, Some(alpha));
    assert!(report.fidelity.unwrap() >= 0.99, "{report}");
    assert!((report.mean_photon_number - 5.0).abs() <= 0.15, "{report}");
    assert!((alpha.norm() - 2.24).abs() < 0.05, "{alpha}");

    let axis = linspace(-6.0, 6.0, 121);
    let wigner = inverse_radon(&marginals, DEFAULT_CUTOFF, &axis, &axis).unwrap();
    let peak = fit_gaussian_peak(&wigner, 0.3, 2.0).unwrap();
    assert!((peak.q0.hypot(peak.p0) - SQRT_2 * 2.24).abs() < 0.05, "{peak:?}");
    assert!((peak.mean_sigma() / 0.5f64.sqrt() - 1.0).abs() < 0.05, "{peak:?}");
    assert!((wigner.integral() - 1.0).abs() < 0.05);
}

#[test]
fn phase_tracking_follows_the_drift() {
    let (_, truth, marginals) = coherent_run(12);
    let scan: Vec<f64> = (0..64).map(|i| TAU * i as f64 / 64.0).collect();
    let est = marginals.phases().unwrap();
    let err = |p: &[f64]| {
        p.iter()
            .zip(&truth)
            .map(|(a, b)| wrap_distance(*a, *b).powi(2))
            .sum::<f64>()
    };
    assert!(
        err(est) < err(&scan),
        "estimated phases should beat the nominal scan under drift"
    );
}

#[test]
fn orthogonality_up_to_twenty_photons() {
    let dim = 20;
    let grid = default_grid(dim, minimum_half_width(dim) + 3.0);
    let table = build_pattern_table(dim, &grid).unwrap();
    let h = grid[1] - grid[0];
    let psi: Vec<Vec<f64>> = grid.iter().map(|&x| hermite_wavefunctions(dim, x)).collect();
    let mut worst: f64 = 0.0;
    for m in 0..dim {
        for k in 0..dim {
            let integral: f64 = psi
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    let w = if i == 0 || i == grid.len() - 1 { 0.5 } else { 1.0 };
                    w * table.at_node(m, m, i) * row[k] * row[k]
                })
                .sum::<f64>()
                * h;
            let want = if m == k { 1.0 } else { 0.0 };
            worst = worst.max((integral - want).abs());
        }
    }
    assert!(worst < 1e-3, "worst deviation {worst}");
}

#[test]
fn sampling_recovers_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut inside, mut total) = (0usize, 0usize);
    for state in 0..50u64 {
        let dim = rng.random_range(2..=6);
        let rho = random_density_matrix(dim, &mut rng).unwrap();
        let samples = uniform_draws(&rho, 100_000, 1000 + state);
        let est = sample_density_matrix(&samples, dim).unwrap();
        for m in 0..dim {
            for n in m..dim {
                total += 1;
                if (est.rho.get(m, n) - rho.get(m, n)).norm() < 3.0 * est.std_err(m, n) {
                    inside += 1;
                }
            }
        }
    }
    let rate = inside as f64 / total as f64;
    assert!(rate >= 0.99, "{inside}/{total} elements within 3 standard errors");
}

#[test]
fn standard_errors_halve_when_samples_quadruple() {
    let rho = coherent_density_matrix(C64::from_polar(1.0, 0.4), 5).unwrap();
    let small = sample_density_matrix(&uniform_draws(&rho, 25_000, 1), 5).unwrap();
    let large = sample_density_matrix(&uniform_draws(&rho, 100_000, 2), 5).unwrap();
    for m in 0..5 {
        for n in 0..5 {
            let ratio = small.std_err(m, n) / large.std_err(m, n);
            assert!((ratio / 2.0 - 1.0).abs() < 0.2, "({m},{n}): {ratio}");
        }
    }
    let ratio = small.mean_photon_number_err / large.mean_photon_number_err;
    assert!((ratio / 2.0 - 1.0).abs() < 0.2);
}

#[test]
fn phase_rotation_is_covariant() {
    let rho = coherent_density_matrix(C64::from_polar(1.2, 0.3), 6).unwrap();
    let samples = uniform_draws(&rho, 40_000, 3);
    let delta = 0.7;
    let rotated: Vec<QuadratureSample> = samples
        .iter()
        .map(|s| QuadratureSample {
            theta: s.theta + delta,
            value: s.value,
        })
        .collect();
    let a = sample_density_matrix(&samples, 6).unwrap();
    let b = sample_density_matrix(&rotated, 6).unwrap();
    for m in 0..6 {
        for n in 0..6 {
            let expected = a.rho.get(m, n) * C64::from_polar(1.0, (m as f64 - n as f64) * delta);
            assert!(
                (b.rho.get(m, n) - expected).norm() < 1e-9 + a.std_err(m, n),
                "({m},{n})"
            );
        }
    }
}

#[test]
fn sampling_tracks_the_rotated_state() {
    // samples of e^{−iΔn̂} ρ e^{iΔn̂} are those of ρ with θ shifted by Δ
    let rho = coherent_density_matrix(C64::from_polar(1.0, 0.0), 5).unwrap();
    let rotated = rho.rotated(0.9);
    let est = sample_density_matrix(&uniform_draws(&rotated, 60_000, 4), 5).unwrap();
    for m in 0..5 {
        for n in 0..5 {
            assert!((est.rho.get(m, n) - rotated.get(m, n)).norm() < 4.0 * est.std_err(m, n));
        }
    }
}

#[test]
fn lossy_single_photon_recovery() {
    let truth = fock_density_matrix(1, 4).unwrap().apply_loss(0.91).unwrap();
    let est = sample_density_matrix(&uniform_draws(&truth, 100_000, 5), 4).unwrap();
    let report = reconstruct_report(&est, None);
    assert!((report.mean_photon_number - 0.91).abs() < 0.02);
    let w0 = est.rho.wigner_at_origin();
    assert!(w0 < -0.20, "{w0}");
}

/// Worst deviation from the exact Wigner function inside the 3σ region,
/// relative to the exact peak.
fn radon_deviation(rho: &DensityMatrix, cutoff: f64, phases: &[f64], bins: usize) -> f64 {
    let axis = linspace(-6.0, 6.0, 97);
    let marginals = Marginals::from_state(rho, phases, bins, 7.0).unwrap();
    let got = inverse_radon(&marginals, cutoff, &axis, &axis).unwrap();
    let exact = wigner_from_density(rho, &axis, &axis).unwrap();
    let peak = exact.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // σ² is the phase-averaged quadrature variance
    let mean = rho.mean_amplitude() * SQRT_2;
    let sigma = (rho.mean_photon_number() + 0.5 - mean.norm_sqr() / 2.0).sqrt();
    let mut worst: f64 = 0.0;
    for (iq, q) in axis.iter().enumerate() {
        for (ip, p) in axis.iter().enumerate() {
            if (q - mean.re).hypot(p - mean.im) < 3.0 * sigma {
                worst = worst.max((got.value(iq, ip) - exact.value(iq, ip)).abs());
            }
        }
    }
    worst / peak
}

#[test]
fn radon_matches_exact_wigner_functions_at_default_settings() {
    // 64 phases over 2π fold onto 32 distinct angles in [0, π)
    let scan: Vec<f64> = (0..64).map(|i| TAU * i as f64 / 64.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let states = [
        coherent_density_matrix(C64::from_polar(2.0, 1.1), 10).unwrap(),
        fock_density_matrix(1, 4).unwrap().apply_loss(0.91).unwrap(),
        fock_density_matrix(2, 4).unwrap(),
        random_density_matrix(6, &mut rng).unwrap(),
    ];
    for (i, rho) in states.iter().enumerate() {
        let dev = radon_deviation(rho, DEFAULT_CUTOFF, &scan, 128);
        assert!(dev < 0.05, "state {i}: {dev}");
    }
}

#[test]
fn radon_matches_exact_wigner_functions_up_to_nine_photons() {
    // Photon numbers up to 9 carry spatial frequencies up to √(2(4n+2)) ≈ 8.7,
    // beyond the default cutoff, and need finer angular and bin sampling.
    let phases: Vec<f64> = (0..64).map(|i| std::f64::consts::PI * i as f64 / 64.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for i in 0..6 {
        let rho = random_density_matrix(10, &mut rng).unwrap();
        let dev = radon_deviation(&rho, 10.0, &phases, 512);
        assert!(dev < 0.05, "dim-10 state {i}: {dev}");
    }
    let nine = fock_density_matrix(9, 10).unwrap();
    assert!(radon_deviation(&nine, 10.0, &phases, 512) < 0.05);
    assert!(radon_deviation(&nine, DEFAULT_CUTOFF, &phases, 512) > 0.05);
}
