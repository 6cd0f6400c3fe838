use homodyne::characterize::*;
use homodyne::fockstate::DensityMatrix;
use homodyne::numeric::logspace;
use homodyne::simulator::{emit_trace, run_acquisition, AcquisitionConfig, DetectorParams, TraceConfig};

fn default_sweep(params: &DetectorParams, seed: u64) -> Vec<SweepPoint> {
    simulate_noise_sweep(params, &logspace(3e6, 3e8, 12), 50_000, seed).unwrap()
}

#[test]
fn noise_floor_and_square_root_scaling() {
    let fit = noise_scaling_fit(&default_sweep(&DetectorParams::default(), 1)).unwrap();
    assert!((fit.sigma_e_fit / 730.0 - 1.0).abs() < 0.05, "{fit:?}");
    assert!((fit.exponent_fit - 0.5).abs() < 0.02, "{fit:?}");
    let kappa_eta = DetectorParams::default().shot_variance() / DetectorParams::default().lo_photons;
    assert!((fit.gain_fit / kappa_eta - 1.0).abs() < 0.02);
    assert!(fit.excluded.iter().all(|x| !x));
}

#[test]
fn noiseless_electronics_give_a_zero_floor() {
    let params = DetectorParams {
        sigma_e: 0.0,
        ..Default::default()
    };
    let fit = noise_scaling_fit(&default_sweep(&params, 2)).unwrap();
    assert!(fit.sigma_e2_fit.abs() < 3.0 * fit.sigma_e2_err, "{fit:?}");
    assert!((fit.exponent_fit - 0.5).abs() < 0.02);
}

#[test]
fn balanced_detector_stays_shot_noise_limited_over_the_sweep() {
    // Poisson LO fluctuations leak as δ²κ²N, a fixed fraction δ²κ/η of the
    // shot noise, so a small imbalance never ends shot-noise limited operation
    let params = DetectorParams {
        imbalance: 1e-4,
        ..Default::default()
    };
    let m = measured_subtraction(&default_sweep(&params, 3)).unwrap();
    assert!(m.limited_by_sweep, "{m:?}");
    assert!((m.subtraction_db - 84.77).abs() < 0.01);
}

#[test]
fn classical_lo_noise_limits_the_subtraction() {
    let params = DetectorParams {
        imbalance: 0.01,
        lo_rin: 0.05,
        ..Default::default()
    };
    // (δκ·rin·N)² = κηN/2
    let threshold = params.eta_total / (2.0 * (params.imbalance * params.lo_rin).powi(2) * params.kappa);
    let lo = logspace(3e6, 3e8, 16);
    let step = lo[1] / lo[0];
    let m = measured_subtraction(&simulate_noise_sweep(&params, &lo, 50_000, 4).unwrap()).unwrap();
    assert!(!m.limited_by_sweep);
    assert!(m.subtraction_db < subtraction_db(3e8).unwrap());
    let n = m.max_shot_limited_photons;
    assert!(
        n <= threshold * 1.1 && n * step >= threshold / 1.1,
        "{n:e} vs {threshold:e}"
    );
}

fn vacuum_trace(params: &DetectorParams, pedestal_e: f64) -> homodyne::simulator::Trace {
    let config = AcquisitionConfig {
        n_pulses: 8192,
        seed: 5,
        ..Default::default()
    };
    let acq = run_acquisition(&DensityMatrix::vacuum(2).unwrap(), params, &config).unwrap();
    emit_trace(
        &acq.records,
        &TraceConfig {
            pedestal_e,
            ..Default::default()
        },
    )
    .unwrap()
}

#[test]
fn vacuum_noise_is_white_between_harmonics() {
    let params = DetectorParams {
        lo_photons: 2.3e7,
        ..Default::default()
    };
    let report = spectrum_report(
        &vacuum_trace(&params, 0.0),
        params.rep_rate_hz,
        &WelchOptions::default(),
    )
    .unwrap();
    assert!(report.n_segments >= 8);
    assert!(report.flatness_db < 3.0, "{:?}", report.band_means);
    assert!(report.psd.iter().all(|p| *p >= 0.0));
}

#[test]
fn repetition_rate_harmonics_are_found() {
    let params = DetectorParams {
        lo_photons: 2.3e7,
        ..Default::default()
    };
    let report = spectrum_report(
        &vacuum_trace(&params, 2000.0),
        params.rep_rate_hz,
        &WelchOptions::default(),
    )
    .unwrap();
    let found = report.harmonics();
    for k in 1..=3 {
        assert!(found.contains(&k), "harmonic {k} missing from {found:?}");
        let line = report.lines.iter().find(|l| l.harmonic == Some(k)).unwrap();
        assert!((line.frequency_hz - k as f64 * 204e3).abs() < 2.0 * report.bin_width_hz());
    }
    assert!(report.flatness_db < 3.0);
}
