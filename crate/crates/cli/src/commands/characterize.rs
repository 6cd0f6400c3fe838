use std::fmt::Write as _;
use std::path::Path;

use homodyne::characterize::{
    common_mode_rejection_db, linearity_check, measured_subtraction, noise_scaling_fit, read_sweep_csv,
    simulate_noise_sweep, snr_db, subtraction_db, write_sweep_csv,
};
use homodyne::numeric::{linspace, logspace};
use homodyne::simulator::DetectorParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{detector_params, read_input, write_output};
use crate::config::RunConfig;
use crate::error::{config_err, CliError};

/// Gain check: known charges injected at the amplifier input, each read
/// back as the mean of `repeats` pulses carrying electronic noise.
fn injected_steps(params: &DetectorParams, cfg: &RunConfig) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let injected = linspace(0.0, cfg.f64("linearity_full_scale_e"), cfg.usize("linearity_points"));
    let repeats = cfg.usize("linearity_repeats");
    let noise = Normal::new(0.0, params.sigma_e).map_err(|e| CliError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.u64("seed"));
    rng.set_stream(u64::MAX);
    let measured = injected
        .iter()
        .map(|q| (0..repeats).map(|_| q + noise.sample(&mut rng)).sum::<f64>() / repeats as f64)
        .collect();
    Ok((injected, measured))
}

pub fn characterize(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let params = detector_params(cfg)?;
    let input = cfg.get("input");
    let points = if input.is_empty() {
        let (lo, hi) = (cfg.f64("lo_min"), cfg.f64("lo_max"));
        if lo >= hi {
            return Err(CliError::Config(format!("lo_min = {lo} must be below lo_max = {hi}")));
        }
        simulate_noise_sweep(
            &params,
            &logspace(lo, hi, cfg.usize("points")),
            cfg.usize("pulses_per_point"),
            cfg.u64("seed"),
        )
        .map_err(config_err)?
    } else {
        read_sweep_csv(&read_input(input, "sweep CSV")?)?
    };
    let fit = noise_scaling_fit(&points)?;

    let mut text = String::new();
    let source = if input.is_empty() { "simulated" } else { input };
    let _ = writeln!(text, "sweep: {} points ({source})", points.len());
    let _ = writeln!(
        text,
        "sigma_e fit: {:.2} e (sigma_e^2 {:.5e} +/- {:.2e})",
        fit.sigma_e_fit, fit.sigma_e2_fit, fit.sigma_e2_err
    );
    let _ = writeln!(
        text,
        "gain fit: {:.6e} +/- {:.2e} e^2 per photon",
        fit.gain_fit, fit.gain_err
    );
    let _ = writeln!(text, "exponent fit: {:.4}", fit.exponent_fit);
    let excluded = fit.excluded.iter().filter(|x| **x).count();
    if excluded > 0 {
        let _ = writeln!(text, "excluded points: {excluded} (below the fitted background)");
    }

    let snr_n = cfg.opt_f64("snr_at").unwrap_or(params.lo_photons);
    let at = DetectorParams {
        lo_photons: snr_n,
        ..params.clone()
    };
    let _ = writeln!(
        text,
        "snr at {snr_n:e} photons: {:.3} dB",
        snr_db(&at).map_err(config_err)?
    );
    if let Some(n) = cfg.opt_f64("subtraction_at") {
        let _ = writeln!(
            text,
            "subtraction at {n:e} photons: {:.3} dB",
            subtraction_db(n).map_err(config_err)?
        );
    }
    match measured_subtraction(&points) {
        Ok(m) => {
            let bound = if m.limited_by_sweep {
                " (sweep end, lower bound)"
            } else {
                ""
            };
            let _ = writeln!(
                text,
                "measured subtraction: {:.3} dB at {:e} photons{bound}",
                m.subtraction_db, m.max_shot_limited_photons
            );
        }
        Err(e) => {
            let _ = writeln!(text, "measured subtraction: none ({e})");
        }
    }
    let _ = writeln!(
        text,
        "common-mode rejection: {:.2} dB (imbalance {})",
        common_mode_rejection_db(params.imbalance).map_err(config_err)?,
        params.imbalance
    );
    if cfg.usize("linearity_points") > 0 {
        let (injected, measured) = injected_steps(&params, cfg)?;
        let lin = linearity_check(&injected, &measured, cfg.f64("linearity_threshold"))?;
        let _ = writeln!(
            text,
            "linearity: max deviation {:.4}% of full scale, slope {:.6}, {}",
            100.0 * lin.max_deviation,
            lin.slope,
            if lin.passed { "pass" } else { "FAIL" }
        );
    }

    let header = cfg.header();
    write_output(out, "sweep.csv", &header, &write_sweep_csv(&points))?;
    write_output(out, "residuals.csv", &header, &fit.residuals_csv(&points))?;
    write_output(out, "report.txt", &header, &text)?;
    Ok(text)
}
