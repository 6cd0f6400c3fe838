use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::path::Path;

use homodyne::numeric::linspace;
use homodyne::simulator::read_acquisition_csv;
use homodyne::tomography::{
    assign_phases, bin_marginals, estimate_phases, fit_coherent_amplitude, fit_gaussian_peak, inverse_radon,
    reconstruct_report, sample_density_matrix_with, table_for_samples, PhaseWeighting,
};
use homodyne::{Error, C64};

use super::{auto_phases, read_input, write_output};
use crate::config::RunConfig;
use crate::error::CliError;

enum Reference {
    None,
    Fit,
    Given(C64),
}

fn parse_reference(text: &str) -> Result<Reference, CliError> {
    let bad = || CliError::Config(format!("ref_alpha: '{text}' is not none, fit, or re[,im]"));
    match text {
        "none" => Ok(Reference::None),
        "fit" => Ok(Reference::Fit),
        _ => {
            let mut parts = text.split(',').map(str::trim);
            let re: f64 = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let im: f64 = match parts.next() {
                Some(s) => s.parse().map_err(|_| bad())?,
                None => 0.0,
            };
            if parts.next().is_some() || !re.is_finite() || !im.is_finite() {
                return Err(bad());
            }
            Ok(Reference::Given(C64::new(re, im)))
        }
    }
}

fn wrap(theta: f64) -> f64 {
    (theta + PI).rem_euclid(TAU) - PI
}

pub fn reconstruct(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let reference = parse_reference(cfg.get("ref_alpha"))?;
    let input = cfg.get("input");
    let samples = read_acquisition_csv(&read_input(input, "acquisition CSV")?)?;

    let mut marginals = bin_marginals(
        &samples,
        cfg.opt_usize("n_phases").unwrap_or_else(|| auto_phases(samples.len())),
        cfg.usize("n_bins"),
    )?;
    let scan = marginals.phases().map(<[f64]>::to_vec);
    let drift = match cfg.get("phases") {
        "scan" => {
            if scan.is_none() {
                return Err(CliError::Data(format!(
                    "{input} carries no LO phases; phases=scan needs them"
                )));
            }
            None
        }
        _ => {
            let estimated = estimate_phases(&marginals, cfg.opt_f64("alpha_hint")).map_err(|e| match e {
                Error::PhaseUnresolvable { .. } => CliError::Data(format!(
                    "{e}. Rerun with --phases scan to use the recorded scan phases."
                )),
                other => other.into(),
            })?;
            marginals.set_phases(&estimated)?;
            scan.map(|s| s.iter().zip(&estimated).map(|(s, e)| wrap(e - s)).collect::<Vec<f64>>())
        }
    };
    let phases = marginals.phases().expect("phases set above").to_vec();
    let samples = assign_phases(&samples, &phases)?;

    let table = table_for_samples(&samples, cfg.usize("dim"))?;
    let weighting = match cfg.get("weighting") {
        "uniform" => PhaseWeighting::Uniform,
        _ => PhaseWeighting::Segments(marginals.n_phases()),
    };
    let state = sample_density_matrix_with(&samples, &table, weighting)?;
    let alpha = match reference {
        Reference::None => None,
        Reference::Fit => Some(fit_coherent_amplitude(&state.rho)),
        Reference::Given(a) => Some(a),
    };
    let report = reconstruct_report(&state, alpha);

    let half = cfg.f64("wigner_half_width").min(marginals.half_range());
    let axis = linspace(-half, half, cfg.usize("wigner_points"));
    let wigner = inverse_radon(&marginals, cfg.f64("cutoff"), &axis, &axis)?;

    let mut text = String::new();
    let _ = writeln!(text, "input: {input}");
    let _ = writeln!(text, "phases: {}", cfg.get("phases"));
    match &drift {
        Some(d) => {
            let rms = (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt();
            let max = d.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let _ = writeln!(
                text,
                "phase drift: rms {:.3} deg, max {:.3} deg",
                rms.to_degrees(),
                max.to_degrees()
            );
        }
        None => text.push_str("phase drift: not estimated (scan phases)\n"),
    }
    text.push_str(&report.to_string());
    let _ = writeln!(text, "W(0,0) from density matrix: {:.4}", state.rho.wigner_at_origin());
    let _ = writeln!(text, "wigner grid: +/-{half} with {} points per axis", axis.len());
    let _ = writeln!(text, "wigner integral: {:.4}", wigner.integral());
    let w_min = wigner.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let _ = writeln!(text, "wigner minimum: {w_min:.4}");
    match fit_gaussian_peak(&wigner, 0.3, 2.0) {
        Ok(peak) => {
            let _ = writeln!(
                text,
                "wigner peak: q0 {:.4}, p0 {:.4}, height {:.4}",
                peak.q0, peak.p0, peak.amplitude
            );
            let _ = writeln!(
                text,
                "wigner peak sigma: {:.4} (major {:.4}, minor {:.4}; vacuum 0.7071)",
                peak.mean_sigma(),
                peak.sigma_major,
                peak.sigma_minor
            );
        }
        Err(e) => {
            let _ = writeln!(text, "wigner peak: no Gaussian fit ({e})");
        }
    }

    let header = cfg.header();
    write_output(out, "density.csv", &header, &state.rho.to_csv())?;
    write_output(out, "photon_numbers.csv", &header, &report.photon_csv())?;
    write_output(out, "wigner.csv", &header, &wigner.to_csv())?;
    write_output(out, "marginals.csv", &header, &marginals.to_csv())?;
    let mut phase_csv = String::from("segment,phase_rad,drift_rad\n");
    for (i, p) in phases.iter().enumerate() {
        let d = drift.as_ref().map_or(0.0, |d| d[i]);
        let _ = writeln!(phase_csv, "{i},{p},{d}");
    }
    write_output(out, "phases.csv", &header, &phase_csv)?;
    write_output(out, "report.txt", &header, &text)?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_forms() {
        assert!(matches!(parse_reference("none"), Ok(Reference::None)));
        assert!(matches!(parse_reference("fit"), Ok(Reference::Fit)));
        assert!(matches!(parse_reference("2.24"), Ok(Reference::Given(a)) if a == C64::new(2.24, 0.0)));
        assert!(matches!(parse_reference("1, -2"), Ok(Reference::Given(a)) if a == C64::new(1.0, -2.0)));
        assert!(parse_reference("1,2,3").is_err());
        assert!(parse_reference("x").is_err());
    }
}
