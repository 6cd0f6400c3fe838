use std::path::Path;

use homodyne::simulator::{
    effective_efficiency, run_acquisition, write_acquisition_csv, AcquisitionConfig, Calibration, ScanProfile,
};

use super::{auto_phases, detector_params, signal_state, write_output};
use crate::config::RunConfig;
use crate::error::{config_err, CliError};

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let params = detector_params(cfg)?;
    let acq_cfg = AcquisitionConfig {
        n_pulses: cfg.usize("pulses"),
        n_phases: cfg
            .opt_usize("n_phases")
            .unwrap_or_else(|| auto_phases(cfg.usize("pulses"))),
        scan: match cfg.get("scan") {
            "continuous" => ScanProfile::Continuous,
            _ => ScanProfile::Stepped,
        },
        drift_deg: cfg.f64("drift_deg"),
        seed: cfg.u64("seed"),
        calibration: match cfg.get("calibration") {
            "model" => Calibration::ModelGain,
            _ => Calibration::Vacuum,
        },
    };
    acq_cfg.validate().map_err(config_err)?;
    let efficiency = effective_efficiency(&params);
    let (rho, alpha) = signal_state(cfg, efficiency)?;
    let acq = run_acquisition(&rho, &params, &acq_cfg)?;
    let path = write_output(
        out,
        "acquisition.csv",
        &cfg.header(),
        &write_acquisition_csv(&acq, cfg.bool("include_charges")),
    )?;

    let mut report = format!("wrote {} ({} pulses)\n", path.display(), acq.samples.len());
    report.push_str(&format!("charge-to-quadrature gain: {:.6e} e\n", acq.gain));
    report.push_str(&format!("effective efficiency: {efficiency:.5}\n"));
    if let Some(a) = alpha {
        let detected = a * efficiency.sqrt();
        report.push_str(&format!(
            "source alpha: {:.5} (detected {:.5}, mean photon number {:.4})\n",
            a.norm(),
            detected.norm(),
            detected.norm_sqr()
        ));
    }
    Ok(report)
}
