mod characterize;
mod reconstruct;
mod simulate;
mod spectrum;
mod wigner;

pub use characterize::characterize;
pub use reconstruct::reconstruct;
pub use simulate::simulate;
pub use spectrum::spectrum;
pub use wigner::wigner;

use std::fs;
use std::path::{Path, PathBuf};

use homodyne::fockstate::{coherent_density_matrix, fock_density_matrix};
use homodyne::simulator::DetectorParams;
use homodyne::{DensityMatrix, C64};

use crate::config::RunConfig;
use crate::error::{config_err, CliError};
const DEFAULT_PHASES: usize = 64;

/// 64 phase segments, or the largest divisor of `pulses` below 64 so that
/// every segment holds the same number of pulses.
pub(crate) fn auto_phases(pulses: usize) -> usize {
    (1..=DEFAULT_PHASES.min(pulses.max(1)))
        .rev()
        .find(|d| pulses.is_multiple_of(*d))
        .unwrap_or(1)
}

/// Writes `header` followed by `body` to `dir/name`.
pub(crate) fn write_output(dir: &Path, name: &str, header: &str, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let mut text = String::with_capacity(header.len() + body.len());
    text.push_str(header);
    text.push_str(body);
    fs::write(&path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub(crate) fn read_input(path: &str, what: &str) -> Result<String, CliError> {
    if path.is_empty() {
        return Err(CliError::Config(format!("no {what} given (set input=PATH)")));
    }
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {what} {path}: {e}")))
}

pub(crate) fn detector_params(cfg: &RunConfig) -> Result<DetectorParams, CliError> {
    let defaults = DetectorParams::default();
    let params = DetectorParams {
        eta_total: cfg.f64("eta"),
        kappa: cfg.opt_f64("kappa").unwrap_or(defaults.kappa),
        sigma_e: cfg.f64("sigma_e"),
        imbalance: cfg.f64("imbalance"),
        lo_photons: cfg.f64("lo_photons"),
        rep_rate_hz: cfg.f64("rep_rate_hz"),
        poisson_lo: cfg.bool("poisson_lo"),
        lo_rin: cfg.f64("lo_rin"),
    };
    params.validate().map_err(config_err)?;
    Ok(params)
}

/// The configured signal state. `detected_alpha` is divided by
/// `√efficiency` to give the source amplitude.
pub(crate) fn signal_state(cfg: &RunConfig, efficiency: f64) -> Result<(DensityMatrix, Option<C64>), CliError> {
    let auto_dim = cfg.opt_usize("state_dim");
    match cfg.get("state") {
        "vacuum" => Ok((DensityMatrix::vacuum(auto_dim.unwrap_or(2)).map_err(config_err)?, None)),
        "fock" => {
            let n = cfg.usize("fock_n");
            Ok((
                fock_density_matrix(n, auto_dim.unwrap_or(n + 2)).map_err(config_err)?,
                None,
            ))
        }
        _ => {
            let magnitude = match (cfg.opt_f64("alpha"), cfg.opt_f64("detected_alpha")) {
                (Some(a), None) => a,
                (None, Some(d)) => d / efficiency.sqrt(),
                (Some(_), Some(_)) => {
                    return Err(CliError::Config("set either alpha or detected_alpha, not both".into()))
                }
                (None, None) => {
                    return Err(CliError::Config(
                        "a coherent state needs alpha or detected_alpha".into(),
                    ))
                }
            };
            let alpha = C64::from_polar(magnitude, cfg.f64("alpha_phase_deg").to_radians());
            let mean = magnitude * magnitude;
            let dim = auto_dim.unwrap_or(((mean + 8.0 * magnitude + 10.0).ceil() as usize).min(200));
            let rho = coherent_density_matrix(alpha, dim).map_err(config_err)?;
            if rho.truncated_weight() > 1e-6 {
                log::warn!(
                    "state_dim = {dim} truncates {:.2e} of the coherent state",
                    rho.truncated_weight()
                );
            }
            Ok((rho, Some(alpha)))
        }
    }
}
