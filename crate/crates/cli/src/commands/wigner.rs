use std::fmt::Write as _;
use std::path::Path;

use homodyne::fockstate::wigner_from_density;
use homodyne::numeric::linspace;

use super::{signal_state, write_output};
use crate::config::RunConfig;
use crate::error::{config_err, CliError};

/// Exact Wigner function of an analytic state after loss `eta`.
pub fn wigner(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let eta = cfg.f64("eta");
    let (rho, _) = signal_state(cfg, eta)?;
    let rho = rho.apply_loss(eta).map_err(config_err)?;
    let half = cfg.f64("half_width");
    let axis = linspace(-half, half, cfg.usize("points"));
    let grid = wigner_from_density(&rho, &axis, &axis)?;
    let (q, p, peak) = grid.peak();
    let w_min = grid.values().iter().cloned().fold(f64::INFINITY, f64::min);

    let mut text = String::new();
    let _ = writeln!(text, "state: {} (dim {}, eta {eta})", cfg.get("state"), rho.dim());
    let _ = writeln!(text, "mean photon number: {:.4}", rho.mean_photon_number());
    let _ = writeln!(text, "W(0,0): {:.4}", rho.wigner_at_origin());
    let _ = writeln!(text, "wigner peak: {peak:.4} at ({q:.4}, {p:.4})");
    let _ = writeln!(text, "wigner minimum: {w_min:.4}");
    let _ = writeln!(text, "wigner integral: {:.4}", grid.integral());

    let header = cfg.header();
    write_output(out, "wigner.csv", &header, &grid.to_csv())?;
    write_output(out, "density.csv", &header, &rho.to_csv())?;
    write_output(out, "report.txt", &header, &text)?;
    Ok(text)
}
