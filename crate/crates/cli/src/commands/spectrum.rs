use std::fmt::Write as _;
use std::path::Path;

use homodyne::characterize::{spectrum_report, WelchOptions};
use homodyne::simulator::{emit_trace, run_acquisition, AcquisitionConfig, Calibration, Trace, TraceConfig};
use homodyne::DensityMatrix;

use super::{detector_params, read_input, write_output};
use crate::config::RunConfig;
use crate::error::{config_err, CliError};

const MAX_LINES_SHOWN: usize = 20;

pub fn spectrum(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let params = detector_params(cfg)?;
    let input = cfg.get("input");
    let trace = if input.is_empty() {
        let acq_cfg = AcquisitionConfig {
            n_pulses: cfg.usize("pulses"),
            n_phases: 1,
            drift_deg: 0.0,
            seed: cfg.u64("seed"),
            calibration: Calibration::ModelGain,
            ..Default::default()
        };
        let acq = run_acquisition(&DensityMatrix::vacuum(2).map_err(config_err)?, &params, &acq_cfg)?;
        let trace_cfg = TraceConfig {
            shaping_width_us: cfg.f64("shaping_width_us"),
            sample_rate_hz: cfg.f64("sample_rate_hz"),
            rep_rate_hz: params.rep_rate_hz,
            pedestal_e: cfg.f64("pedestal_e"),
        };
        emit_trace(&acq.records, &trace_cfg).map_err(config_err)?
    } else {
        Trace::from_csv(&read_input(input, "trace CSV")?)?
    };
    let options = WelchOptions {
        segment_len: cfg.opt_usize("segment_len"),
        overlap: cfg.f64("overlap"),
        min_segments: cfg.usize("min_segments"),
        exclusion_bins: cfg.usize("exclusion_bins"),
        line_threshold: cfg.f64("line_threshold"),
        band_limit_harmonics: cfg.f64("band_limit_harmonics"),
        ..Default::default()
    };
    let report = spectrum_report(&trace, params.rep_rate_hz, &options)?;

    let mut text = String::new();
    let source = if input.is_empty() { "simulated vacuum" } else { input };
    let _ = writeln!(
        text,
        "trace: {} samples at {:e} Hz ({source})",
        trace.values.len(),
        trace.sample_rate_hz
    );
    let _ = writeln!(
        text,
        "welch: {} segments of {} samples, resolution {:.3} Hz",
        report.n_segments,
        report.segment_len,
        report.bin_width_hz()
    );
    let _ = writeln!(
        text,
        "flatness: {:.4} dB (ratio {:.4}) over {} inter-harmonic bands",
        report.flatness_db,
        report.flatness_ratio,
        report.band_means.len()
    );
    let harmonics: Vec<String> = report.harmonics().iter().map(|k| k.to_string()).collect();
    let _ = writeln!(
        text,
        "harmonics found: {}",
        if harmonics.is_empty() {
            "none".into()
        } else {
            harmonics.join(" ")
        }
    );
    let _ = writeln!(text, "lines: {}", report.lines.len());
    for line in report.lines.iter().take(MAX_LINES_SHOWN) {
        let k = line.harmonic.map_or(String::new(), |k| format!(" (harmonic {k})"));
        let _ = writeln!(text, "  {:.2} Hz  power {:.4e}{k}", line.frequency_hz, line.power);
    }

    let header = cfg.header();
    write_output(out, "psd.csv", &header, &report.psd_csv())?;
    if cfg.bool("write_trace") {
        write_output(out, "trace.csv", &header, &trace.to_csv())?;
    }
    write_output(out, "report.txt", &header, &text)?;
    Ok(text)
}
