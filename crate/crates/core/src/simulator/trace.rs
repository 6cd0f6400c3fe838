use std::f64::consts::TAU;

use std::fmt::Write as _;

use super::PulseRecord;
use crate::error::{Error, Result};
use crate::fockstate::{data_lines, parse_fields};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceConfig {
    /// Full width of the raised-cosine pulse, microseconds.
    pub shaping_width_us: f64,
    pub sample_rate_hz: f64,
    pub rep_rate_hz: f64,
    /// Constant charge added to every pulse, electrons (e.g. the mean
    /// imbalance photocharge `δκN̄`). Produces lines at the repetition
    /// rate and its harmonics.
    pub pedestal_e: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            shaping_width_us: 1.0,
            sample_rate_hz: 10.2e6,
            rep_rate_hz: super::DEFAULT_REP_RATE_HZ,
            pedestal_e: 0.0,
        }
    }
}

/// Uniformly sampled detector output.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub sample_rate_hz: f64,
    pub values: Vec<f64>,
}

impl Trace {
    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }

    /// `Σ v · Δt`
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.sample_rate_hz
    }

    /// `time_s,value`
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 32);
        out.push_str("time_s,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.time(i), v);
        }
        out
    }

    /// Reads `time_s,value` rows; the sample rate comes from the mean time
    /// step, which must be uniform to 1e-6.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, (line_no, line)) in data_lines(text).enumerate() {
            if i == 0 && line.starts_with("time_s") {
                continue;
            }
            let [t, v] = parse_fields::<2>(line_no, line)?;
            if !t.is_finite() || !v.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "non-finite value".into(),
                });
            }
            times.push(t);
            values.push(v);
        }
        if times.len() < 2 {
            return Err(Error::InvalidInput("trace CSV needs at least two samples".into()));
        }
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(dt > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) / dt - 1.0).abs() > 1e-6) {
            return Err(Error::InvalidInput(
                "trace samples are not uniformly spaced in time".into(),
            ));
        }
        Ok(Self {
            sample_rate_hz: 1.0 / dt,
            values,
        })
    }
}

/// Renders each pulse as a unit-area raised-cosine of the shaping width,
/// scaled by its charge, placed at `index / rep_rate`.
pub fn emit_trace(records: &[PulseRecord], config: &TraceConfig) -> Result<Trace> {
    let width = config.shaping_width_us * 1e-6;
    let period = 1.0 / config.rep_rate_hz;
    if !(width > 0.0) || !(config.sample_rate_hz > 0.0) || !(config.rep_rate_hz > 0.0) {
        return Err(Error::InvalidInput("trace width and rates must be positive".into()));
    }
    if width > period {
        return Err(Error::InvalidInput(format!(
            "shaping width {} us exceeds the repetition period {} us; pulses would overlap",
            config.shaping_width_us,
            period * 1e6
        )));
    }
    let dt = 1.0 / config.sample_rate_hz;
    if width < 4.0 * dt {
        return Err(Error::InvalidInput(format!(
            "sample rate {} Hz resolves the {} us pulse with fewer than 4 samples",
            config.sample_rate_hz, config.shaping_width_us
        )));
    }
    let Some(last) = records.iter().map(|r| r.index).max() else {
        return Ok(Trace {
            sample_rate_hz: config.sample_rate_hz,
            values: Vec::new(),
        });
    };
    let len = (((last + 1) as f64 * period) / dt).ceil() as usize;
    let mut values = vec![0.0; len];
    let mut shape = Vec::new();
    for r in records {
        let start = r.index as f64 * period;
        let first = (start / dt).ceil() as usize;
        shape.clear();
        let mut j = first;
        while j < len && j as f64 * dt <= start + width {
            let tau = j as f64 * dt - start;
            shape.push((j, 1.0 - (TAU * tau / width).cos()));
            j += 1;
        }
        let norm: f64 = shape.iter().map(|(_, v)| v).sum::<f64>() * dt;
        if norm <= 0.0 {
            continue;
        }
        let charge = r.charge_e + config.pedestal_e;
        for &(j, v) in &shape {
            values[j] += charge * v / norm;
        }
    }
    Ok(Trace {
        sample_rate_hz: config.sample_rate_hz,
        values,
    })
}
