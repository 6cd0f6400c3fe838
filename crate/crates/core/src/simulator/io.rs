//! Acquisition CSV: `index,theta_rad,quadrature`, optionally followed by
//! `charge_e,lo_n`.

use std::fmt::Write as _;

use super::{Acquisition, QuadratureSample};
use crate::error::{Error, Result};
use crate::fockstate::data_lines;

pub fn write_acquisition_csv(acq: &Acquisition, include_charges: bool) -> String {
    let mut out = String::with_capacity(acq.samples.len() * 48);
    out.push_str("index,theta_rad,quadrature");
    if include_charges {
        out.push_str(",charge_e,lo_n");
    }
    out.push('\n');
    for (record, sample) in acq.records.iter().zip(&acq.samples) {
        let _ = write!(out, "{},{},{}", record.index, sample.theta, sample.value);
        if include_charges {
            let _ = write!(out, ",{},{}", record.charge_e, record.lo_n);
        }
        out.push('\n');
    }
    out
}

/// Reads samples in acquisition order (sorted by `index`). Extra columns
/// are ignored.
pub fn read_acquisition_csv(text: &str) -> Result<Vec<QuadratureSample>> {
    let mut rows: Vec<(u64, QuadratureSample)> = Vec::new();
    for (i, (line_no, line)) in data_lines(text).enumerate() {
        if i == 0 && line.starts_with("index") {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let mut next = |name: &str| {
            fields.next().ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("missing {name} column"),
            })
        };
        let parse_err = |e: &dyn std::fmt::Display| Error::Parse {
            line: line_no,
            message: e.to_string(),
        };
        let index: u64 = next("index")?.parse().map_err(|e| parse_err(&e))?;
        let theta: f64 = next("theta_rad")?.parse().map_err(|e| parse_err(&e))?;
        let value: f64 = next("quadrature")?.parse().map_err(|e| parse_err(&e))?;
        if !theta.is_finite() || !value.is_finite() {
            return Err(parse_err(&"non-finite value"));
        }
        rows.push((index, QuadratureSample { theta, value }));
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("acquisition CSV has no samples".into()));
    }
    rows.sort_by_key(|(index, _)| *index);
    if rows.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput("duplicate pulse index in acquisition CSV".into()));
    }
    Ok(rows.into_iter().map(|(_, s)| s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockstate::DensityMatrix;
    use crate::simulator::{run_acquisition, AcquisitionConfig, DetectorParams};

    #[test]
    fn samples_survive_a_round_trip() {
        let config = AcquisitionConfig {
            n_pulses: 256,
            n_phases: 4,
            ..Default::default()
        };
        let acq = run_acquisition(&DensityMatrix::vacuum(2).unwrap(), &DetectorParams::default(), &config).unwrap();
        for charges in [false, true] {
            let text = write_acquisition_csv(&acq, charges);
            assert_eq!(read_acquisition_csv(&text).unwrap(), acq.samples);
        }
    }

    #[test]
    fn reorders_by_index_and_rejects_garbage() {
        let text = "index,theta_rad,quadrature\n1,0.5,2\n0,0.1,-1\n";
        let s = read_acquisition_csv(text).unwrap();
        assert_eq!(s[0].value, -1.0);
        assert!(read_acquisition_csv("index,theta_rad,quadrature\n0,x,1\n").is_err());
        assert!(read_acquisition_csv("index,theta_rad,quadrature\n").is_err());
    }
}
