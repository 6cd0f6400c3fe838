//! CSV forms of [`DensityMatrix`] (`m,n,re,im`) and [`WignerGrid`] (`q,p,w`).
//!
//! Readers skip blank lines, `#` comment lines and a leading header line.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use super::{DensityMatrix, WignerGrid};
use crate::error::{Error, Result};

pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_fields<const N: usize>(line_no: usize, line: &str) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    let mut fields = line.split(',');
    for slot in out.iter_mut() {
        let field = fields.next().ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected {N} fields"),
        })?;
        *slot = field.trim().parse().map_err(|e| Error::Parse {
            line: line_no,
            message: format!("'{}': {e}", field.trim()),
        })?;
    }
    Ok(out)
}

fn is_header(line: &str) -> bool {
    line.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
}

impl DensityMatrix {
    /// Full matrix, one `m,n,re,im` row per element, with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,re,im\n");
        for m in 0..self.dim() {
            for n in 0..self.dim() {
                let z = self.get(m, n);
                let _ = writeln!(out, "{m},{n},{},{}", z.re, z.im);
            }
        }
        out
    }

    /// Accepts either the upper triangle or the full matrix. Missing lower
    /// entries are filled by conjugation.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, (line_no, line)) in data_lines(text).enumerate() {
            if i == 0 && is_header(line) {
                continue;
            }
            let [m, n, re, im] = parse_fields::<4>(line_no, line)?;
            if m < 0.0 || n < 0.0 || m.fract() != 0.0 || n.fract() != 0.0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "indices must be non-negative integers".into(),
                });
            }
            entries.push((m as usize, n as usize, C64::new(re, im)));
        }
        let dim = entries
            .iter()
            .map(|&(m, n, _)| m.max(n) + 1)
            .max()
            .ok_or_else(|| Error::InvalidInput("density matrix CSV has no entries".into()))?;
        let mut elements = vec![None; dim * dim];
        for &(m, n, z) in &entries {
            elements[m * dim + n] = Some(z);
        }
        let filled = (0..dim * dim)
            .map(|idx| {
                let (m, n) = (idx / dim, idx % dim);
                elements[idx]
                    .or_else(|| elements[n * dim + m].map(|z| z.conj()))
                    .unwrap_or_default()
            })
            .collect();
        Self::from_elements(dim, filled)
    }
}

impl WignerGrid {
    /// Row-major `q,p,w` with one header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,p,w\n");
        for (iq, q) in self.q_axis().iter().enumerate() {
            for (ip, p) in self.p_axis().iter().enumerate() {
                let _ = writeln!(out, "{q},{p},{}", self.value(iq, ip));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, (line_no, line)) in data_lines(text).enumerate() {
            if i == 0 && is_header(line) {
                continue;
            }
            rows.push(parse_fields::<3>(line_no, line)?);
        }
        let first_q = rows
            .first()
            .ok_or_else(|| Error::InvalidInput("Wigner CSV has no rows".into()))?[0];
        let np = rows.iter().take_while(|r| r[0] == first_q).count();
        if np == 0 || rows.len() % np != 0 {
            return Err(Error::InvalidInput("Wigner CSV is not a full row-major grid".into()));
        }
        let p_axis: Vec<f64> = rows[..np].iter().map(|r| r[1]).collect();
        let q_axis: Vec<f64> = rows.iter().step_by(np).map(|r| r[0]).collect();
        for (idx, r) in rows.iter().enumerate() {
            if r[0] != q_axis[idx / np] || r[1] != p_axis[idx % np] {
                return Err(Error::InvalidInput(format!(
                    "Wigner CSV row {idx} breaks the grid order"
                )));
            }
        }
        let values = rows.iter().map(|r| r[2]).collect();
        Self::new(q_axis, p_axis, values)
    }
}
