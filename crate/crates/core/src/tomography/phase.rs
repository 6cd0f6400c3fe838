use std::f64::consts::{PI, SQRT_2, TAU};

use super::Marginals;
use crate::error::{Error, Result};

/// Segment means below this many standard errors carry no phase
/// information.
pub const PHASE_SIGNIFICANCE: f64 = 3.0;

fn wrap_signed(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Recovers the phase of every segment from its mean quadrature,
/// `mean_i = √2 α̂ cos θ_i`, relative to the phase of the coherent
/// amplitude.
///
/// `arccos` fixes `θ_i` up to sign. The sign is chosen segment by segment so
/// that successive phases advance by the expected scan step (from the scan
/// metadata when present, `2π / n_phases` otherwise); both starting branches
/// are tried and the one whose steps best follow the scan is kept.
pub fn estimate_phases(marginals: &Marginals, amplitude_hint: Option<f64>) -> Result<Vec<f64>> {
    let means = marginals.means();
    let n = means.len();
    let errors = marginals.standard_errors();
    let significance = means
        .iter()
        .zip(&errors)
        .map(|(m, e)| {
            if *e > 0.0 {
                m.abs() / e
            } else if m.abs() > 1e-12 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    if significance < PHASE_SIGNIFICANCE {
        return Err(Error::PhaseUnresolvable {
            max_significance: significance,
        });
    }
    let alpha = match amplitude_hint {
        Some(a) if a > 0.0 && a.is_finite() => a,
        Some(a) => {
            return Err(Error::Domain {
                what: "amplitude hint",
                value: a,
                domain: "(0, inf)",
            })
        }
        None => means.iter().map(|m| m.abs()).fold(0.0, f64::max) / SQRT_2,
    };
    let scale = SQRT_2 * alpha;
    let principal: Vec<f64> = means.iter().map(|m| (m / scale).clamp(-1.0, 1.0).acos()).collect();

    let steps: Vec<f64> = match marginals.phases() {
        Some(scan) if n > 1 => (0..n)
            .map(|i| {
                if i == 0 {
                    0.0
                } else {
                    wrap_signed(scan[i] - scan[i - 1])
                }
            })
            .collect(),
        _ => vec![TAU / n as f64; n],
    };

    let track = |start: f64| -> (Vec<f64>, f64) {
        let mut out = Vec::with_capacity(n);
        out.push(start.rem_euclid(TAU));
        let mut cost = 0.0;
        for i in 1..n {
            let predicted = out[i - 1] + steps[i];
            let (best, dev) = [principal[i], -principal[i]]
                .into_iter()
                .map(|c| (c, wrap_signed(c - predicted).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            cost += dev * dev;
            out.push(best.rem_euclid(TAU));
        }
        (out, cost)
    };
    let (rising, rising_cost) = track(principal[0]);
    let (falling, falling_cost) = track(-principal[0]);
    Ok(if rising_cost <= falling_cost { rising } else { falling })
}
