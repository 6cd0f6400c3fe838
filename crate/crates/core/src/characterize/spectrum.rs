use std::fmt::Write as _;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numeric::pairwise_reduce;
use crate::simulator::Trace;

const MIN_TRACE_LEN: usize = 1 << 14;
const MAX_DEFAULT_SEGMENT: usize = 1 << 16;

/// Welch estimator and line-search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct WelchOptions {
    /// Samples per segment. By default the largest power of two up to 2¹⁶
    /// that still yields `min_segments` segments.
    pub segment_len: Option<usize>,
    /// Fractional overlap of consecutive Hann-windowed segments.
    pub overlap: f64,
    pub min_segments: usize,
    /// Bins on each side of a harmonic left out of the flatness bands.
    pub exclusion_bins: usize,
    /// A line must exceed this multiple of the local median PSD.
    pub line_threshold: f64,
    /// Half width, in bins, of the running median.
    pub median_window: usize,
    /// Flatness bands extend up to this multiple of the repetition rate.
    pub band_limit_harmonics: f64,
}

impl Default for WelchOptions {
    fn default() -> Self {
        Self {
            segment_len: None,
            overlap: 0.5,
            min_segments: 8,
            exclusion_bins: 2,
            line_threshold: 10.0,
            median_window: 32,
            band_limit_harmonics: 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub frequency_hz: f64,
    /// PSD integrated over the line, units² of the trace.
    pub power: f64,
    /// `k` when the line sits within the exclusion width of `k·f_rep`.
    pub harmonic: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub frequencies_hz: Vec<f64>,
    /// One-sided PSD, units² of the trace per Hz.
    pub psd: Vec<f64>,
    pub segment_len: usize,
    pub n_segments: usize,
    /// Mean PSD of each inter-harmonic band, harmonics excluded.
    pub band_means: Vec<f64>,
    /// Largest over smallest band mean.
    pub flatness_ratio: f64,
    pub flatness_db: f64,
    /// Strongest first.
    pub lines: Vec<SpectralLine>,
}

impl SpectralReport {
    pub fn bin_width_hz(&self) -> f64 {
        self.frequencies_hz[1] - self.frequencies_hz[0]
    }

    /// Repetition-rate harmonics among the detected lines, ascending.
    pub fn harmonics(&self) -> Vec<usize> {
        let mut k: Vec<usize> = self.lines.iter().filter_map(|l| l.harmonic).collect();
        k.sort_unstable();
        k.dedup();
        k
    }

    /// `frequency_hz,psd`
    pub fn psd_csv(&self) -> String {
        let mut out = String::from("frequency_hz,psd\n");
        for (f, p) in self.frequencies_hz.iter().zip(&self.psd) {
            let _ = writeln!(out, "{f},{p}");
        }
        out
    }
}

fn choose_segment(len: usize, options: &WelchOptions) -> Result<(usize, usize, usize)> {
    if !(0.0..1.0).contains(&options.overlap) {
        return Err(Error::Domain {
            what: "overlap",
            value: options.overlap,
            domain: "[0, 1)",
        });
    }
    let count = |seg: usize| {
        let step = ((seg as f64 * (1.0 - options.overlap)).round() as usize).max(1);
        if seg > len {
            (step, 0)
        } else {
            (step, (len - seg) / step + 1)
        }
    };
    let seg = match options.segment_len {
        Some(seg) => seg,
        None => {
            let mut seg = MAX_DEFAULT_SEGMENT;
            while seg > 16 && count(seg).1 < options.min_segments {
                seg /= 2;
            }
            seg
        }
    };
    if seg < 4 || seg > len {
        return Err(Error::InvalidInput(format!(
            "trace of {len} samples is shorter than the {seg}-sample window"
        )));
    }
    let (step, n) = count(seg);
    if n < options.min_segments {
        return Err(Error::InvalidInput(format!(
            "{n} Welch segments of {seg} samples; at least {} are required",
            options.min_segments
        )));
    }
    Ok((seg, step, n))
}

/// One-sided Welch PSD with a Hann window and per-segment mean removal.
/// Returns the frequency axis, the PSD and the number of segments.
pub fn welch_psd(values: &[f64], sample_rate_hz: f64, options: &WelchOptions) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::Domain {
            what: "sample_rate_hz",
            value: sample_rate_hz,
            domain: "(0, inf)",
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("trace contains non-finite samples".into()));
    }
    let (seg, step, n_segments) = choose_segment(values.len(), options)?;
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / seg as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(seg);
    let bins = seg / 2 + 1;
    let parts: Vec<Vec<f64>> = (0..n_segments)
        .into_par_iter()
        .map(|s| {
            let chunk = &values[s * step..s * step + seg];
            let mean = chunk.iter().sum::<f64>() / seg as f64;
            let mut buf: Vec<Complex<f64>> = chunk
                .iter()
                .zip(&window)
                .map(|(v, w)| Complex::new((v - mean) * w, 0.0))
                .collect();
            fft.process(&mut buf);
            buf[..bins].iter().map(|c| c.norm_sqr()).collect()
        })
        .collect();
    let total = pairwise_reduce(parts, |mut a, b| {
        a.iter_mut().zip(&b).for_each(|(a, b)| *a += b);
        a
    })
    .expect("at least one segment");
    let norm = sample_rate_hz * window.iter().map(|w| w * w).sum::<f64>() * n_segments as f64;
    let psd: Vec<f64> = total
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (seg % 2 == 0 && k == bins - 1) {
                1.0
            } else {
                2.0
            };
            one_sided * p / norm
        })
        .collect();
    let df = sample_rate_hz / seg as f64;
    Ok(((0..bins).map(|k| k as f64 * df).collect(), psd, n_segments))
}

fn running_median(values: &[f64], half: usize) -> Vec<f64> {
    let mut scratch = Vec::with_capacity(2 * half + 1);
    (0..values.len())
        .map(|i| {
            scratch.clear();
            scratch.extend_from_slice(&values[i.saturating_sub(half)..(i + half + 1).min(values.len())]);
            let mid = scratch.len() / 2;
            *scratch.select_nth_unstable_by(mid, f64::total_cmp).1
        })
        .collect()
}

/// Welch spectrum of a detector trace, its inter-harmonic flatness and the
/// narrow lines standing out of the local noise floor.
pub fn spectrum_report(trace: &Trace, rep_rate_hz: f64, options: &WelchOptions) -> Result<SpectralReport> {
    if trace.values.len() < MIN_TRACE_LEN {
        return Err(Error::InvalidInput(format!(
            "trace has {} samples; spectra need at least {MIN_TRACE_LEN}",
            trace.values.len()
        )));
    }
    if !(rep_rate_hz > 0.0 && rep_rate_hz.is_finite()) {
        return Err(Error::Domain {
            what: "rep_rate_hz",
            value: rep_rate_hz,
            domain: "(0, inf)",
        });
    }
    let (frequencies_hz, psd, n_segments) = welch_psd(&trace.values, trace.sample_rate_hz, options)?;
    let segment_len = (frequencies_hz.len() - 1) * 2;
    let df = trace.sample_rate_hz / segment_len as f64;
    let nyquist = frequencies_hz[frequencies_hz.len() - 1];
    let excl = options.exclusion_bins as f64;

    let limit = (options.band_limit_harmonics * rep_rate_hz).min(nyquist);
    let mut band_means = Vec::new();
    let mut k = 0usize;
    while (k as f64) * rep_rate_hz < limit {
        let lo = k as f64 * rep_rate_hz / df;
        let hi = ((k + 1) as f64 * rep_rate_hz).min(limit) / df;
        let bins: Vec<f64> = (lo.ceil() as usize..=hi.floor() as usize)
            .filter(|&b| {
                let b = b as f64;
                b - lo > excl && (k + 1) as f64 * rep_rate_hz / df - b > excl
            })
            .map(|b| psd[b])
            .collect();
        if !bins.is_empty() {
            band_means.push(bins.iter().sum::<f64>() / bins.len() as f64);
        }
        k += 1;
    }
    if band_means.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "fewer than two inter-harmonic bands below {limit:.4e} Hz at {df:.4e} Hz resolution"
        )));
    }
    let max = band_means.iter().cloned().fold(f64::MIN, f64::max);
    let min = band_means.iter().cloned().fold(f64::MAX, f64::min);
    let flatness_ratio = if min > 0.0 { max / min } else { f64::INFINITY };

    let floor = running_median(&psd, options.median_window);
    let reach = options.exclusion_bins.max(1);
    let mut lines: Vec<SpectralLine> = Vec::new();
    for b in (reach + 1)..psd.len().saturating_sub(reach) {
        let p = psd[b];
        if !(p > options.line_threshold * floor[b]) {
            continue;
        }
        if (b - reach..=b + reach).any(|j| psd[j] > p) {
            continue;
        }
        let around = b - 1..=b + 1;
        let weight: f64 = around.clone().map(|j| psd[j]).sum();
        let frequency_hz = around.map(|j| psd[j] * frequencies_hz[j]).sum::<f64>() / weight;
        let power = (b - reach..=b + reach).map(|j| psd[j] - floor[j]).sum::<f64>() * df;
        let n = (frequency_hz / rep_rate_hz).round();
        let harmonic = (n >= 1.0 && (frequency_hz - n * rep_rate_hz).abs() <= (excl + 0.5) * df).then_some(n as usize);
        lines.push(SpectralLine {
            frequency_hz,
            power,
            harmonic,
        });
    }
    lines.sort_by(|a, b| b.power.total_cmp(&a.power));

    Ok(SpectralReport {
        frequencies_hz,
        psd,
        segment_len,
        n_segments,
        band_means,
        flatness_ratio,
        flatness_db: 10.0 * flatness_ratio.log10(),
        lines,
    })
}
