//! Run configuration: typed `key=value` settings, presets, config files and
//! provenance headers.
//!
//! Values are layered, later layers winning: key defaults, the preset, the
//! config file, `--set` pairs, then named flags. A config file is either
//! plain `key = value` lines or any output file of a previous run, in which
//! case only its `#@ key=value` provenance lines are read.

use std::fmt::Write as _;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    /// Closed range, or open at the bottom when `above` is set.
    Float {
        min: f64,
        max: f64,
        above: bool,
    },
    Int {
        min: u64,
        max: u64,
    },
    Bool,
    Choice(&'static [&'static str]),
    Text,
}

#[derive(Debug)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: &'static str,
    /// A word accepted in place of a number, e.g. `auto` or `none`.
    pub sentinel: Option<&'static str>,
    pub help: &'static str,
}

const fn float(name: &'static str, min: f64, max: f64, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        kind: Kind::Float { min, max, above: false },
        default,
        sentinel: None,
        help,
    }
}

const fn positive(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        kind: Kind::Float {
            min: 0.0,
            max: f64::INFINITY,
            above: true,
        },
        default,
        sentinel: None,
        help,
    }
}

const fn int(name: &'static str, min: u64, max: u64, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        kind: Kind::Int { min, max },
        default,
        sentinel: None,
        help,
    }
}

const fn choice(
    name: &'static str,
    options: &'static [&'static str],
    default: &'static str,
    help: &'static str,
) -> Key {
    Key {
        name,
        kind: Kind::Choice(options),
        default,
        sentinel: None,
        help,
    }
}

const fn or_word(mut key: Key, word: &'static str) -> Key {
    key.sentinel = Some(word);
    key
}

const STATES: &[&str] = &["vacuum", "coherent", "fock"];

const SEED: &[Key] = &[int("seed", 0, u64::MAX, "0", "master seed of every random stream")];

const STATE: &[Key] = &[
    choice("state", STATES, "vacuum", "signal state"),
    or_word(
        float(
            "alpha",
            0.0,
            20.0,
            "none",
            "coherent amplitude |α| of the source, before detection loss",
        ),
        "none",
    ),
    or_word(
        float(
            "detected_alpha",
            0.0,
            20.0,
            "none",
            "coherent amplitude as seen by the shot-noise calibrated detector; sets the source amplitude",
        ),
        "none",
    ),
    float("alpha_phase_deg", -360.0, 360.0, "0", "phase of α, degrees"),
    int("fock_n", 0, 60, "1", "photon number of the Fock state"),
    or_word(
        int("state_dim", 1, 200, "auto", "Fock truncation of the signal state"),
        "auto",
    ),
];

const DETECTOR: &[Key] = &[
    Key {
        name: "eta",
        kind: Kind::Float {
            min: 0.0,
            max: 1.0,
            above: true,
        },
        default: "0.91",
        sentinel: None,
        help: "overall detection efficiency",
    },
    Key {
        name: "kappa",
        kind: Kind::Float {
            min: 0.0,
            max: 1.0,
            above: true,
        },
        default: "auto",
        sentinel: Some("auto"),
        help: "charge-collection factor; auto = 14 dB SNR at 1.6e8 photons with η = 0.91, σ_e = 730",
    },
    float("sigma_e", 0.0, 1e7, "730", "electronic noise, electrons RMS per pulse"),
    float("imbalance", 0.0, 0.499, "0", "residual splitting imbalance δ"),
    positive("lo_photons", "1.6e8", "LO photons per pulse"),
    positive("rep_rate_hz", "204000", "pulse repetition rate"),
    Key {
        name: "poisson_lo",
        kind: Kind::Bool,
        default: "true",
        sentinel: None,
        help: "Poisson LO photon number per pulse",
    },
    float("lo_rin", 0.0, 10.0, "0", "classical relative intensity noise of the LO"),
];

const ACQUISITION: &[Key] = &[
    int("pulses", 1, 1 << 26, "262144", "number of pulses"),
    or_word(
        int(
            "n_phases",
            1,
            1 << 16,
            "auto",
            "LO phase steps per scan; auto is 64, or the largest divisor of pulses below it",
        ),
        "auto",
    ),
    choice("scan", &["stepped", "continuous"], "stepped", "LO phase scan profile"),
    float(
        "drift_deg",
        0.0,
        360.0,
        "8",
        "end-to-end RMS of the slow phase drift, degrees",
    ),
    choice(
        "calibration",
        &["vacuum", "model"],
        "vacuum",
        "charge-to-quadrature gain: measured vacuum variance or true model gain",
    ),
    Key {
        name: "include_charges",
        kind: Kind::Bool,
        default: "false",
        sentinel: None,
        help: "add charge_e and lo_n columns",
    },
];

const RECONSTRUCT: &[Key] = &[
    Key {
        name: "input",
        kind: Kind::Text,
        default: "",
        sentinel: None,
        help: "acquisition CSV",
    },
    choice(
        "phases",
        &["estimate", "scan"],
        "estimate",
        "estimate LO phases from the data, or trust the scan phases in the file",
    ),
    or_word(
        float("alpha_hint", 0.0, 20.0, "none", "known |α| for phase estimation"),
        "none",
    ),
    or_word(
        int(
            "n_phases",
            1,
            1 << 16,
            "auto",
            "phase segments the data are split into; auto as in simulate",
        ),
        "auto",
    ),
    int("n_bins", 8, 1 << 16, "128", "histogram bins per segment"),
    positive("cutoff", "7.25", "inverse Radon filter cutoff k_c"),
    int("dim", 1, 25, "20", "Fock dimension of the sampled density matrix"),
    choice(
        "weighting",
        &["segments", "uniform"],
        "segments",
        "weight samples by the angular coverage of their segment, or uniformly",
    ),
    Key {
        name: "ref_alpha",
        kind: Kind::Text,
        default: "none",
        sentinel: None,
        help: "reference coherent amplitude for the fidelity: none, fit, or re[,im]",
    },
    positive("wigner_half_width", "6", "half width of the Wigner grid"),
    int("wigner_points", 3, 2001, "121", "Wigner grid points per axis"),
];

const SWEEP: &[Key] = &[
    Key {
        name: "input",
        kind: Kind::Text,
        default: "",
        sentinel: None,
        help: "sweep CSV lo_photons,variance_e2; simulated when empty",
    },
    positive("lo_min", "3e6", "smallest LO photon number of the sweep"),
    positive("lo_max", "3e8", "largest LO photon number of the sweep"),
    int("points", 6, 1000, "12", "sweep points, log spaced"),
    int(
        "pulses_per_point",
        2,
        1 << 24,
        "50000",
        "simulated pulses per sweep point",
    ),
    or_word(
        positive("snr_at", "none", "report the SNR at this LO photon number"),
        "none",
    ),
    or_word(
        positive(
            "subtraction_at",
            "none",
            "report the subtraction figure at this LO photon number",
        ),
        "none",
    ),
    int(
        "linearity_points",
        0,
        10000,
        "11",
        "injected charge steps for the gain check (0 = skip)",
    ),
    positive("linearity_full_scale_e", "1e5", "largest injected charge, electrons"),
    int(
        "linearity_repeats",
        1,
        1 << 20,
        "1000",
        "pulses averaged per injected step",
    ),
    positive("linearity_threshold", "0.01", "maximum relative deviation that passes"),
];

const SPECTRUM: &[Key] = &[
    Key {
        name: "input",
        kind: Kind::Text,
        default: "",
        sentinel: None,
        help: "trace CSV time_s,value; simulated vacuum trace when empty",
    },
    int("pulses", 64, 1 << 22, "8192", "pulses in the simulated trace"),
    positive("shaping_width_us", "1.0", "raised-cosine pulse width, microseconds"),
    positive("sample_rate_hz", "10.2e6", "trace sample rate"),
    float("pedestal_e", -1e9, 1e9, "0", "constant charge added to every pulse"),
    or_word(int("segment_len", 16, 1 << 24, "auto", "Welch segment length"), "auto"),
    float("overlap", 0.0, 0.95, "0.5", "Welch segment overlap"),
    int("min_segments", 1, 1 << 16, "8", "fewest Welch segments accepted"),
    int("exclusion_bins", 0, 1000, "2", "bins excluded around each harmonic"),
    positive("line_threshold", "10", "line detection threshold over the local median"),
    positive(
        "band_limit_harmonics",
        "2.5",
        "flatness bands up to this multiple of the repetition rate",
    ),
    Key {
        name: "write_trace",
        kind: Kind::Bool,
        default: "false",
        sentinel: None,
        help: "also write the simulated trace",
    },
];

const WIGNER: &[Key] = &[
    float("eta", 0.0, 1.0, "1", "loss applied before evaluating W"),
    positive("half_width", "6", "half width of the grid"),
    int("points", 3, 2001, "121", "grid points per axis"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Reconstruct,
    Characterize,
    Spectrum,
    Wigner,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Reconstruct => "reconstruct",
            Command::Characterize => "characterize",
            Command::Spectrum => "spectrum",
            Command::Wigner => "wigner",
        }
    }

    fn groups(self) -> &'static [&'static [Key]] {
        match self {
            Command::Simulate => &[SEED, STATE, DETECTOR, ACQUISITION],
            Command::Reconstruct => &[RECONSTRUCT],
            Command::Characterize => &[SEED, DETECTOR, SWEEP],
            Command::Spectrum => &[SEED, DETECTOR, SPECTRUM],
            Command::Wigner => &[STATE, WIGNER],
        }
    }

    pub fn keys(self) -> impl Iterator<Item = &'static Key> {
        self.groups().iter().flat_map(|g| g.iter()).filter(move |k| {
            // the spectrum simulation has its own LO power default
            !(self == Command::Spectrum && k.name == "lo_photons")
        })
    }
}

/// Named parameter sets. Keys a command does not know are skipped.
pub fn preset(name: &str, command: Command) -> Result<Vec<(&'static str, &'static str)>, CliError> {
    let all: &[(&str, &str)] = match name {
        "coherent-paper" => &[
            ("state", "coherent"),
            ("detected_alpha", "2.24"),
            ("pulses", "262144"),
            ("n_phases", "64"),
            ("drift_deg", "8"),
            ("calibration", "vacuum"),
            ("phases", "estimate"),
            ("ref_alpha", "fit"),
            ("dim", "20"),
        ],
        "vacuum" => &[
            ("state", "vacuum"),
            ("pulses", "262144"),
            ("n_phases", "64"),
            ("drift_deg", "8"),
            ("calibration", "vacuum"),
            ("phases", "scan"),
            ("ref_alpha", "0"),
            ("dim", "20"),
        ],
        "single-photon" => &[
            ("state", "fock"),
            ("fock_n", "1"),
            ("eta", "0.91"),
            ("sigma_e", "0"),
            ("pulses", "100000"),
            ("n_phases", "32"),
            ("drift_deg", "0"),
            ("calibration", "vacuum"),
            ("phases", "scan"),
            ("dim", "6"),
        ],
        _ => {
            return Err(CliError::Config(format!(
                "unknown preset '{name}'; known presets: coherent-paper, vacuum, single-photon"
            )))
        }
    };
    Ok(all
        .iter()
        .copied()
        .filter(|(k, _)| command.keys().any(|key| key.name == *k))
        .collect())
}

fn check_value(key: &Key, value: &str) -> Result<(), String> {
    if key.sentinel == Some(value) {
        return Ok(());
    }
    match key.kind {
        Kind::Float { min, max, above } => {
            let v: f64 = value.parse().map_err(|_| format!("'{value}' is not a number"))?;
            let low_ok = if above { v > min } else { v >= min };
            if !v.is_finite() || !low_ok || v > max {
                let open = if above { "(" } else { "[" };
                return Err(format!("{v} is outside {open}{min}, {max}]"));
            }
        }
        Kind::Int { min, max } => {
            let v: u64 = value
                .parse()
                .map_err(|_| format!("'{value}' is not a non-negative integer"))?;
            if v < min || v > max {
                return Err(format!("{v} is outside [{min}, {max}]"));
            }
        }
        Kind::Bool => {
            if value != "true" && value != "false" {
                return Err(format!("'{value}' is not true or false"));
            }
        }
        Kind::Choice(options) => {
            if !options.contains(&value) {
                return Err(format!("'{value}' is not one of {}", options.join(", ")));
            }
        }
        Kind::Text => {
            if value.contains('\n') {
                return Err("value spans several lines".into());
            }
        }
    }
    Ok(())
}

/// Fully resolved settings of one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    values: Vec<(&'static Key, String)>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let mut values: Vec<(&'static Key, String)> = command.keys().map(|k| (k, k.default.to_string())).collect();
        if command == Command::Spectrum {
            values.insert(
                values.iter().position(|(k, _)| k.name == "sigma_e").unwrap_or(0) + 2,
                (&SPECTRUM_LO, SPECTRUM_LO.default.to_string()),
            );
        }
        Self { command, values }
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        let command = self.command.name();
        let Some(slot) = self.values.iter_mut().find(|(k, _)| k.name == name) else {
            return Err(CliError::Config(format!("unknown key '{name}' for {command}")));
        };
        check_value(slot.0, value).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        slot.1 = value.to_string();
        Ok(())
    }

    /// Applies `key=value` lines. Lines starting with `#@` are provenance
    /// records; when any are present, every other line is ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let provenance = text.lines().any(|l| l.trim_start().starts_with("#@"));
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let line = if provenance {
                match line.strip_prefix("#@") {
                    Some(rest) => rest.trim(),
                    None => continue,
                }
            } else {
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                line
            };
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!("line {}: expected key = value", i + 1)));
            };
            let key = key.trim();
            if key == "command" {
                if value.trim() != self.command.name() {
                    return Err(CliError::Config(format!(
                        "config was recorded by '{}', not '{}'",
                        value.trim(),
                        self.command.name()
                    )));
                }
                continue;
            }
            self.set(key, value).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("line {}: {m}", i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got '{pair}'")))?;
        self.set(key.trim(), value)
    }

    pub fn get(&self, name: &str) -> &str {
        self.values
            .iter()
            .find(|(k, _)| k.name == name)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("no key {name} for {}", self.command.name()))
    }

    pub fn is_set(&self, name: &str) -> bool {
        let v = self.get(name);
        !v.is_empty() && self.values.iter().any(|(k, _)| k.name == name && k.sentinel != Some(v))
    }

    pub fn f64(&self, name: &str) -> f64 {
        self.get(name).parse().expect("validated on set")
    }

    pub fn opt_f64(&self, name: &str) -> Option<f64> {
        self.is_set(name).then(|| self.f64(name))
    }

    pub fn u64(&self, name: &str) -> u64 {
        self.get(name).parse().expect("validated on set")
    }

    pub fn usize(&self, name: &str) -> usize {
        self.u64(name) as usize
    }

    pub fn opt_usize(&self, name: &str) -> Option<usize> {
        self.is_set(name).then(|| self.usize(name))
    }

    pub fn bool(&self, name: &str) -> bool {
        self.get(name) == "true"
    }

    /// `# homodyne <version>` followed by one `#@ key=value` line per
    /// setting; enough to replay the run.
    pub fn header(&self) -> String {
        let mut out = format!(
            "# homodyne {}\n#@ command={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command.name()
        );
        for (k, v) in &self.values {
            let _ = writeln!(out, "#@ {}={}", k.name, v);
        }
        out
    }

    /// Keys, defaults and help of a command, one per line.
    pub fn describe(command: Command) -> String {
        let cfg = RunConfig::new(command);
        let mut out = String::new();
        for (k, v) in &cfg.values {
            let _ = writeln!(out, "{:<24} {:<12} {}", k.name, v, k.help);
        }
        out
    }
}

static SPECTRUM_LO: Key = Key {
    name: "lo_photons",
    kind: Kind::Float {
        min: 0.0,
        max: f64::INFINITY,
        above: true,
    },
    default: "2.3e7",
    sentinel: None,
    help: "LO photons per pulse",
};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layers_and_range_checks() {
        let mut cfg = RunConfig::new(Command::Simulate);
        assert_eq!(cfg.get("pulses"), "262144");
        cfg.apply_text("# comment\npulses = 1000\nstate=coherent\n").unwrap();
        assert_eq!(cfg.usize("pulses"), 1000);
        assert!(matches!(cfg.set("pulses", "0"), Err(CliError::Config(_))));
        assert!(matches!(cfg.set("eta", "1.5"), Err(CliError::Config(_))));
        assert!(matches!(cfg.set("eta", "0"), Err(CliError::Config(_))));
        assert!(matches!(cfg.set("bogus", "1"), Err(CliError::Config(_))));
        assert!(matches!(cfg.set("state", "squeezed"), Err(CliError::Config(_))));
        assert!(cfg.set("kappa", "auto").is_ok());
        assert!(!cfg.is_set("kappa"));
        assert!(cfg.apply_text("pulses\n").is_err());
    }

    #[test]
    fn header_replays_the_run() {
        let mut cfg = RunConfig::new(Command::Simulate);
        for (k, v) in preset("coherent-paper", Command::Simulate).unwrap() {
            cfg.set(k, v).unwrap();
        }
        cfg.set("seed", "42").unwrap();
        let file = format!("{}index,theta_rad,quadrature\n0,0,1\n", cfg.header());
        let mut replay = RunConfig::new(Command::Simulate);
        replay.apply_text(&file).unwrap();
        assert_eq!(replay.header(), cfg.header());
        let mut wrong = RunConfig::new(Command::Wigner);
        assert!(wrong.apply_text(&file).is_err());
    }

    #[test]
    fn presets_only_touch_known_keys() {
        let keys = preset("single-photon", Command::Reconstruct).unwrap();
        assert!(keys.iter().any(|(k, v)| *k == "phases" && *v == "scan"));
        assert!(keys.iter().all(|(k, _)| *k != "sigma_e"));
        assert!(preset("squeezed", Command::Simulate).is_err());
        let spectrum = RunConfig::new(Command::Spectrum);
        assert_eq!(spectrum.get("lo_photons"), "2.3e7");
    }
}
