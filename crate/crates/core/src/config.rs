//! Run configuration: flat `key = value` text with `#` comments.
//!
//! Keys are case-sensitive. Every key has a default except `model` and
//! `species`; defaults that depend on the model or species are resolved
//! after parsing. Unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::Binning;
use crate::params::{
    derive_scales, dimensionless_coeffs, preset, FieldConfig, Species, DEFAULT_B1, DEFAULT_LENGTH,
    DEFAULT_Y_START,
};
use crate::pauli::{GridSpec, GRID_CRITERION_LIMIT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("E_PARSE: line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("E_UNKNOWN_KEY: line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("E_RANGE: {key}: {message}")]
    Range { key: String, message: String },
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Parse { .. } => "E_PARSE",
            ConfigError::UnknownKey { .. } => "E_UNKNOWN_KEY",
            ConfigError::Range { .. } => "E_RANGE",
        }
    }

    fn range(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Range { key: key.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Newton,
    Event,
    Quantum,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Newton => "newton",
            Model::Event => "event",
            Model::Quantum => "quantum",
        }
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "newton" => Ok(Model::Newton),
            "event" => Ok(Model::Event),
            "quantum" => Ok(Model::Quantum),
            _ => Err(format!("unknown model `{s}` (expected newton, event or quantum)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinMode {
    /// Uniform on the sphere (particles) or uniform `cos(θ/2)` and `α`
    /// (quantum).
    Random,
    /// Given polar angle `theta`; the azimuth is random for particles and
    /// `alpha` for the quantum state.
    Polar,
    /// Particles only: the direction `(theta, phi)` for every particle.
    Fixed,
}

impl SpinMode {
    pub fn name(self) -> &'static str {
        match self {
            SpinMode::Random => "random",
            SpinMode::Polar => "polar",
            SpinMode::Fixed => "fixed",
        }
    }
}

/// Transverse velocity spread, in m/s or in units of `v*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaV {
    Absolute(f64),
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSettings {
    pub n: u64,
    pub tau: f64,
    pub spin: SpinMode,
    pub theta: f64,
    pub phi: f64,
    pub sigma_x: f64,
    pub sigma_v: SigmaV,
    /// Event model only.
    pub align: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumSettings {
    pub grid: usize,
    pub half_width: f64,
    /// In units of `t0`.
    pub t: f64,
    pub sigma: f64,
    pub spin: SpinMode,
    pub theta: f64,
    pub alpha: f64,
    /// `t0 = t*/reduce`, `v0 = v*/reduce`.
    pub reduce: f64,
    pub sigma_x_term: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub species: Species,
    pub b0: f64,
    pub b1: f64,
    pub y_start: f64,
    pub length: f64,
    pub seed: u64,
    pub output: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub binning: Binning,
    pub particles: ParticleSettings,
    pub quantum: QuantumSettings,
}

const KEYS: &[&str] = &[
    "model", "species", "B0", "B1", "y_start", "length", "seed", "output", "threads", "bins",
    "range", "n", "tau", "spin", "theta", "phi", "alpha", "sigma_x", "sigma_v", "sigma_v_rel",
    "align", "grid", "half_width", "t", "sigma", "reduce", "sigma_x_term",
];

/// Velocity spread used for event-model runs unless configured.
pub const EVENT_SIGMA_V_REL: f64 = 0.014;

struct Raw {
    values: BTreeMap<&'static str, (usize, String)>,
}

impl Raw {
    fn get(&self, key: &'static str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    fn parse<T: FromStr>(&self, key: &'static str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|e| ConfigError::Parse {
                line: *line,
                message: format!("{key}: cannot parse `{v}`: {e}"),
            }),
        }
    }

    fn count(&self, key: &'static str, default: u64) -> Result<u64, ConfigError> {
        let Some((line, v)) = self.values.get(key) else { return Ok(default) };
        if let Ok(n) = v.parse::<u64>() {
            return Ok(n);
        }
        match v.parse::<f64>() {
            Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) => Ok(x as u64),
            _ => Err(ConfigError::Parse {
                line: *line,
                message: format!("{key}: expected a non-negative integer, got `{v}`"),
            }),
        }
    }

    fn switch(&self, key: &'static str, default: bool) -> Result<bool, ConfigError> {
        match self.values.get(key) {
            None => Ok(default),
            Some((_, v)) if v == "on" || v == "true" => Ok(true),
            Some((_, v)) if v == "off" || v == "false" => Ok(false),
            Some((line, v)) => Err(ConfigError::Parse {
                line: *line,
                message: format!("{key}: expected on or off, got `{v}`"),
            }),
        }
    }
}

fn tokenize(text: &str) -> Result<Raw, ConfigError> {
    let mut values = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(ConfigError::Parse { line, message: format!("expected `key = value`, got `{content}`") });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::Parse { line, message: format!("malformed key `{k}`") });
        }
        if v.is_empty() {
            return Err(ConfigError::Parse { line, message: format!("missing value for `{k}`") });
        }
        let Some(&key) = KEYS.iter().find(|&&known| known == k) else {
            return Err(ConfigError::UnknownKey { line, key: k.to_string() });
        };
        if values.insert(key, (line, v.to_string())).is_some() {
            return Err(ConfigError::Parse { line, message: format!("duplicate key `{k}`") });
        }
    }
    Ok(Raw { values })
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw = tokenize(text)?;
    let model: Model = match raw.get("model") {
        Some(_) => raw.parse("model", Model::Newton)?,
        None => return Err(ConfigError::range("model", "required (newton, event or quantum)")),
    };
    let species: Species = match raw.get("species") {
        Some(_) => raw.parse("species", Species::Neutron)?,
        None => return Err(ConfigError::range("species", "required (neutron or silver)")),
    };

    let sigma_v = match (raw.get("sigma_v"), raw.get("sigma_v_rel")) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::range("sigma_v", "give either sigma_v or sigma_v_rel, not both"))
        }
        (Some(_), None) => SigmaV::Absolute(raw.parse("sigma_v", 0.0)?),
        (None, Some(_)) => SigmaV::Relative(raw.parse("sigma_v_rel", 0.0)?),
        (None, None) if model == Model::Event => SigmaV::Relative(EVENT_SIGMA_V_REL),
        (None, None) => SigmaV::Absolute(0.0),
    };
    let spin_default = if model == Model::Quantum { SpinMode::Polar } else { SpinMode::Random };
    let spin = match raw.get("spin") {
        None => spin_default,
        Some("random") => SpinMode::Random,
        Some("polar") => SpinMode::Polar,
        Some("fixed") if model != Model::Quantum => SpinMode::Fixed,
        Some(other) => {
            return Err(ConfigError::range("spin", format!("`{other}` is not a spin mode for the {} model", model.name())))
        }
    };
    let theta_default = if model == Model::Quantum { std::f64::consts::FRAC_PI_2 } else { 0.0 };
    let theta = raw.parse("theta", theta_default)?;
    let (grid_default, hw_default, reduce_default) = match species {
        Species::ImaginarySilver => (1024, 4.0, 1.0),
        Species::Neutron => (512, 1.5, 10.0),
    };

    let cfg = RunConfig {
        model,
        species,
        b0: raw.parse("B0", 1.0)?,
        b1: raw.parse("B1", DEFAULT_B1)?,
        y_start: raw.parse("y_start", DEFAULT_Y_START)?,
        length: raw.parse("length", DEFAULT_LENGTH)?,
        seed: raw.count("seed", 0)?,
        output: PathBuf::from(raw.get("output").unwrap_or("out")),
        threads: raw.count("threads", 0)? as usize,
        binning: Binning {
            bins: raw.count("bins", 201)? as usize,
            range: raw.parse("range", 1.5)?,
        },
        particles: ParticleSettings {
            n: raw.count("n", 10_000)?,
            tau: raw.parse("tau", 1e-8)?,
            spin,
            theta,
            phi: raw.parse("phi", 0.0)?,
            sigma_x: raw.parse("sigma_x", 0.0)?,
            sigma_v,
            align: raw.switch("align", true)?,
        },
        quantum: QuantumSettings {
            grid: raw.count("grid", grid_default)? as usize,
            half_width: raw.parse("half_width", hw_default)?,
            t: raw.parse("t", 1.0)?,
            sigma: raw.parse("sigma", 0.1)?,
            spin,
            theta,
            alpha: raw.parse("alpha", std::f64::consts::FRAC_PI_4)?,
            reduce: raw.parse("reduce", reduce_default)?,
            sigma_x_term: raw.switch("sigma_x_term", true)?,
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::range(key, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(key: &str, v: f64, rule: &str) -> Result<(), ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::range(key, format!("{rule}, got {v}")))
    }
}

impl RunConfig {
    pub fn field(&self) -> FieldConfig {
        FieldConfig { b0: self.b0, b1: self.b1, y_start: self.y_start, y_end: self.y_start + self.length }
    }

    /// Checks every engine precondition that can be checked without running.
    pub fn validate(&self) -> Result<(), ConfigError> {
        non_negative("B0", self.b0, "uniform field B0 >= 0 by convention")?;
        non_negative("B1", self.b1, "gradient B1 >= 0")?;
        non_negative("y_start", self.y_start, "magnet entrance must lie downstream of the source at y = 0")?;
        positive("length", self.length)?;
        if self.binning.bins < 2 {
            return Err(ConfigError::range("bins", format!("need at least 2 bins, got {}", self.binning.bins)));
        }
        positive("range", self.binning.range)?;
        match self.model {
            Model::Newton | Model::Event => self.validate_particles(),
            Model::Quantum => self.validate_quantum(),
        }
    }

    fn validate_particles(&self) -> Result<(), ConfigError> {
        let p = &self.particles;
        if p.n == 0 {
            return Err(ConfigError::range("n", "ensemble needs n >= 1"));
        }
        positive("tau", p.tau)?;
        if !(p.theta.is_finite() && p.phi.is_finite()) {
            return Err(ConfigError::range("theta", "angles must be finite"));
        }
        non_negative("sigma_x", p.sigma_x, "position spread >= 0")?;
        match p.sigma_v {
            SigmaV::Absolute(v) => non_negative("sigma_v", v, "velocity spread >= 0")?,
            SigmaV::Relative(v) => non_negative("sigma_v_rel", v, "velocity spread >= 0")?,
        }
        Ok(())
    }

    fn validate_quantum(&self) -> Result<(), ConfigError> {
        let q = &self.quantum;
        let spec = GridSpec::new(q.grid, q.half_width).map_err(|e| match e {
            crate::error::PauliError::HalfWidth(_) => ConfigError::range("half_width", e.to_string()),
            _ => ConfigError::range("grid", e.to_string()),
        })?;
        positive("sigma", q.sigma)?;
        if q.sigma < 3.0 * spec.mesh() {
            return Err(ConfigError::range(
                "sigma",
                format!("sigma = {} is not resolved by mesh {} (need sigma >= 3 mesh)", q.sigma, spec.mesh()),
            ));
        }
        non_negative("t", q.t, "propagation time t >= 0")?;
        positive("reduce", q.reduce)?;
        if !(q.theta.is_finite() && q.alpha.is_finite()) {
            return Err(ConfigError::range("theta", "angles must be finite"));
        }
        let coeffs = self.quantum_coeffs()?;
        let value = spec.criterion(coeffs.a);
        if value >= GRID_CRITERION_LIMIT {
            return Err(ConfigError::range(
                "grid",
                format!(
                    "grid criterion 2*a*mesh = {value:.3} >= {GRID_CRITERION_LIMIT:.4} for a = {:.6}: refine the grid, shrink half_width or raise reduce",
                    coeffs.a
                ),
            ));
        }
        Ok(())
    }

    /// Dimensionless coefficients for the quantum run.
    pub fn quantum_coeffs(&self) -> Result<crate::params::DimensionlessCoeffs, ConfigError> {
        let (params, beam) = preset(self.species);
        let field = FieldConfig::new(self.b0, self.b1, self.y_start, self.y_start + self.length)
            .map_err(|e| ConfigError::range("B0", e.to_string()))?;
        let sc = derive_scales(&params, &field, &beam).map_err(|e| ConfigError::range("species", e.to_string()))?;
        let (t0, v0) = (sc.t_star / self.quantum.reduce, sc.v_star / self.quantum.reduce);
        dimensionless_coeffs(&params, &field, t0, v0).map_err(|e| ConfigError::range("B1", e.to_string()))
    }

    /// Canonical text that parses back to this configuration.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        kv("model", self.model.name().into());
        kv("species", self.species.name().into());
        kv("B0", self.b0.to_string());
        kv("B1", self.b1.to_string());
        kv("y_start", self.y_start.to_string());
        kv("length", self.length.to_string());
        kv("seed", self.seed.to_string());
        kv("output", self.output.display().to_string());
        kv("threads", self.threads.to_string());
        kv("bins", self.binning.bins.to_string());
        kv("range", self.binning.range.to_string());
        match self.model {
            Model::Newton | Model::Event => {
                let p = &self.particles;
                kv("n", p.n.to_string());
                kv("tau", p.tau.to_string());
                kv("spin", p.spin.name().into());
                kv("theta", p.theta.to_string());
                kv("phi", p.phi.to_string());
                kv("sigma_x", p.sigma_x.to_string());
                match p.sigma_v {
                    SigmaV::Absolute(v) => kv("sigma_v", v.to_string()),
                    SigmaV::Relative(v) => kv("sigma_v_rel", v.to_string()),
                }
                if self.model == Model::Event {
                    kv("align", if p.align { "on" } else { "off" }.into());
                }
            }
            Model::Quantum => {
                let q = &self.quantum;
                kv("grid", q.grid.to_string());
                kv("half_width", q.half_width.to_string());
                kv("t", q.t.to_string());
                kv("sigma", q.sigma.to_string());
                kv("spin", q.spin.name().into());
                kv("theta", q.theta.to_string());
                kv("alpha", q.alpha.to_string());
                kv("reduce", q.reduce.to_string());
                kv("sigma_x_term", if q.sigma_x_term { "on" } else { "off" }.into());
            }
        }
        s
    }
}

/// Parses a comma-separated list of non-negative field strengths.
pub fn parse_b0_list(text: &str) -> Result<Vec<f64>, ConfigError> {
    let mut out = Vec::new();
    for (i, item) in text.split(',').enumerate() {
        let item = item.trim();
        let v: f64 = item.parse().map_err(|_| ConfigError::Parse {
            line: 1,
            message: format!("B0 list entry {} `{item}` is not a number", i + 1),
        })?;
        non_negative("B0", v, "uniform field B0 >= 0 by convention")?;
        out.push(v);
    }
    Ok(out)
}
