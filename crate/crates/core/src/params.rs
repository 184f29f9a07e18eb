//! Physical parameters, printed presets, unit handling and Bragg-regime
//! diagnostics.
//!
//! Internally ℏ = 1: every rate is an angular frequency in rad/s and every
//! duration is in seconds. Conversion from printed values (GHz, kHz, nm,
//! amu) happens in [`Quantity::to_si`] and nowhere else.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Ratio below which the closed-form propagator refuses to run.
pub const RATIO_FAIL: f64 = 2.0;
/// Ratio below which diagnostics report `warn`.
pub const RATIO_WARN: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("parameter {0} must be positive and finite")]
    NonPositive(&'static str),
    #[error("Bragg order l0 = {0} must be a positive even integer")]
    BadBraggOrder(i32),
    #[error("unknown parameter key {0:?}")]
    UnknownKey(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bad value {value:?} for {key}: {message}")]
    BadValue {
        key: String,
        value: String,
        message: String,
    },
    #[error("io error reading {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "rad/s")]
    RadPerSecond,
    #[serde(rename = "Hz")]
    Hertz,
    #[serde(rename = "kHz")]
    Kilohertz,
    #[serde(rename = "MHz")]
    Megahertz,
    #[serde(rename = "GHz")]
    Gigahertz,
    #[serde(rename = "1/m")]
    PerMeter,
    #[serde(rename = "m")]
    Meter,
    #[serde(rename = "nm")]
    Nanometer,
    #[serde(rename = "kg")]
    Kilogram,
    #[serde(rename = "amu")]
    Amu,
    #[serde(rename = "s")]
    Second,
    #[serde(rename = "ms")]
    Millisecond,
    #[serde(rename = "us")]
    Microsecond,
    #[serde(rename = "1")]
    Dimensionless,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::RadPerSecond => "rad/s",
            Unit::Hertz => "Hz",
            Unit::Kilohertz => "kHz",
            Unit::Megahertz => "MHz",
            Unit::Gigahertz => "GHz",
            Unit::PerMeter => "1/m",
            Unit::Meter => "m",
            Unit::Nanometer => "nm",
            Unit::Kilogram => "kg",
            Unit::Amu => "amu",
            Unit::Second => "s",
            Unit::Millisecond => "ms",
            Unit::Microsecond => "us",
            Unit::Dimensionless => "1",
        }
    }

    fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "rad/s" => Unit::RadPerSecond,
            "Hz" => Unit::Hertz,
            "kHz" | "KHz" => Unit::Kilohertz,
            "MHz" => Unit::Megahertz,
            "GHz" => Unit::Gigahertz,
            "1/m" => Unit::PerMeter,
            "m" => Unit::Meter,
            "nm" => Unit::Nanometer,
            "kg" => Unit::Kilogram,
            "amu" => Unit::Amu,
            "s" => Unit::Second,
            "ms" => Unit::Millisecond,
            "us" | "μs" => Unit::Microsecond,
            "1" | "" => Unit::Dimensionless,
            _ => return None,
        })
    }

    fn is_frequency(self) -> bool {
        matches!(
            self,
            Unit::Hertz | Unit::Kilohertz | Unit::Megahertz | Unit::Gigahertz
        )
    }
}

/// How a printed "X Hz" frequency maps to rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyReading {
    /// "X GHz" means X·10⁹ rad/s.
    #[default]
    Angular,
    /// "X GHz" means 2π·X·10⁹ rad/s.
    Cyclic,
}

/// A value with the unit it was printed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub const fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }

    /// SI value (rad/s, 1/m, m, kg, s).
    pub fn to_si(self, reading: FrequencyReading) -> f64 {
        let v = self.value;
        let freq_scale = match reading {
            FrequencyReading::Angular => 1.0,
            FrequencyReading::Cyclic => 2.0 * PI,
        };
        match self.unit {
            Unit::RadPerSecond | Unit::PerMeter | Unit::Meter | Unit::Kilogram => v,
            Unit::Hertz => v * freq_scale,
            Unit::Kilohertz => v * 1e3 * freq_scale,
            Unit::Megahertz => v * 1e6 * freq_scale,
            Unit::Gigahertz => v * 1e9 * freq_scale,
            Unit::Nanometer => v * 1e-9,
            Unit::Amu => v * AMU,
            Unit::Second | Unit::Dimensionless => v,
            Unit::Millisecond => v * 1e-3,
            Unit::Microsecond => v * 1e-6,
        }
    }

    pub fn is_frequency(self) -> bool {
        self.unit.is_frequency() || self.unit == Unit::RadPerSecond
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unit == Unit::Dimensionless {
            write!(f, "{:?}", self.value)
        } else {
            write!(f, "{:?} {}", self.value, self.unit.symbol())
        }
    }
}

impl FromStr for Quantity {
    type Err = String;

    /// `"13 us"`, `"13us"` or a bare number.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let split = s
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(s.len()))
            .rev()
            .find(|&i| i > 0 && s[..i].parse::<f64>().is_ok())
            .ok_or_else(|| format!("not a number: {s:?}"))?;
        let value: f64 = s[..split].parse().expect("checked above");
        let unit = s[split..].trim();
        let unit = Unit::from_symbol(unit).ok_or_else(|| format!("unknown unit {unit:?}"))?;
        Ok(Self { value, unit })
    }
}

/// Model parameters in SI units with ℏ = 1 for rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Atom–field coupling μ (rad/s).
    pub mu: f64,
    /// Detuning Δ (rad/s).
    pub delta: f64,
    /// Classical Rabi frequency Ω (rad/s).
    pub omega: f64,
    /// Field wavenumber (1/m).
    pub k: f64,
    /// Atom mass (kg).
    pub mass: f64,
    /// Bragg order.
    pub l0: i32,
}

impl PhysicalParams {
    pub fn new(mu: f64, delta: f64, omega: f64, k: f64, mass: f64) -> Result<Self, ParamsError> {
        let p = Self {
            mu,
            delta,
            omega,
            k,
            mass,
            l0: 2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        for (name, v) in [
            ("mu", self.mu),
            ("delta", self.delta),
            ("omega", self.omega),
            ("k", self.k),
            ("mass", self.mass),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ParamsError::NonPositive(name));
            }
        }
        if self.l0 <= 0 || self.l0 % 2 != 0 {
            return Err(ParamsError::BadBraggOrder(self.l0));
        }
        Ok(())
    }

    /// Recoil frequency ℏk²/2M (rad/s).
    pub fn omega_r(&self) -> f64 {
        HBAR * self.k * self.k / (2.0 * self.mass)
    }

    /// Effective Bragg coupling μ²/4Δ (rad/s).
    pub fn beta(&self) -> f64 {
        self.mu * self.mu / (4.0 * self.delta)
    }

    pub fn delta_over_omega_r(&self) -> f64 {
        self.delta / self.omega_r()
    }

    /// 2πΔ/μ², the time at which βt = π/2.
    pub fn bragg_time(&self) -> f64 {
        2.0 * PI * self.delta / (self.mu * self.mu)
    }

    /// π/(2μ), full single-photon transfer in the resonant exchange.
    pub fn jc_transfer_time(&self) -> f64 {
        PI / (2.0 * self.mu)
    }

    /// π/Ω.
    pub fn pi_pulse_time(&self) -> f64 {
        PI / self.omega
    }

    /// Move to Δ = ratio·ω_r while holding β fixed (μ follows).
    pub fn at_ratio(&self, ratio: f64) -> Self {
        let beta = self.beta();
        let delta = ratio * self.omega_r();
        Self {
            delta,
            mu: (4.0 * delta * beta).sqrt(),
            ..*self
        }
    }

    /// Set μ so that β/ω_r equals `ratio` at the current Δ.
    pub fn with_beta_over_omega_r(&self, ratio: f64) -> Self {
        let beta = ratio * self.omega_r();
        Self {
            mu: (4.0 * self.delta * beta).sqrt(),
            ..*self
        }
    }
}

/// Provenance of a preset, with numbers in the units they were printed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceNotes {
    pub wavelength: Quantity,
    pub finesse: f64,
    pub omega_r_printed: Quantity,
    pub delta_printed: Quantity,
    pub omega_printed: Option<Quantity>,
    pub effective_rabi_printed: Option<Quantity>,
    pub interaction_time: Option<Quantity>,
    pub cavity_lifetime: Option<Quantity>,
    pub remarks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPreset {
    pub name: String,
    pub params: PhysicalParams,
    pub notes: ProvenanceNotes,
}

const RB85_OMEGA_R: Quantity = Quantity::new(2.4e4, Unit::RadPerSecond);
const HE4_OMEGA_R: Quantity = Quantity::new(1.06, Unit::Megahertz);
const HE4_BETA: Quantity = Quantity::new(120.0, Unit::Kilohertz);

fn rb85(reading: FrequencyReading) -> ParamPreset {
    let wavelength = Quantity::new(780.0, Unit::Nanometer);
    let delta_printed = Quantity::new(1.0, Unit::Gigahertz);
    let omega_rabi = 2.0 * PI * Quantity::new(16.4, Unit::Megahertz).to_si(FrequencyReading::Angular);
    let k = 2.0 * PI / wavelength.to_si(reading);
    let mass = Quantity::new(85.0, Unit::Amu).to_si(reading);
    let delta = delta_printed.to_si(reading);
    // No cavity coupling is printed for Rb; take the He preset's β/ω_r.
    let ratio = HE4_BETA.to_si(reading) / HE4_OMEGA_R.to_si(reading);
    let base = PhysicalParams {
        mu: 1.0,
        delta,
        omega: omega_rabi,
        k,
        mass,
        l0: 2,
    };
    let params = base.with_beta_over_omega_r(ratio);
    ParamPreset {
        name: "rb85".into(),
        params,
        notes: ProvenanceNotes {
            wavelength,
            finesse: 4.4e5,
            omega_r_printed: RB85_OMEGA_R,
            delta_printed,
            omega_printed: Some(Quantity::new(16.4, Unit::Megahertz)),
            effective_rabi_printed: None,
            interaction_time: None,
            cavity_lifetime: None,
            remarks: vec![
                "omega printed as 2 pi x 16.4 MHz".into(),
                "mu not printed: chosen so beta/omega_r equals the he4 preset ratio".into(),
                "a lifetime of around 0.5 us is quoted next to the interaction-time remark; not used".into(),
            ],
        },
    }
}

fn he4(reading: FrequencyReading) -> ParamPreset {
    let wavelength = Quantity::new(543.5, Unit::Nanometer);
    let delta_printed = Quantity::new(6.28, Unit::Gigahertz);
    let k = 2.0 * PI / wavelength.to_si(reading);
    let mass = Quantity::new(4.0, Unit::Amu).to_si(reading);
    let delta = delta_printed.to_si(reading);
    let beta = HE4_BETA.to_si(reading);
    let params = PhysicalParams {
        mu: (4.0 * delta * beta).sqrt(),
        delta,
        omega: 2.0 * PI * 16.4e6,
        k,
        mass,
        l0: 2,
    };
    ParamPreset {
        name: "he4".into(),
        params,
        notes: ProvenanceNotes {
            wavelength,
            finesse: 7.85e6,
            omega_r_printed: HE4_OMEGA_R,
            delta_printed,
            omega_printed: None,
            effective_rabi_printed: Some(HE4_BETA),
            interaction_time: Some(Quantity::new(13.0, Unit::Microsecond)),
            cavity_lifetime: Some(Quantity::new(1.0, Unit::Millisecond)),
            remarks: vec![
                "omega not printed: classical Rabi frequency borrowed from rb85".into(),
                "cavity lifetime printed as 'up to milliseconds'; 1 ms stored".into(),
            ],
        },
    }
}

pub const PRESET_NAMES: [&str; 2] = ["rb85", "he4"];

/// Built-in preset with frequencies read as angular.
pub fn preset(name: &str) -> Result<ParamPreset, ParamsError> {
    preset_with_reading(name, FrequencyReading::Angular)
}

pub fn preset_with_reading(name: &str, reading: FrequencyReading) -> Result<ParamPreset, ParamsError> {
    match name {
        "rb85" => Ok(rb85(reading)),
        "he4" => Ok(he4(reading)),
        other => Err(ParamsError::UnknownPreset(other.to_string())),
    }
}

/// Look in `dir/<name>.params` first, then fall back to the built-ins.
pub fn resolve_preset(name: &str, dir: Option<&Path>) -> Result<ParamPreset, ParamsError> {
    if let Some(dir) = dir {
        let path = dir.join(format!("{name}.params"));
        if path.is_file() {
            return load_preset_file(&path);
        }
    }
    preset(name)
}

pub fn load_preset_file(path: &Path) -> Result<ParamPreset, ParamsError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParamsError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ParamPreset::from_key_values(&text)
}

impl ParamPreset {
    /// Plain `key = value` text, one field per line.
    pub fn to_key_values(&self) -> String {
        let p = &self.params;
        let n = &self.notes;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        line("name", self.name.clone());
        line("mu", format!("{:?} rad/s", p.mu));
        line("delta", format!("{:?} rad/s", p.delta));
        line("omega", format!("{:?} rad/s", p.omega));
        line("k", format!("{:?} 1/m", p.k));
        line("mass", format!("{:?} kg", p.mass));
        line("l0", p.l0.to_string());
        line("wavelength", n.wavelength.to_string());
        line("finesse", format!("{:?}", n.finesse));
        line("omega_r_printed", n.omega_r_printed.to_string());
        line("delta_printed", n.delta_printed.to_string());
        if let Some(q) = n.omega_printed {
            line("omega_printed", q.to_string());
        }
        if let Some(q) = n.effective_rabi_printed {
            line("effective_rabi_printed", q.to_string());
        }
        if let Some(q) = n.interaction_time {
            line("interaction_time", q.to_string());
        }
        if let Some(q) = n.cavity_lifetime {
            line("cavity_lifetime", q.to_string());
        }
        for r in &n.remarks {
            line("remark", r.clone());
        }
        out
    }

    /// Parse `key = value` text. Missing keys fall back to the preset named
    /// by `base`, else by `name` if built in, else `rb85`. `#` starts a comment.
    pub fn from_key_values(text: &str) -> Result<Self, ParamsError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ParamsError::Parse {
                line: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            pairs.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let lookup = |key: &str| {
            pairs
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(_, _, v)| v.clone())
        };
        let base_name = lookup("base")
            .or_else(|| lookup("name").filter(|n| PRESET_NAMES.contains(&n.as_str())))
            .unwrap_or_else(|| "rb85".into());
        let mut preset = preset(&base_name)?;
        let mut remarks = Vec::new();
        let mut overrides = Vec::new();
        for (line, k, v) in pairs {
            let q = || -> Result<Quantity, ParamsError> {
                v.parse().map_err(|message| ParamsError::Parse { line, message })
            };
            match k.as_str() {
                "base" => {}
                "name" => preset.name = v.clone(),
                "finesse" => preset.notes.finesse = q()?.value,
                "omega_r_printed" => preset.notes.omega_r_printed = q()?,
                "delta_printed" => preset.notes.delta_printed = q()?,
                "omega_printed" => preset.notes.omega_printed = Some(q()?),
                "effective_rabi_printed" => preset.notes.effective_rabi_printed = Some(q()?),
                "interaction_time" => preset.notes.interaction_time = Some(q()?),
                "cavity_lifetime" => preset.notes.cavity_lifetime = Some(q()?),
                "remark" => remarks.push(v.clone()),
                "wavelength" => {
                    preset.notes.wavelength = q()?;
                    overrides.push((k.clone(), v.clone()));
                }
                _ => overrides.push((k.clone(), v.clone())),
            }
        }
        preset.notes.remarks = remarks;
        preset.params = apply_overrides(&preset.params, &overrides)?;
        Ok(preset)
    }
}

/// Keys accepted by [`apply_overrides`].
pub const OVERRIDE_KEYS: [&str; 10] = [
    "mu",
    "delta",
    "omega",
    "k",
    "wavelength",
    "mass",
    "l0",
    "delta_over_omega_r",
    "beta",
    "beta_over_omega_r",
];

/// Apply `key=value` overrides in a fixed order: raw fields first, then
/// `delta_over_omega_r`, then `beta` / `beta_over_omega_r` (which set μ).
pub fn apply_overrides(
    base: &PhysicalParams,
    overrides: &[(String, String)],
) -> Result<PhysicalParams, ParamsError> {
    let mut p = *base;
    let mut ratio = None;
    let mut beta = None;
    let mut beta_ratio = None;
    for (key, value) in overrides {
        let bad = |message: String| ParamsError::BadValue {
            key: key.clone(),
            value: value.clone(),
            message,
        };
        let q: Quantity = value.parse().map_err(bad)?;
        let si = q.to_si(FrequencyReading::Angular);
        match key.as_str() {
            "mu" => p.mu = si,
            "delta" => p.delta = si,
            "omega" => p.omega = si,
            "k" => p.k = si,
            "wavelength" => p.k = 2.0 * PI / si,
            "mass" => p.mass = si,
            "l0" => {
                if si.fract() != 0.0 {
                    return Err(bad("l0 must be an integer".into()));
                }
                p.l0 = si as i32;
            }
            "delta_over_omega_r" => ratio = Some(si),
            "beta" => beta = Some(si),
            "beta_over_omega_r" => beta_ratio = Some(si),
            _ => return Err(ParamsError::UnknownKey(key.clone())),
        }
    }
    if let Some(r) = ratio {
        p.delta = r * p.omega_r();
    }
    if let Some(b) = beta {
        p.mu = (4.0 * p.delta * b).sqrt();
    }
    if let Some(r) = beta_ratio {
        p = p.with_beta_over_omega_r(r);
    }
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeStatus {
    Fail,
    Warn,
    Ok,
}

impl fmt::Display for RegimeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeStatus::Ok => "ok",
            RegimeStatus::Warn => "warn",
            RegimeStatus::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostics {
    pub delta_over_omega_r: f64,
    pub omega_r: f64,
    pub beta: f64,
    /// 2πΔ/μ² in seconds.
    pub interaction_time: f64,
    pub cavity_lifetime: Option<f64>,
    pub exceeds_lifetime: Option<bool>,
    pub status: RegimeStatus,
}

pub fn regime_status(ratio: f64) -> RegimeStatus {
    if !(ratio >= RATIO_FAIL) {
        RegimeStatus::Fail
    } else if ratio < RATIO_WARN {
        RegimeStatus::Warn
    } else {
        RegimeStatus::Ok
    }
}

pub fn validate_bragg_regime(params: &PhysicalParams, lifetime: Option<f64>) -> RegimeDiagnostics {
    let ratio = params.delta_over_omega_r();
    let t = params.bragg_time();
    RegimeDiagnostics {
        delta_over_omega_r: ratio,
        omega_r: params.omega_r(),
        beta: params.beta(),
        interaction_time: t,
        cavity_lifetime: lifetime,
        exceeds_lifetime: lifetime.map(|l| t > l),
        status: regime_status(ratio),
    }
}

impl ParamPreset {
    pub fn diagnostics(&self) -> RegimeDiagnostics {
        let lifetime = self
            .notes
            .cavity_lifetime
            .map(|q| q.to_si(FrequencyReading::Angular));
        validate_bragg_regime(&self.params, lifetime)
    }
}
