//! Flat `key = value` configuration files.
//!
//! Blank lines and text after `#` are ignored. Keys may appear once.
//! `units = si` (default) reads times in seconds, rates in s⁻¹ and
//! temperatures in kelvin; `units = natural` reads everything in units of
//! the oscillator (`ℏ = k_B = 1`). Unknown keys are rejected.
//!
//! Simulation keys: `omega` or `hold_time` (si only), `g`, `g_prime`,
//! `gamma_m`, `gamma_a`, `nbar` or `temperature`, `dim`, `t_max`,
//! `dt_initial`, `protocol` (`basic`, `boosted`, `spin_echo`), `n_pi`,
//! `samples`, `tolerance`, `tail_bound`, `boost_duration`, `diagnostics`.
//!
//! Design keys (si only): `atom_mass` (kg) or `atom_mass_amu`, `density`
//! (kg/m³), `splitting`, `distance`, `sphere_radius` (m), `kappa`,
//! `hold_time` (s), `temperature` (K), `oscillator_mass` (kg), `geometry`
//! (`single_sphere`, `four_sphere`, `custom`).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{thermal_occupation, thermal_occupation_natural};
use crate::design::{Geometry, PhysicalConfig};
use crate::error::{Error, Result};
use crate::lindblad::{Protocol, ProtocolConfig};
use crate::units::ATOMIC_MASS_UNIT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Si,
    Natural,
}

/// Parsed key/value pairs with their line numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected 'key = value'")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(Error::Config(format!("line {line_no}: empty key or value")));
            }
            if let Some((first, _)) = entries.insert(key.to_string(), (line_no, value.to_string())) {
                return Err(Error::Config(format!(
                    "line {line_no}: duplicate key '{key}' (first on line {first})"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: invalid value '{v}' for '{key}'"))),
        }
    }

    fn exclusive(&self, a: &str, b: &str) -> Result<()> {
        if self.contains(a) && self.contains(b) {
            return Err(Error::Config(format!("keys '{a}' and '{b}' are mutually exclusive")));
        }
        Ok(())
    }

    fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        for key in self.keys() {
            if key != "units" && !allowed.contains(&key) {
                return Err(Error::Config(format!("unknown key '{key}'")));
            }
        }
        Ok(())
    }

    pub fn units(&self) -> Result<Units> {
        match self.get_str("units") {
            None | Some("si") => Ok(Units::Si),
            Some("natural") => Ok(Units::Natural),
            Some(other) => Err(Error::Config(format!("units must be 'si' or 'natural', got '{other}'"))),
        }
    }
}

const SIMULATION_KEYS: &[&str] = &[
    "omega",
    "hold_time",
    "g",
    "g_prime",
    "gamma_m",
    "gamma_a",
    "nbar",
    "temperature",
    "dim",
    "t_max",
    "dt_initial",
    "protocol",
    "n_pi",
    "samples",
    "tolerance",
    "tail_bound",
    "boost_duration",
    "diagnostics",
];

const DESIGN_KEYS: &[&str] = &[
    "atom_mass",
    "atom_mass_amu",
    "density",
    "splitting",
    "distance",
    "sphere_radius",
    "kappa",
    "hold_time",
    "temperature",
    "oscillator_mass",
    "geometry",
];

fn parse_protocol(kv: &KeyValues) -> Result<Protocol> {
    let n_pi: Option<u32> = kv.get("n_pi")?;
    match kv.get_str("protocol").unwrap_or("basic") {
        "basic" | "boosted" if n_pi.is_some() => {
            Err(Error::Config("'n_pi' only applies to protocol = spin_echo".into()))
        }
        "basic" => Ok(Protocol::Basic),
        "boosted" => Ok(Protocol::Boosted),
        "spin_echo" | "spin-echo" => Ok(Protocol::SpinEcho { n_pi: n_pi.unwrap_or(1) }),
        other => Err(Error::Config(format!("unknown protocol '{other}'"))),
    }
}

/// Builds a simulation configuration, converted to oscillator units
/// (`ω = 1`) when the file is in SI.
pub fn protocol_config(kv: &KeyValues) -> Result<ProtocolConfig> {
    kv.reject_unknown(SIMULATION_KEYS)?;
    kv.exclusive("nbar", "temperature")?;
    kv.exclusive("omega", "hold_time")?;
    let units = kv.units()?;
    let omega = match (kv.get::<f64>("omega")?, kv.get::<f64>("hold_time")?) {
        (Some(w), None) => w,
        (None, Some(tau)) if units == Units::Si => 2.0 * std::f64::consts::PI / tau,
        (None, Some(_)) => return Err(Error::Config("'hold_time' needs units = si".into())),
        _ if units == Units::Natural => 1.0,
        _ => return Err(Error::Config("si simulation needs 'omega' or 'hold_time'".into())),
    };
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Config(format!("omega must be > 0, got {omega}")));
    }
    let nbar = match (kv.get::<f64>("nbar")?, kv.get::<f64>("temperature")?, units) {
        (Some(n), _, _) => n,
        (None, Some(t), Units::Si) => thermal_occupation(omega, t)?.nbar,
        (None, Some(t), Units::Natural) => thermal_occupation_natural(omega, t)?.nbar,
        (None, None, _) => 0.0,
    };
    // rates scale with 1/ω and times with ω when mapping to ω = 1
    let (rate, time) = match units {
        Units::Si => (1.0 / omega, omega),
        Units::Natural => (1.0, 1.0),
    };
    let f = |key: &str, default: f64| -> Result<f64> { Ok(kv.get::<f64>(key)?.unwrap_or(default)) };
    let defaults = ProtocolConfig::default();
    let cfg = ProtocolConfig {
        omega: omega * rate,
        g: f("g", 0.0)? * rate,
        g_prime: f("g_prime", 0.0)? * rate,
        gamma_m: f("gamma_m", 0.0)? * rate,
        gamma_a: f("gamma_a", 0.0)? * rate,
        nbar,
        dim: kv.get("dim")?,
        t_max: kv.get::<f64>("t_max")?.map_or(defaults.t_max, |t| t * time),
        dt_initial: kv.get::<f64>("dt_initial")?.map_or(defaults.dt_initial, |t| t * time),
        protocol: parse_protocol(kv)?,
        samples: kv.get("samples")?,
        tolerance: f("tolerance", defaults.tolerance)?,
        tail_bound: f("tail_bound", defaults.tail_bound)?,
        boost_duration: kv.get::<f64>("boost_duration")?.map(|t| t * time),
        state_diagnostics: kv.get("diagnostics")?.unwrap_or(false),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Builds a laboratory configuration; unspecified keys take the reference
/// values of [`PhysicalConfig::default`].
pub fn physical_config(kv: &KeyValues) -> Result<PhysicalConfig> {
    kv.reject_unknown(DESIGN_KEYS)?;
    if kv.units()? != Units::Si {
        return Err(Error::Config("design configurations are SI only".into()));
    }
    kv.exclusive("atom_mass", "atom_mass_amu")?;
    let d = PhysicalConfig::default();
    let f = |key: &str, default: f64| -> Result<f64> { Ok(kv.get::<f64>(key)?.unwrap_or(default)) };
    let atom_mass = match kv.get::<f64>("atom_mass_amu")? {
        Some(amu) => amu * ATOMIC_MASS_UNIT,
        None => f("atom_mass", d.atom_mass)?,
    };
    let geometry = match kv.get_str("geometry") {
        Some(g) => g.parse::<Geometry>()?,
        None => d.geometry,
    };
    Ok(PhysicalConfig {
        atom_mass,
        density: f("density", d.density)?,
        splitting: f("splitting", d.splitting)?,
        distance: f("distance", d.distance)?,
        sphere_radius: f("sphere_radius", d.sphere_radius)?,
        kappa: f("kappa", d.kappa)?,
        hold_time: f("hold_time", d.hold_time)?,
        temperature: f("temperature", d.temperature)?,
        oscillator_mass: kv.get("oscillator_mass")?,
        geometry,
    })
}
