//! Laboratory parameters to dimensionless couplings and signal sizes.
//!
//! The oscillator frequency is tied to the interferometer hold time,
//! `ω = 2π/τ`. Closed forms:
//!
//! - `g = κ G m M ℓ x₀ / (ℏ R³)` with `x₀ = √(ℏ/2Mω)`
//! - `K² = G² m² ρ k_B T / (ℓ ω⁴ ℏ²)`
//! - `ΔV = π G² m² ρ (8 + n̄) / (3√2 ℓ ω³ ℏ)`
//! - `ΔV_b = 2^{1/4} G m √(ρ (8 + n̄) / (3 ℓ ω³ ℏ))`
//!
//! In the high-temperature limit `ΔV → (π/3√2) K²` and
//! `ΔV_b → (2^{1/4}/√3) K`.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::thermal_occupation;
use crate::error::{domain, Error, Result};
use crate::units::{BOLTZMANN, CESIUM_MASS, HBAR, NEWTON_G};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// One sphere of radius `R_s` at distance `L` from the trap midpoint;
    /// `M = (4/3)πR_s³ρ`.
    #[default]
    SingleSphere,
    /// Four spheres around the trap; requires `R_s < ℓ/2`.
    FourSphere,
    /// Explicit oscillator mass.
    Custom,
}

impl std::str::FromStr for Geometry {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_sphere" => Ok(Self::SingleSphere),
            "four_sphere" => Ok(Self::FourSphere),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!(
                "unknown geometry '{other}' (expected single_sphere, four_sphere or custom)"
            ))),
        }
    }
}

/// SI laboratory parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    /// kg
    pub atom_mass: f64,
    /// kg/m³
    pub density: f64,
    /// Splitting `ℓ` between the two atom positions, m.
    pub splitting: f64,
    /// Distance `L` from the trap midpoint to the sphere center, m.
    pub distance: f64,
    /// m
    pub sphere_radius: f64,
    pub kappa: f64,
    /// s
    pub hold_time: f64,
    /// K
    pub temperature: f64,
    /// kg; required for [`Geometry::Custom`], derived otherwise.
    pub oscillator_mass: Option<f64>,
    pub geometry: Geometry,
}

impl Default for PhysicalConfig {
    /// Cesium, ρ = 20 g/cm³, ℓ = 1 mm, L = 1/√2 mm, R_s = 0.35 mm,
    /// τ = 100 s, T = 300 K.
    fn default() -> Self {
        Self {
            atom_mass: CESIUM_MASS,
            density: 20_000.0,
            splitting: 1e-3,
            distance: 1e-3 / SQRT_2,
            sphere_radius: 0.35e-3,
            kappa: 1.0,
            hold_time: 100.0,
            temperature: 300.0,
            oscillator_mass: None,
            geometry: Geometry::SingleSphere,
        }
    }
}

impl PhysicalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("atom_mass", self.atom_mass),
            ("density", self.density),
            ("splitting", self.splitting),
            ("distance", self.distance),
            ("sphere_radius", self.sphere_radius),
            ("kappa", self.kappa),
            ("hold_time", self.hold_time),
            ("temperature", self.temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if let Some(m) = self.oscillator_mass {
            if !(m > 0.0) || !m.is_finite() {
                return Err(domain(format!("oscillator_mass must be finite and > 0, got {m}")));
            }
        }
        match self.geometry {
            Geometry::FourSphere if self.sphere_radius >= self.splitting / 2.0 => {
                Err(Error::Geometry(format!(
                    "four_sphere packing needs sphere_radius < splitting/2 ({} >= {})",
                    self.sphere_radius,
                    self.splitting / 2.0
                )))
            }
            Geometry::SingleSphere if self.sphere_radius >= self.atom_distance() => {
                Err(Error::Geometry(format!(
                    "sphere of radius {} overlaps the atoms at distance {}",
                    self.sphere_radius,
                    self.atom_distance()
                )))
            }
            Geometry::Custom if self.oscillator_mass.is_none() => {
                Err(domain("custom geometry needs oscillator_mass"))
            }
            _ => Ok(()),
        }
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.hold_time
    }

    /// `R = √(L² + (ℓ/2)²)`.
    pub fn atom_distance(&self) -> f64 {
        self.distance.hypot(self.splitting / 2.0)
    }

    pub fn sphere_mass(&self) -> f64 {
        4.0 / 3.0 * PI * self.sphere_radius.powi(3) * self.density
    }

    pub fn resolved_oscillator_mass(&self) -> f64 {
        match (self.geometry, self.oscillator_mass) {
            (_, Some(m)) => m,
            (Geometry::FourSphere, None) => 4.0 * self.sphere_mass(),
            _ => self.sphere_mass(),
        }
    }

    /// `k_B T / ℏω`.
    pub fn thermal_ratio(&self) -> f64 {
        BOLTZMANN * self.temperature / (HBAR * self.omega())
    }
}

/// Derived quantities for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub omega: f64,
    pub oscillator_mass: f64,
    pub x0: f64,
    pub g: f64,
    pub lambda: f64,
    pub nbar: f64,
    pub thermal_ratio: f64,
    pub k_squared: f64,
    pub delta_v: f64,
    pub delta_v_boosted: f64,
    pub warnings: Vec<String>,
}

/// Zero-point length `√(ℏ/2Mω)`.
pub fn zero_point_length(oscillator_mass: f64, omega: f64) -> f64 {
    (HBAR / (2.0 * oscillator_mass * omega)).sqrt()
}

pub fn coupling_g(cfg: &PhysicalConfig) -> Result<f64> {
    cfg.validate()?;
    let m_osc = cfg.resolved_oscillator_mass();
    let x0 = zero_point_length(m_osc, cfg.omega());
    let r = cfg.atom_distance();
    Ok(cfg.kappa * NEWTON_G * cfg.atom_mass * m_osc * cfg.splitting * x0 / (HBAR * r.powi(3)))
}

pub fn k_squared(cfg: &PhysicalConfig) -> Result<f64> {
    cfg.validate()?;
    let w = cfg.omega();
    let gm = NEWTON_G * cfg.atom_mass;
    Ok(gm * gm * cfg.density * BOLTZMANN * cfg.temperature / (cfg.splitting * w.powi(4) * HBAR * HBAR))
}

fn nbar(cfg: &PhysicalConfig) -> Result<f64> {
    Ok(thermal_occupation(cfg.omega(), cfg.temperature)?.nbar)
}

pub fn delta_v(cfg: &PhysicalConfig) -> Result<f64> {
    cfg.validate()?;
    let w = cfg.omega();
    let gm = NEWTON_G * cfg.atom_mass;
    Ok(PI * gm * gm * cfg.density * (8.0 + nbar(cfg)?) / (3.0 * SQRT_2 * cfg.splitting * w.powi(3) * HBAR))
}

pub fn delta_v_boosted(cfg: &PhysicalConfig) -> Result<f64> {
    cfg.validate()?;
    let w = cfg.omega();
    let inner = cfg.density * (8.0 + nbar(cfg)?) / (3.0 * cfg.splitting * w.powi(3) * HBAR);
    Ok(2f64.powf(0.25) * NEWTON_G * cfg.atom_mass * inner.sqrt())
}

pub fn derive(cfg: &PhysicalConfig) -> Result<DerivedParams> {
    cfg.validate()?;
    let omega = cfg.omega();
    let oscillator_mass = cfg.resolved_oscillator_mass();
    let g = coupling_g(cfg)?;
    let thermal_ratio = cfg.thermal_ratio();
    let mut warnings = Vec::new();
    if thermal_ratio < 10.0 {
        warnings.push(format!(
            "k_B T / hbar omega = {thermal_ratio:.3e} < 10: the (8 + nbar) closed forms are only anchored in the high-temperature limit"
        ));
    }
    if cfg.geometry == Geometry::FourSphere {
        warnings.push("four_sphere: oscillator_mass is the total of four spheres, for information only".into());
    }
    Ok(DerivedParams {
        omega,
        oscillator_mass,
        x0: zero_point_length(oscillator_mass, omega),
        g,
        lambda: g / omega,
        nbar: nbar(cfg)?,
        thermal_ratio,
        k_squared: k_squared(cfg)?,
        delta_v: delta_v(cfg)?,
        delta_v_boosted: delta_v_boosted(cfg)?,
        warnings,
    })
}

/// Shot-noise-limited atom count `(σ/ΔV)²` for a `σ`-level detection.
pub fn atoms_required(delta_v: f64, sigma_level: f64) -> Result<f64> {
    if !(delta_v > 0.0) || !(sigma_level > 0.0) || !delta_v.is_finite() || !sigma_level.is_finite() {
        return Err(domain("delta_v and sigma_level must be finite and > 0"));
    }
    Ok((sigma_level / delta_v).powi(2))
}

/// Total run time in days for `n_atoms` at `atoms_per_run` per shot and
/// `minutes_per_run` per shot.
pub fn run_time_days(n_atoms: f64, atoms_per_run: f64, minutes_per_run: f64) -> Result<f64> {
    if !(n_atoms > 0.0) || !(atoms_per_run > 0.0) || !(minutes_per_run > 0.0) {
        return Err(domain("atom counts and run duration must be > 0"));
    }
    Ok((n_atoms / atoms_per_run).ceil() * minutes_per_run / (60.0 * 24.0))
}

/// Log-spaced axis `(lo, hi, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl LogRange {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() || n == 0 {
            return Err(domain(format!("invalid log range ({lo}, {hi}, {n})")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..self.n)
            .map(|k| {
                if k + 1 == self.n {
                    self.hi
                } else {
                    (a + (b - a) * k as f64 / (self.n - 1) as f64).exp()
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub tau_s: f64,
    pub temp_k: f64,
    pub log10_delta_v: f64,
    pub log10_delta_v_boosted: f64,
}

/// Evaluates `ΔV` and `ΔV_b` over a `(τ, T)` grid; cells are row-major with
/// τ as the outer index.
pub fn sweep_grid(tau: LogRange, temp: LogRange, cfg: &PhysicalConfig) -> Result<Vec<GridCell>> {
    let taus = tau.points();
    let temps = temp.points();
    (0..taus.len() * temps.len())
        .into_par_iter()
        .map(|idx| {
            let c = PhysicalConfig {
                hold_time: taus[idx / temps.len()],
                temperature: temps[idx % temps.len()],
                ..cfg.clone()
            };
            Ok(GridCell {
                tau_s: c.hold_time,
                temp_k: c.temperature,
                log10_delta_v: delta_v(&c)?.log10(),
                log10_delta_v_boosted: delta_v_boosted(&c)?.log10(),
            })
        })
        .collect()
}
