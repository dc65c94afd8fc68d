//! Surface materials and their model parameters.
//!
//! A material bundles the ohmic response (resistivity, background
//! permittivity, Drude damping) with the carrier-level parameters needed by
//! the Machnikowski and Howie expressions. Resistivity is stored and the
//! conductivity is always derived from it, so σ·ρ = 1 holds exactly.

use thiserror::Error;

use crate::config::{self, ConfigError};
use crate::constants::{ELEMENTARY_CHARGE, HBAR, VACUUM_PERMITTIVITY};

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("material `{name}`: {problem}")]
    Invalid { name: String, problem: String },
    #[error("no bundled material named `{0}`")]
    UnknownBundled(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    /// Resistivity ρ [Ω m].
    pub resistivity: f64,
    /// Temperature [K].
    pub temperature: f64,
    /// Background (bound-charge) relative permittivity ε_b.
    pub background_permittivity: f64,
    /// Drude collision rate γ_D [1/s].
    pub drude_damping: f64,
    /// Free carrier density [1/m³]; required for the full Drude form.
    pub carrier_density: Option<f64>,
    /// Carrier effective mass ratio m*/m_e.
    pub effective_mass_ratio: f64,
    /// Screening relative permittivity ε_i entering the carrier coupling.
    pub screening_permittivity: f64,
    /// Fermi wavevector k_F [1/m].
    pub fermi_wavevector: f64,
    /// Override for the dielectric response cutoff ω_m [rad/s].
    pub howie_cutoff: Option<f64>,
    /// Override for the zero-frequency slope of Im r_p [s].
    pub rp_slope_override: Option<f64>,
}

impl Material {
    /// n-doped silicon, ρ = 1.5 Ω·cm. Carrier density, damping and k_F are
    /// representative values for phosphorus doping at that resistivity
    /// (n ≈ 3e15 cm⁻³, mobility ≈ 1400 cm²/Vs).
    pub fn silicon_n_doped() -> Self {
        Self {
            name: "silicon-n-doped".to_string(),
            resistivity: 1.5e-2,
            temperature: 293.0,
            background_permittivity: 11.7,
            drude_damping: 4.83e12,
            carrier_density: Some(2.97e21),
            effective_mass_ratio: 0.26,
            screening_permittivity: 11.7,
            fermi_wavevector: 4.45e7,
            howie_cutoff: None,
            rp_slope_override: None,
        }
    }

    /// Gold, ρ = 2.2 µΩ·cm, free-electron values (n = 5.9e28 m⁻³).
    pub fn gold() -> Self {
        Self {
            name: "gold".to_string(),
            resistivity: 2.2e-8,
            temperature: 293.0,
            background_permittivity: 1.0,
            drude_damping: 3.66e13,
            carrier_density: Some(5.9e28),
            effective_mass_ratio: 1.0,
            screening_permittivity: 1.0,
            fermi_wavevector: 1.21e10,
            howie_cutoff: None,
            rp_slope_override: None,
        }
    }

    pub fn bundled(name: &str) -> Result<Self, MaterialError> {
        match name {
            "silicon-n-doped" => Ok(Self::silicon_n_doped()),
            "gold" => Ok(Self::gold()),
            other => Err(MaterialError::UnknownBundled(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let fail = |problem: &str| {
            Err(MaterialError::Invalid {
                name: self.name.clone(),
                problem: problem.to_string(),
            })
        };
        if !(self.resistivity > 0.0 && self.resistivity.is_finite()) {
            return fail("resistivity must be positive and finite");
        }
        if !(self.temperature > 0.0) {
            return fail("temperature must be positive");
        }
        if !(self.background_permittivity >= 1.0) {
            return fail("background permittivity must be >= 1");
        }
        if !(self.drude_damping > 0.0) {
            return fail("Drude damping must be positive");
        }
        if let Some(n) = self.carrier_density {
            if !(n > 0.0) {
                return fail("carrier density must be positive");
            }
        }
        if !(self.effective_mass_ratio > 0.0) {
            return fail("effective mass ratio must be positive");
        }
        if !(self.screening_permittivity >= 1.0) {
            return fail("screening permittivity must be >= 1");
        }
        if !(self.fermi_wavevector > 0.0) {
            return fail("Fermi wavevector must be positive");
        }
        Ok(())
    }

    /// Conductivity σ = 1/ρ [S/m], always derived.
    pub fn conductivity(&self) -> f64 {
        1.0 / self.resistivity
    }

    /// Zero-frequency slope of Im r_p for the ohmic response [s].
    ///
    /// For ε = ε_b + iσ/(ε0 ω) the conductor-limit reflection gives
    /// Im r_p → 2 ε0 ρ ω, so the slope is 2 ε0 ρ unless overridden.
    pub fn rp_slope(&self) -> f64 {
        self.rp_slope_override
            .unwrap_or(2.0 * VACUUM_PERMITTIVITY * self.resistivity)
    }

    /// Cutoff frequency ω_m of the lossy dielectric response [rad/s].
    ///
    /// Defaults to the dielectric relaxation frequency σ/(ε0 ε_b), capped at
    /// the Drude collision rate: above γ_D the carrier response is inertial
    /// rather than ohmic, and the uncapped relaxation frequency of a good
    /// metal would sit many orders of magnitude beyond it.
    pub fn howie_cutoff(&self) -> f64 {
        self.howie_cutoff.unwrap_or_else(|| {
            let relaxation =
                self.conductivity() / (VACUUM_PERMITTIVITY * self.background_permittivity);
            relaxation.min(self.drude_damping)
        })
    }

    /// Dimensionless carrier coupling ζ = m* e² / (2π ε0 ε_i ħ² k_F).
    pub fn carrier_coupling(&self) -> f64 {
        let m_eff = self.effective_mass_ratio * crate::constants::ELECTRON_MASS;
        m_eff * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE
            / (2.0
                * std::f64::consts::PI
                * VACUUM_PERMITTIVITY
                * self.screening_permittivity
                * HBAR
                * HBAR
                * self.fermi_wavevector)
    }

    /// Load every `[material.<name>]` section from a TOML file.
    pub fn load_all(path: &std::path::Path) -> Result<Vec<Material>, MaterialError> {
        let root = config::load_toml(path)?;
        let section = match root.get("material") {
            Some(toml::Value::Table(t)) => t,
            Some(_) => {
                return Err(ConfigError::Invalid(format!(
                    "{}: `material` must be a table of named sections",
                    path.display()
                ))
                .into())
            }
            None => {
                return Err(ConfigError::Invalid(format!(
                    "{}: no [material.<name>] sections found",
                    path.display()
                ))
                .into())
            }
        };
        let mut out = Vec::new();
        for (name, value) in section {
            let table = match value {
                toml::Value::Table(t) => t,
                _ => {
                    return Err(ConfigError::Invalid(format!(
                        "material.{name} must be a table"
                    ))
                    .into())
                }
            };
            out.push(Material::from_table(name, table)?);
        }
        Ok(out)
    }

    /// Load one named material from a TOML file.
    pub fn load_named(path: &std::path::Path, name: &str) -> Result<Material, MaterialError> {
        let all = Self::load_all(path)?;
        all.into_iter().find(|m| m.name == name).ok_or_else(|| {
            MaterialError::Invalid {
                name: name.to_string(),
                problem: format!("not found in {}", path.display()),
            }
        })
    }

    fn from_table(name: &str, table: &toml::Table) -> Result<Material, MaterialError> {
        let ctx = format!("material.{name}");
        let material = Material {
            name: name.to_string(),
            resistivity: config::get_quantity(table, &ctx, "resistivity", config::parse_resistivity)?,
            temperature: config::get_f64_opt(table, &ctx, "temperature")?.unwrap_or(293.0),
            background_permittivity: config::get_f64(table, &ctx, "background_permittivity")?,
            drude_damping: config::get_f64(table, &ctx, "drude_damping")?,
            carrier_density: config::get_f64_opt(table, &ctx, "carrier_density")?,
            effective_mass_ratio: config::get_f64(table, &ctx, "effective_mass_ratio")?,
            screening_permittivity: config::get_f64(table, &ctx, "screening_permittivity")?,
            fermi_wavevector: config::get_f64(table, &ctx, "fermi_wavevector")?,
            howie_cutoff: config::get_f64_opt(table, &ctx, "howie_cutoff")?,
            rp_slope_override: config::get_f64_opt(table, &ctx, "rp_slope")?,
        };
        material.validate()?;
        Ok(material)
    }
}
