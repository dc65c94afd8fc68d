//! Surface response functions: Drude permittivity, the electrostatic and
//! Fresnel reflection coefficients, and Bose thermal factors.
//!
//! The dissipative part of r_p is what carries which-path information into
//! the surface; everything here feeds the Markov integrand and the
//! finite-temperature closed form.

use num_complex::Complex64;
use thiserror::Error;

use crate::constants;
use crate::material::Material;

/// Which permittivity model backs the response functions.
///
/// `Ohmic` is the collision-dominated limit ε(ω) = ε_b + iσ/(ε0 ω) and the
/// default everywhere. `FullDrude` is ε_b − ω_p²/(ω² + iγ_D ω) and needs a
/// carrier density on the material to fix the plasma frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermittivityModel {
    #[default]
    Ohmic,
    FullDrude,
}

impl PermittivityModel {
    pub fn tag(&self) -> &'static str {
        match self {
            PermittivityModel::Ohmic => "ohmic",
            PermittivityModel::FullDrude => "full_drude",
        }
    }
}

#[derive(Debug, Error)]
pub enum ResponseError {
    #[error("surface response requires omega > 0, got {0:.3e} rad/s")]
    NonpositiveFrequency(f64),
    #[error("thermal occupation requires T > 0, got {0} K")]
    NonpositiveTemperature(f64),
    #[error("material '{0}' has no carrier density; the full Drude permittivity needs one")]
    MissingCarrierDensity(String),
}

/// Bose occupation n̄(ω) = 1/(e^{ħω/k_BT} − 1).
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64, ResponseError> {
    if !(omega > 0.0) {
        return Err(ResponseError::NonpositiveFrequency(omega));
    }
    if !(temperature > 0.0) {
        return Err(ResponseError::NonpositiveTemperature(temperature));
    }
    let x = constants::HBAR * omega / (constants::BOLTZMANN * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Response functions of one material surface under a fixed permittivity
/// model. Borrowed, cheap to construct per evaluation context.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceResponse<'m> {
    material: &'m Material,
    model: PermittivityModel,
}

impl<'m> SurfaceResponse<'m> {
    pub fn new(material: &'m Material, model: PermittivityModel) -> Result<Self, ResponseError> {
        if model == PermittivityModel::FullDrude && material.carrier_density.is_none() {
            return Err(ResponseError::MissingCarrierDensity(material.name.clone()));
        }
        Ok(Self { material, model })
    }

    pub fn material(&self) -> &Material {
        self.material
    }

    pub fn model(&self) -> PermittivityModel {
        self.model
    }

    /// Carrier plasma frequency squared, ω_p² = n e²/(ε0 m*).
    fn plasma_frequency_squared(&self) -> f64 {
        let n = self.material.carrier_density.expect("checked at construction");
        let m_star = self.material.effective_mass_ratio * constants::ELECTRON_MASS;
        n * constants::ELEMENTARY_CHARGE * constants::ELEMENTARY_CHARGE
            / (constants::VACUUM_PERMITTIVITY * m_star)
    }

    /// Complex permittivity ε(ω).
    pub fn permittivity(&self, omega: f64) -> Result<Complex64, ResponseError> {
        if !(omega > 0.0) {
            return Err(ResponseError::NonpositiveFrequency(omega));
        }
        match self.model {
            PermittivityModel::Ohmic => {
                let sigma = self.material.conductivity();
                Ok(Complex64::new(
                    self.material.background_permittivity,
                    sigma / (constants::VACUUM_PERMITTIVITY * omega),
                ))
            }
            PermittivityModel::FullDrude => {
                let wp2 = self.plasma_frequency_squared();
                let gamma = self.material.drude_damping;
                let denom = Complex64::new(omega * omega, gamma * omega);
                Ok(Complex64::new(self.material.background_permittivity, 0.0) - wp2 / denom)
            }
        }
    }

    /// Electrostatic (nonretarded) p-polarized reflection coefficient
    /// r_p = (ε − 1)/(ε + 1). Independent of k∥ in this limit; the argument
    /// is kept for interface symmetry with r_s.
    pub fn reflection_p(&self, _k_parallel: f64, omega: f64) -> Result<Complex64, ResponseError> {
        let eps = self.permittivity(omega)?;
        let one = Complex64::new(1.0, 0.0);
        Ok((eps - one) / (eps + one))
    }

    /// Fresnel s-polarized reflection coefficient
    /// r_s = (k_z1 − k_z2)/(k_z1 + k_z2) with k_zj = sqrt(ε_j ω²/c² − k∥²)
    /// on the decaying branch (Im k_z ≥ 0). For the aloof kinematics here
    /// k∥ ≫ ω/c, so |r_s| is tiny; it only enters the optional retardation
    /// correction.
    pub fn reflection_s(&self, k_parallel: f64, omega: f64) -> Result<Complex64, ResponseError> {
        let eps = self.permittivity(omega)?;
        let k0_sq = (omega / constants::SPEED_OF_LIGHT).powi(2);
        let kp_sq = k_parallel * k_parallel;
        let kz1 = decaying_sqrt(Complex64::new(k0_sq - kp_sq, 0.0));
        let kz2 = decaying_sqrt(eps * k0_sq - kp_sq);
        Ok((kz1 - kz2) / (kz1 + kz2))
    }

    /// Low-frequency slope of Im r_p, delegated to the material (default
    /// 2 ε0 ρ, the ohmic value).
    pub fn rp_slope(&self) -> f64 {
        self.material.rp_slope()
    }

    /// Symmetrized thermal factor 2 n̄(ω) + 1 at the material temperature.
    pub fn thermal_weight(&self, omega: f64) -> Result<f64, ResponseError> {
        Ok(2.0 * thermal_occupation(omega, self.material.temperature)? + 1.0)
    }

    /// The product [2 n̄(ω) + 1] · Im r_p(ω), which stays finite as ω → 0:
    /// the Bose divergence 2k_BT/(ħω) meets Im r_p ≈ r_p'(0)·ω and the
    /// product plateaus at 2 k_B T r_p'(0)/ħ. Below ħω/k_BT = 1e-10 the
    /// plateau is returned directly, which also keeps σ/(ε0 ω) from
    /// overflowing at extreme integration nodes.
    pub fn thermal_p_dissipation(&self, omega: f64) -> Result<f64, ResponseError> {
        if !(omega > 0.0) {
            return Err(ResponseError::NonpositiveFrequency(omega));
        }
        let t = self.material.temperature;
        let x = constants::HBAR * omega / (constants::BOLTZMANN * t);
        if x < 1e-10 {
            return Ok(2.0 * constants::BOLTZMANN * t * self.rp_slope() / constants::HBAR);
        }
        let weight = 2.0 / x.exp_m1() + 1.0;
        Ok(weight * self.reflection_p(0.0, omega)?.im)
    }
}

/// Principal square root flipped onto the branch with Im ≥ 0, the one that
/// decays away from the interface.
fn decaying_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::Material;
    use approx::assert_relative_eq;

    fn silicon() -> Material {
        Material::silicon_n_doped()
    }
    fn gold() -> Material {
        Material::gold()
    }
    /// Plain ohmic material with no carrier data, for limit checks.
    fn bare(name: &str, resistivity: f64, eps_b: f64) -> Material {
        Material {
            name: name.to_string(),
            resistivity,
            temperature: 293.0,
            background_permittivity: eps_b,
            drude_damping: 1e13,
            carrier_density: None,
            effective_mass_ratio: 1.0,
            screening_permittivity: 1.0,
            fermi_wavevector: 1e9,
            howie_cutoff: None,
            rp_slope_override: None,
        }
    }

    #[test]
    fn ohmic_imaginary_part_gold() {
        // σ/(ε0 ω) with σ = 1/(2.2e-8 Ω·m) at ω = 1e12 rad/s.
        let au = gold();
        let resp = SurfaceResponse::new(&au, PermittivityModel::Ohmic).unwrap();
        let eps = resp.permittivity(1e12).unwrap();
        assert_relative_eq!(eps.im, 5.134e6, max_relative = 1e-3);
        assert_relative_eq!(eps.re, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn ohmic_scaling_in_frequency() {
        let si = silicon();
        let resp = SurfaceResponse::new(&si, PermittivityModel::Ohmic).unwrap();
        let w = 3.7e11;
        let a = resp.permittivity(w).unwrap().im;
        let b = resp.permittivity(2.0 * w).unwrap().im;
        assert_relative_eq!(b, a / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn vanishing_conductivity_reduces_to_background() {
        // ρ huge → σ ≈ 0 → ε → ε_b.
        let insulator = bare("insulator", 1e15, 5.0);
        let resp = SurfaceResponse::new(&insulator, PermittivityModel::Ohmic).unwrap();
        let eps = resp.permittivity(1e10).unwrap();
        assert_relative_eq!(eps.re, 5.0, max_relative = 1e-12);
        assert!(eps.im.abs() < 1e-12);
        let rp = resp.reflection_p(1e6, 1e10).unwrap();
        assert_relative_eq!(rp.re, 4.0 / 6.0, max_relative = 1e-10);
    }

    #[test]
    fn perfect_conductor_limit() {
        // Gold at low frequency: |ε| → ∞, r_p → 1, Im r_p → 0.
        let au = gold();
        let resp = SurfaceResponse::new(&au, PermittivityModel::Ohmic).unwrap();
        let rp = resp.reflection_p(1e6, 1e3).unwrap();
        assert_relative_eq!(rp.re, 1.0, epsilon = 1e-9);
        assert!(rp.im.abs() < 1e-9);
        assert!(rp.im > 0.0, "dissipation must stay positive");
    }

    #[test]
    fn silicon_dissipation_sign() {
        let si = silicon();
        let resp = SurfaceResponse::new(&si, PermittivityModel::Ohmic).unwrap();
        // ω = η(k∥ = 1e6 /m, v at 1 kV, φ = 0).
        let omega = 1e6 * 1.875e7;
        assert!(resp.reflection_p(1e6, omega).unwrap().im > 0.0);
    }

    #[test]
    fn passivity_over_twelve_decades() {
        for material in [silicon(), gold()] {
            for model in [PermittivityModel::Ohmic, PermittivityModel::FullDrude] {
                let resp = SurfaceResponse::new(&material, model).unwrap();
                for i in 0..=24 {
                    let omega = 10f64.powf(4.0 + 0.5 * i as f64);
                    let eps = resp.permittivity(omega).unwrap();
                    assert!(eps.im > 0.0, "{} {:?} at {omega:e}", material.name, model);
                }
            }
        }
    }

    #[test]
    fn ohmic_rp_bounded_by_one() {
        for material in [silicon(), gold()] {
            let resp = SurfaceResponse::new(&material, PermittivityModel::Ohmic).unwrap();
            for i in 0..=24 {
                let omega = 10f64.powf(4.0 + 0.5 * i as f64);
                let rp = resp.reflection_p(1e6, omega).unwrap();
                assert!(rp.norm() <= 1.0 + 1e-12, "|r_p| = {} at {omega:e}", rp.norm());
            }
        }
    }

    #[test]
    fn full_drude_consistent_with_dc_conductivity() {
        // ε0 ω_p²/γ_D reproduces the measured σ for both bundled materials;
        // the carrier parameters were chosen that way.
        for material in [silicon(), gold()] {
            let resp = SurfaceResponse::new(&material, PermittivityModel::FullDrude).unwrap();
            let sigma_drude = constants::VACUUM_PERMITTIVITY * resp.plasma_frequency_squared()
                / material.drude_damping;
            assert_relative_eq!(
                sigma_drude,
                material.conductivity(),
                max_relative = 0.05
            );
        }
    }

    #[test]
    fn full_drude_needs_carrier_density() {
        let plain = bare("plain", 1.0, 2.0);
        assert!(matches!(
            SurfaceResponse::new(&plain, PermittivityModel::FullDrude),
            Err(ResponseError::MissingCarrierDensity(_))
        ));
    }

    #[test]
    fn occupation_identities() {
        let t = 293.0;
        let kbt_over_hbar = constants::BOLTZMANN * t / constants::HBAR;
        // ħω = k_BT ln2 → n̄ = 1.
        let omega = kbt_over_hbar * std::f64::consts::LN_2;
        assert_relative_eq!(thermal_occupation(omega, t).unwrap(), 1.0, max_relative = 1e-12);
        // ħω ≫ k_BT → 2n̄+1 → 1.
        let high = kbt_over_hbar * 80.0;
        assert_relative_eq!(
            2.0 * thermal_occupation(high, t).unwrap() + 1.0,
            1.0,
            epsilon = 1e-12
        );
        // ħω ≪ k_BT → 2n̄+1 ≈ 2k_BT/(ħω) + higher orders; the next term in
        // the Laurent series cancels, so the correction is O(x).
        let low = kbt_over_hbar * 1e-6;
        let exact = 2.0 * thermal_occupation(low, t).unwrap() + 1.0;
        assert_relative_eq!(exact, 2.0 / 1e-6, max_relative = 1e-7);
    }

    #[test]
    fn occupation_domain_errors() {
        assert!(thermal_occupation(0.0, 293.0).is_err());
        assert!(thermal_occupation(-1.0, 293.0).is_err());
        assert!(thermal_occupation(1e10, 0.0).is_err());
        assert!(thermal_occupation(f64::NAN, 293.0).is_err());
    }

    #[test]
    fn dissipation_plateau_value_and_continuity() {
        let si = silicon();
        let resp = SurfaceResponse::new(&si, PermittivityModel::Ohmic).unwrap();
        // Plateau 4 ε0 ρ k_B T / ħ for silicon at 293 K.
        let plateau = resp.thermal_p_dissipation(1e-3).unwrap();
        assert_relative_eq!(plateau, 20.38, max_relative = 1e-3);
        // Continuity across the series switch at ħω/k_BT = 1e-10.
        let kbt_over_hbar = constants::BOLTZMANN * si.temperature / constants::HBAR;
        let below = resp.thermal_p_dissipation(kbt_over_hbar * 0.99e-10).unwrap();
        let above = resp.thermal_p_dissipation(kbt_over_hbar * 1.01e-10).unwrap();
        assert_relative_eq!(below, above, max_relative = 1e-8);
    }

    #[test]
    fn dissipation_decays_at_high_frequency() {
        let si = silicon();
        let resp = SurfaceResponse::new(&si, PermittivityModel::Ohmic).unwrap();
        let low = resp.thermal_p_dissipation(1e8).unwrap();
        let high = resp.thermal_p_dissipation(1e16).unwrap();
        assert!(high < low);
        assert!(high > 0.0);
    }

    #[test]
    fn fresnel_rs_is_small_for_aloof_kinematics() {
        let si = silicon();
        let resp = SurfaceResponse::new(&si, PermittivityModel::Ohmic).unwrap();
        // k∥ ≫ ω/c: evanescent on both sides, tiny |r_s|.
        let omega = 1e13;
        let k = 1e6;
        let rs = resp.reflection_s(k, omega).unwrap();
        assert!(rs.norm() < 1e-2, "|r_s| = {}", rs.norm());
    }
}
