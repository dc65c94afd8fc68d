//! High-temperature Drude closed form of the decoherence functional.

use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE, HBAR, VACUUM_PERMITTIVITY};

use super::{DecoherenceInput, DecoherenceModel, GammaValue, ModelError, ModelSettings};

/// Γ_th = t q² k_B T r_p'(0) / (2π ε0 ħ²) · [1/(2z) − 1/sqrt((2z)² + L²)].
///
/// The high-temperature expansion drops the Δx dependence entirely; its
/// amplitude is set by the static slope r_p'(0) of Im r_p (default 2 ε0 ρ,
/// overridable on the material). Γ is defined as 0 at Δx = 0 so that the
/// zero-separation limit of the family of models is uniform; the expansion
/// itself is only meaningful for well-separated paths.
pub struct FiniteTemperature;

impl DecoherenceModel for FiniteTemperature {
    fn tag(&self) -> &'static str {
        "finite_temperature"
    }

    fn describe(&self) -> &'static str {
        "high-temperature Drude closed form, Γ ∝ ρ T [1/(2z) − 1/sqrt(4z²+L²)]"
    }

    fn gamma(
        &self,
        input: &DecoherenceInput,
        z: f64,
        _settings: &ModelSettings,
    ) -> Result<GammaValue, ModelError> {
        let z_eff = input.effective_height(z)?;
        if input.geometry.separation == 0.0 {
            return Ok(GammaValue::exact(0.0));
        }
        let m = &input.material;
        let length = input.geometry.plate_length;
        let prefactor = input.interaction_time()
            * ELEMENTARY_CHARGE
            * ELEMENTARY_CHARGE
            * BOLTZMANN
            * m.temperature
            * m.rp_slope()
            / (2.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * HBAR * HBAR);
        let two_z = 2.0 * z_eff;
        let bracket = 1.0 / two_z - 1.0 / (two_z * two_z + length * length).sqrt();
        Ok(GammaValue::exact(prefactor * bracket))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::BeamParams;
    use crate::geometry::InteractionGeometry;
    use crate::material::Material;

    fn input(material: Material, dx: f64, plate: f64) -> DecoherenceInput {
        let beam = BeamParams::new(1000.0, 0.377).unwrap();
        let geometry =
            InteractionGeometry::with_linear_grid(plate, dx, 0.0, 1e-6, 40e-6, 4).unwrap();
        DecoherenceInput::new(material, beam, geometry).unwrap()
    }

    fn gamma_si(z: f64) -> f64 {
        FiniteTemperature
            .gamma(
                &input(Material::silicon_n_doped(), 9.4e-6, 0.01),
                z,
                &ModelSettings::default(),
            )
            .unwrap()
            .gamma
    }

    #[test]
    fn zero_separation_is_zero() {
        let inp = input(Material::silicon_n_doped(), 0.0, 0.01);
        let g = FiniteTemperature
            .gamma(&inp, 10e-6, &ModelSettings::default())
            .unwrap();
        assert_eq!(g.gamma, 0.0);
    }

    #[test]
    fn short_plate_limit_vanishes() {
        // L → 0: the bracket 1/(2z) − 1/sqrt(4z² + L²) collapses, and the
        // prefactor carries another factor L through t = L/v.
        let z = 10e-6;
        let g_long = FiniteTemperature
            .gamma(
                &input(Material::silicon_n_doped(), 9.4e-6, 1e-2),
                z,
                &ModelSettings::default(),
            )
            .unwrap()
            .gamma;
        let g_short = FiniteTemperature
            .gamma(
                &input(Material::silicon_n_doped(), 9.4e-6, 1e-7),
                z,
                &ModelSettings::default(),
            )
            .unwrap()
            .gamma;
        assert!(g_short < g_long * 1e-9, "short {g_short}, long {g_long}");
    }

    #[test]
    fn near_field_gamma_times_z_constant() {
        // z ≪ L: bracket ≈ 1/(2z), so Γ·z is flat to 0.1% on [0.5, 2] µm.
        let reference = gamma_si(0.5e-6) * 0.5e-6;
        for i in 0..=10 {
            let z = 0.5e-6 + i as f64 * 0.15e-6;
            let product = gamma_si(z) * z;
            assert!(
                ((product - reference) / reference).abs() < 1e-3,
                "z = {z}: {product} vs {reference}"
            );
        }
    }

    #[test]
    fn material_ratio_is_resistivity_ratio() {
        let z = 10e-6;
        let si = gamma_si(z);
        let au = FiniteTemperature
            .gamma(
                &input(Material::gold(), 9.4e-6, 0.01),
                z,
                &ModelSettings::default(),
            )
            .unwrap()
            .gamma;
        let expected = 1.5e-2 / 2.2e-8;
        assert!(
            ((si / au - expected) / expected).abs() < 1e-12,
            "ratio {}",
            si / au
        );
    }

    #[test]
    fn amplitude_anchor() {
        // Prefactor t q² k_B T r_p'(0)/(2π ε0 ħ²) for silicon at 1 kV with
        // L = 1 cm, evaluated independently: ≈ 2.376e-2 m.
        let z: f64 = 1e-6;
        let bracket = 1.0 / (2.0 * z) - 1.0 / ((2.0 * z) * (2.0 * z) + 1e-4).sqrt();
        let expected = 2.376e-2 * bracket;
        let got = gamma_si(z);
        assert!(
            ((got - expected) / expected).abs() < 1e-3,
            "got {got}, expected {expected}"
        );
    }
}
