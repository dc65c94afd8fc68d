//! Aloof-scattering decoherence with an exponential-integral profile.

use crate::constants::{ELEMENTARY_CHARGE, HBAR};
use crate::special::exp_integral_e1;

use super::{DecoherenceInput, DecoherenceModel, GammaValue, ModelError, ModelSettings};

/// Geometry constant of the theory.
const ALPHA: f64 = 2.0;

/// P = [e² L ω_m² / (4π² ħ σ v²)] · E1(2αz/Δx) with α = 2 and V = e^{−P}.
///
/// ω_m is the cutoff of the lossy dielectric response; the material's
/// default is its dielectric relaxation frequency capped at the Drude
/// collision rate.
pub struct Howie;

impl DecoherenceModel for Howie {
    fn tag(&self) -> &'static str {
        "howie"
    }

    fn describe(&self) -> &'static str {
        "long-wavelength aloof scattering, P ∝ (ω_m²/σ) E1(4z/Δx)"
    }

    fn gamma(
        &self,
        input: &DecoherenceInput,
        z: f64,
        _settings: &ModelSettings,
    ) -> Result<GammaValue, ModelError> {
        let z_eff = input.effective_height(z)?;
        let dx = input.geometry.separation;
        if dx == 0.0 {
            // E1 argument diverges; the profile dies faster than any
            // polynomial, so the limit is exactly zero.
            return Ok(GammaValue::exact(0.0));
        }
        let m = &input.material;
        let omega_m = m.howie_cutoff();
        let v = input.beam.velocity();
        let prefactor = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE
            * input.geometry.plate_length
            * omega_m
            * omega_m
            / (4.0
                * std::f64::consts::PI
                * std::f64::consts::PI
                * HBAR
                * m.conductivity()
                * v
                * v);
        let argument = 2.0 * ALPHA * z_eff / dx;
        let e1 = exp_integral_e1(argument).map_err(|_| ModelError::MissingParameter {
            model: "howie",
            what: format!("a positive E1 argument, got 2αz/Δx = {argument:e}"),
        })?;
        Ok(GammaValue::exact(prefactor * e1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::BeamParams;
    use crate::geometry::InteractionGeometry;
    use crate::material::Material;

    fn input(material: Material, dx: f64) -> DecoherenceInput {
        let beam = BeamParams::new(1000.0, 0.377).unwrap();
        let geometry =
            InteractionGeometry::with_linear_grid(0.01, dx, 0.0, 1e-6, 80e-6, 4).unwrap();
        DecoherenceInput::new(material, beam, geometry).unwrap()
    }

    fn gamma(material: Material, dx: f64, z: f64) -> f64 {
        Howie
            .gamma(&input(material, dx), z, &ModelSettings::default())
            .unwrap()
            .gamma
    }

    #[test]
    fn zero_separation_is_zero() {
        assert_eq!(gamma(Material::silicon_n_doped(), 0.0, 5e-6), 0.0);
    }

    #[test]
    fn decays_with_height() {
        let m = Material::silicon_n_doped;
        let near = gamma(m(), 9.3e-6, 2e-6);
        let far = gamma(m(), 9.3e-6, 60e-6);
        assert!(near > far);
        assert!(far < 1e-8, "far tail should be negligible, got {far}");
    }

    #[test]
    fn widening_separation_strengthens_decoherence() {
        for z in [2e-6, 10e-6, 30e-6] {
            let narrow = gamma(Material::silicon_n_doped(), 4.7e-6, z);
            let wide = gamma(Material::silicon_n_doped(), 9.4e-6, z);
            assert!(wide >= narrow, "z = {z}");
        }
    }

    #[test]
    fn shape_is_pure_e1_ratio() {
        let dx = 9.4e-6;
        let (z1, z2) = (3e-6, 12e-6);
        let lhs = gamma(Material::silicon_n_doped(), dx, z1)
            / gamma(Material::silicon_n_doped(), dx, z2);
        let rhs = exp_integral_e1(4.0 * z1 / dx).unwrap() / exp_integral_e1(4.0 * z2 / dx).unwrap();
        assert!(((lhs - rhs) / rhs).abs() < 1e-10, "lhs {lhs}, rhs {rhs}");
    }

    #[test]
    fn prefactor_anchors() {
        // e² L ω_m²/(4π² ħ σ v²) with the bundled defaults: ≈ 1.089 for
        // silicon (ω_m = σ/(ε0 ε_b) ≈ 6.44e11) and ≈ 5.17e-3 for gold
        // (ω_m capped at γ_D = 3.66e13), evaluated independently.
        let si = gamma(Material::silicon_n_doped(), 9.4e-6, 5e-6)
            / exp_integral_e1(20e-6 / 9.4e-6).unwrap();
        assert!((si - 1.089).abs() / 1.089 < 5e-3, "K_si = {si}");
        let au = gamma(Material::gold(), 9.4e-6, 5e-6)
            / exp_integral_e1(20e-6 / 9.4e-6).unwrap();
        assert!((au - 5.17e-3).abs() / 5.17e-3 < 5e-3, "K_au = {au}");
        assert!(si > au, "material ordering");
    }
}
