//! Machnikowski's metallic-screening decoherence rate.
//!
//! The rate factorizes into a geometric function γ of the aspect ratio
//! Δx/z and a material function μ of the carrier coupling ζ; both are
//! one-dimensional integrals evaluated adaptively here.

use crate::constants::{BOLTZMANN, HBAR};
use crate::quad::{integrate_adaptive_1d, Bound, QuadratureConfig, QuadratureError};

use super::{DecoherenceInput, DecoherenceModel, GammaValue, ModelError, ModelSettings};

/// Geometric function γ(ξ) = ½ ∫_{−∞}^{∞} ln(1 + (ξ²/4) u²/(1+u²)) / (1+u²) du.
///
/// Even in ξ and in u; evaluated as a single half-line integral. γ(0) = 0
/// and γ(ξ) ≈ πξ²/16 for small ξ.
pub fn machnikowski_geometric(xi: f64, cfg: &QuadratureConfig) -> Result<f64, QuadratureError> {
    let quarter_xi_sq = xi * xi / 4.0;
    if quarter_xi_sq == 0.0 {
        return Ok(0.0);
    }
    let result = integrate_adaptive_1d(
        |u| {
            let u_sq = u * u;
            let lorentz = 1.0 + u_sq;
            (quarter_xi_sq * u_sq / lorentz).ln_1p() / lorentz
        },
        (Bound::Finite(0.0), Bound::Infinity),
        cfg,
    )?;
    Ok(result.value)
}

/// Material function μ(ζ) = (ζ²/4) ∫₀¹ u⁻³ B(u)⁻² du with
/// B(u) = 1 + (ζ/4πu²)(1 + ((1−u²)/2u) ln((1+u)/(1−u))).
///
/// B diverges like ζ/(2πu²) as u → 0, so the integrand rises linearly from
/// zero there; at u → 1 the logarithm blows up but its (1−u²) coefficient
/// wins and B(1) = 1 + ζ/4π. Both endpoints are only approached, never
/// evaluated, by the open quadrature rule.
pub fn machnikowski_material(zeta: f64, cfg: &QuadratureConfig) -> Result<f64, ModelError> {
    if !(zeta > 0.0) {
        return Err(ModelError::MissingParameter {
            model: "machnikowski",
            what: format!("a positive carrier coupling, got ζ = {zeta}"),
        });
    }
    let result = integrate_adaptive_1d(
        |u| {
            let u_sq = u * u;
            // (1−u²)/(2u)·ln((1+u)/(1−u)) written through atanh for
            // accuracy at small u.
            let screening = 1.0 + (1.0 - u_sq) / u * u.atanh();
            let b = 1.0 + zeta / (4.0 * std::f64::consts::PI * u_sq) * screening;
            1.0 / (u_sq * u * b * b)
        },
        (Bound::Finite(0.0), Bound::Finite(1.0)),
        cfg,
    )?;
    Ok(zeta * zeta / 4.0 * result.value)
}

/// Γ = L/λ with 1/λ = [k_B T/(2π² ħ v)] γ(Δx/z) μ(ζ) and
/// ζ = m* e²/(2π ε0 ε_i ħ² k_F) from the material table.
pub struct Machnikowski;

impl DecoherenceModel for Machnikowski {
    fn tag(&self) -> &'static str {
        "machnikowski"
    }

    fn describe(&self) -> &'static str {
        "screened-carrier scattering rate, Γ = L [k_BT/(2π²ħv)] γ(Δx/z) μ(ζ)"
    }

    fn gamma(
        &self,
        input: &DecoherenceInput,
        z: f64,
        settings: &ModelSettings,
    ) -> Result<GammaValue, ModelError> {
        let z_eff = input.effective_height(z)?;
        let dx = input.geometry.separation;
        if dx == 0.0 {
            return Ok(GammaValue::exact(0.0));
        }
        let geometric = machnikowski_geometric(dx / z_eff, &settings.quadrature)?;
        let material = machnikowski_material(
            input.material.carrier_coupling(),
            &settings.quadrature,
        )?;
        let prefactor = input.geometry.plate_length * BOLTZMANN * input.material.temperature
            / (2.0
                * std::f64::consts::PI
                * std::f64::consts::PI
                * HBAR
                * input.beam.velocity());
        Ok(GammaValue::exact(prefactor * geometric * material))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::BeamParams;
    use crate::geometry::InteractionGeometry;
    use crate::material::Material;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig {
            relative_tolerance: 1e-10,
            absolute_tolerance: 1e-300,
            max_subdivisions: 5000,
        }
    }

    #[test]
    fn geometric_at_zero_and_parity() {
        assert_eq!(machnikowski_geometric(0.0, &cfg()).unwrap(), 0.0);
        for xi in [0.3, 1.7, 6.0] {
            let plus = machnikowski_geometric(xi, &cfg()).unwrap();
            let minus = machnikowski_geometric(-xi, &cfg()).unwrap();
            assert!(((plus - minus) / plus).abs() < 1e-12);
        }
    }

    #[test]
    fn geometric_small_argument_expansion() {
        // γ(ξ) → πξ²/16.
        for xi in [1e-4, 1e-3] {
            let got = machnikowski_geometric(xi, &cfg()).unwrap();
            let expected = std::f64::consts::PI * xi * xi / 16.0;
            assert!(
                ((got - expected) / expected).abs() < 1e-5,
                "xi = {xi}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn geometric_is_monotone_in_magnitude() {
        let mut prev = 0.0;
        for i in 1..=12 {
            let xi = i as f64 * 0.5;
            let value = machnikowski_geometric(xi, &cfg()).unwrap();
            assert!(value > prev, "γ({xi}) = {value} <= {prev}");
            prev = value;
        }
    }

    #[test]
    fn material_limits_and_monotonicity() {
        // ζ → 0 kills the rate through the ζ²/4 prefactor.
        let tiny = machnikowski_material(1e-4, &cfg()).unwrap();
        assert!(tiny < 1e-4, "μ(1e-4) = {tiny}");
        let mut prev = 0.0;
        for zeta in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let value = machnikowski_material(zeta, &cfg()).unwrap();
            assert!(value > prev, "μ({zeta}) = {value} <= {prev}");
            prev = value;
        }
        assert!(machnikowski_material(0.0, &cfg()).is_err());
        assert!(machnikowski_material(-1.0, &cfg()).is_err());
    }

    fn input(material: Material, dx: f64) -> DecoherenceInput {
        let beam = BeamParams::new(1000.0, 0.377).unwrap();
        let geometry =
            InteractionGeometry::with_linear_grid(0.01, dx, 0.0, 1e-6, 80e-6, 4).unwrap();
        DecoherenceInput::new(material, beam, geometry).unwrap()
    }

    fn gamma(dx: f64, z: f64) -> f64 {
        Machnikowski
            .gamma(&input(Material::silicon_n_doped(), dx), z, &ModelSettings::default())
            .unwrap()
            .gamma
    }

    #[test]
    fn zero_separation_is_zero() {
        assert_eq!(gamma(0.0, 10e-6), 0.0);
    }

    #[test]
    fn scale_invariance_in_dx_over_z() {
        let base = gamma(9.4e-6, 12e-6);
        for k in [0.5, 2.0, 5.0] {
            let scaled = gamma(k * 9.4e-6, k * 12e-6);
            assert!(
                ((scaled - base) / base).abs() < 1e-9,
                "k = {k}: {scaled} vs {base}"
            );
        }
    }

    #[test]
    fn linear_in_temperature() {
        let mut cold_mat = Material::silicon_n_doped();
        cold_mat.temperature = 146.5;
        let z = 10e-6;
        let warm = gamma(9.4e-6, z);
        let cold = Machnikowski
            .gamma(&input(cold_mat, 9.4e-6), z, &ModelSettings::default())
            .unwrap()
            .gamma;
        assert!(((warm / cold - 2.0).abs()) < 1e-9, "ratio {}", warm / cold);
    }

    #[test]
    fn bundled_couplings_are_in_range() {
        let si = Material::silicon_n_doped().carrier_coupling();
        let au = Material::gold().carrier_coupling();
        assert!(si > 10.0 && si < 30.0, "ζ_si = {si}");
        assert!(au > 1.0 && au < 6.0, "ζ_au = {au}");
    }
}
