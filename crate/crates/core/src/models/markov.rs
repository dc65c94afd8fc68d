//! Markovian surface-noise decoherence exponent, the full 2D integral over
//! surface-mode wavevectors.
//!
//! Γ = t (q²/ε0ħ) ∫ k dk dφ/(2π)² [1 − cos(kΔx sinφ)] [2n̄(η) + 1]
//!     e^{−2kzγ(φ)}/(2kγ(φ)) · Im{r_p − (v²/c²)[r_p cos²φ − r_s sin²φ]}
//!
//! with η = k v |cosφ| and γ(φ) = sqrt(1 − β²cos²φ). The φ integrand has
//! the symmetries φ → −φ and φ → π − φ, so the quarter domain [0, π/2]
//! carries a factor 4; one power of k cancels against the 1/(2kγ) kernel.

use std::f64::consts::PI;

use crate::constants::{BOLTZMANN, ELEMENTARY_CHARGE, HBAR, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::quad::{integrate_adaptive_2d, Bound, Domain2d};
use crate::response::SurfaceResponse;

use super::{DecoherenceInput, DecoherenceModel, GammaValue, ModelError, ModelSettings, Retardation};

/// The envelope e^{−2kzγ} is cut where it reaches e^{−36.84} ≈ 1e-16 of its
/// peak; the truncated tail is far below any supported tolerance.
const ENVELOPE_LOG_CUTOFF: f64 = 36.84;

/// Below ħη/k_BT = 1e-10 the r_s correction is dropped instead of evaluated;
/// matches the plateau switch inside the p-response and avoids ω → 0 in the
/// Fresnel coefficient. The neglected slice of φ is ~1e-10 of the domain.
const RS_THERMAL_FLOOR: f64 = 1e-10;

pub struct Markov;

impl DecoherenceModel for Markov {
    fn tag(&self) -> &'static str {
        "markov"
    }

    fn describe(&self) -> &'static str {
        "Markovian surface-noise master equation, 2D integral over mode wavevectors"
    }

    fn gamma(
        &self,
        input: &DecoherenceInput,
        z: f64,
        settings: &ModelSettings,
    ) -> Result<GammaValue, ModelError> {
        let z_eff = input.effective_height(z)?;
        let dx = input.geometry.separation;
        let v = input.beam.velocity();
        let beta_sq = (v / SPEED_OF_LIGHT).powi(2);
        let temperature = input.material.temperature;
        let response = SurfaceResponse::new(&input.material, settings.permittivity)?;

        let (kinematic_gamma, beta_terms, rs_term) = match settings.retardation {
            Retardation::Off => (false, false, false),
            Retardation::VelocityOrder => (true, true, false),
            Retardation::Full => (true, true, true),
        };

        let gamma_min = if kinematic_gamma {
            (1.0 - beta_sq).sqrt()
        } else {
            1.0
        };
        let k_max = ENVELOPE_LOG_CUTOFF / (2.0 * z_eff * gamma_min);

        let integrand = |k: f64, phi: f64| -> f64 {
            let (sin_phi, cos_phi) = phi.sin_cos();
            let osc = 1.0 - (k * dx * sin_phi).cos();
            if osc == 0.0 {
                return 0.0;
            }
            let gamma_phi = if kinematic_gamma {
                (1.0 - beta_sq * cos_phi * cos_phi).sqrt()
            } else {
                1.0
            };
            let envelope = (-2.0 * k * z_eff * gamma_phi).exp();
            if envelope == 0.0 {
                return 0.0;
            }
            let eta = k * v * cos_phi;
            let diss = match response.thermal_p_dissipation(eta) {
                Ok(d) => d,
                Err(_) => return f64::NAN,
            };
            let mut weight = if beta_terms {
                diss * (1.0 - beta_sq * cos_phi * cos_phi)
            } else {
                diss
            };
            if rs_term && HBAR * eta / (BOLTZMANN * temperature) >= RS_THERMAL_FLOOR {
                match (response.thermal_weight(eta), response.reflection_s(k, eta)) {
                    (Ok(tw), Ok(rs)) => {
                        weight += tw * beta_sq * rs.im * sin_phi * sin_phi;
                    }
                    _ => return f64::NAN,
                }
            }
            osc * envelope / (2.0 * gamma_phi) * weight
        };

        let domain = Domain2d {
            outer: (Bound::Finite(0.0), Bound::Finite(k_max)),
            inner: (Bound::Finite(0.0), Bound::Finite(PI / 2.0)),
            inner_initial_subdivisions: settings.phi_subdivisions,
        };
        let result = integrate_adaptive_2d(integrand, &domain, &settings.quadrature)?;

        // 4 quarter-domains over the (2π)² normalization.
        let prefactor = input.interaction_time() * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE
            / (VACUUM_PERMITTIVITY * HBAR * PI * PI);
        Ok(GammaValue {
            gamma: prefactor * result.value,
            quadrature_error: Some(prefactor * result.error_estimate),
        })
    }
}
