//! Electron beam kinematics.
//!
//! Velocities are treated nonrelativistically: at the 1 kV working point
//! v/c ≈ 0.063 and the relativistic correction to v is ~1e-3, below every
//! tolerance used downstream. This is deliberate and documented rather than
//! hidden behind a partial correction.

use thiserror::Error;

use crate::constants::{ELECTRON_MASS, ELEMENTARY_CHARGE, PLANCK};

#[derive(Debug, Error, PartialEq)]
pub enum BeamError {
    #[error("acceleration voltage must be positive, got {0} V")]
    NonpositiveVoltage(f64),
    #[error("energy spread must be positive, got {0} eV")]
    NonpositiveEnergySpread(f64),
}

/// Electron speed after electrostatic acceleration through `voltage` [V].
///
/// v = sqrt(2 e U / m_e); at 1000 V this is ≈ 1.876e7 m/s.
pub fn beam_velocity(voltage: f64) -> Result<f64, BeamError> {
    if !(voltage > 0.0) {
        return Err(BeamError::NonpositiveVoltage(voltage));
    }
    Ok((2.0 * ELEMENTARY_CHARGE * voltage / ELECTRON_MASS).sqrt())
}

/// De Broglie wavelength λ = h / sqrt(2 m_e e U) [m].
pub fn de_broglie_wavelength(voltage: f64) -> Result<f64, BeamError> {
    if !(voltage > 0.0) {
        return Err(BeamError::NonpositiveVoltage(voltage));
    }
    Ok(PLANCK / (2.0 * ELECTRON_MASS * ELEMENTARY_CHARGE * voltage).sqrt())
}

/// Longitudinal coherence length l_c = 2 U λ / (π ΔE) [m].
///
/// `energy_spread` is the FWHM energy spread in eV; U and ΔE enter as a
/// ratio so both may be carried in volts/electronvolts.
pub fn coherence_length(voltage: f64, energy_spread: f64) -> Result<f64, BeamError> {
    if !(energy_spread > 0.0) {
        return Err(BeamError::NonpositiveEnergySpread(energy_spread));
    }
    let lambda = de_broglie_wavelength(voltage)?;
    Ok(2.0 * voltage * lambda / (std::f64::consts::PI * energy_spread))
}

/// Validated beam parameters shared by the decoherence models and the
/// measurement pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    voltage: f64,
    energy_spread: f64,
}

impl BeamParams {
    pub fn new(voltage: f64, energy_spread: f64) -> Result<Self, BeamError> {
        beam_velocity(voltage)?;
        if !(energy_spread > 0.0) {
            return Err(BeamError::NonpositiveEnergySpread(energy_spread));
        }
        Ok(Self { voltage, energy_spread })
    }

    /// Acceleration voltage [V].
    pub fn voltage(&self) -> f64 {
        self.voltage
    }

    /// FWHM energy spread [eV].
    pub fn energy_spread(&self) -> f64 {
        self.energy_spread
    }

    pub fn velocity(&self) -> f64 {
        beam_velocity(self.voltage).expect("validated at construction")
    }

    pub fn de_broglie_wavelength(&self) -> f64 {
        de_broglie_wavelength(self.voltage).expect("validated at construction")
    }

    pub fn coherence_length(&self) -> f64 {
        coherence_length(self.voltage, self.energy_spread).expect("validated at construction")
    }
}
