//! Physical constants, CODATA 2018, SI units.

/// Elementary charge [C]. Exact since the 2019 SI redefinition.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Planck constant [J s]. Exact.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant h/2π [J s].
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant [J/K]. Exact.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Vacuum permittivity [F/m].
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Speed of light in vacuum [m/s]. Exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Electron rest mass [kg].
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_consistent_with_h() {
        let derived = PLANCK / (2.0 * std::f64::consts::PI);
        assert!((derived - HBAR).abs() / HBAR < 1e-9);
    }

    #[test]
    fn permittivity_consistent_with_c() {
        // ε0 = 1/(μ0 c²) with μ0 ≈ 4π·1e-7 still holds to CODATA precision.
        let mu0 = 1.256_637_062_12e-6;
        let derived = 1.0 / (mu0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
        assert!((derived - VACUUM_PERMITTIVITY).abs() / VACUUM_PERMITTIVITY < 1e-9);
    }
}
