//! Geometry of the interaction region.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("plate length must be positive, got {0} m")]
    NonpositivePlate(f64),
    #[error("path separation must be nonnegative and finite, got {0} m")]
    BadSeparation(f64),
    #[error("height grid must not be empty")]
    EmptyGrid,
    #[error("height grid must be strictly ascending (entry {index})")]
    NotAscending { index: usize },
    #[error("effective height z - z0 must be positive, got {z_eff} m at z = {z} m")]
    NonpositiveEffectiveHeight { z: f64, z_eff: f64 },
}

/// Plate length, path separation and the height grid the models are
/// evaluated on.
///
/// `surface_offset` shifts the nominal surface position: models see the
/// effective height z - z0. Measured silicon datasets carry z0 = -3 µm to
/// absorb the uncertainty in where the surface actually sits; synthetic
/// data uses 0.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGeometry {
    /// Interaction (plate) length L [m].
    pub plate_length: f64,
    /// Path separation Δx [m].
    pub separation: f64,
    /// Surface offset z0 [m].
    pub surface_offset: f64,
    /// Heights z [m], strictly ascending.
    pub z_grid: Vec<f64>,
}

impl InteractionGeometry {
    pub fn new(
        plate_length: f64,
        separation: f64,
        surface_offset: f64,
        z_grid: Vec<f64>,
    ) -> Result<Self, GeometryError> {
        if !(plate_length > 0.0 && plate_length.is_finite()) {
            return Err(GeometryError::NonpositivePlate(plate_length));
        }
        if !(separation >= 0.0 && separation.is_finite()) {
            return Err(GeometryError::BadSeparation(separation));
        }
        if z_grid.is_empty() {
            return Err(GeometryError::EmptyGrid);
        }
        for (i, pair) in z_grid.windows(2).enumerate() {
            if !(pair[1] > pair[0]) {
                return Err(GeometryError::NotAscending { index: i + 1 });
            }
        }
        for &z in &z_grid {
            let z_eff = z - surface_offset;
            if !(z_eff > 0.0) {
                return Err(GeometryError::NonpositiveEffectiveHeight { z, z_eff });
            }
        }
        Ok(Self {
            plate_length,
            separation,
            surface_offset,
            z_grid,
        })
    }

    /// Evenly spaced grid of `points` heights on [z_min, z_max].
    pub fn with_linear_grid(
        plate_length: f64,
        separation: f64,
        surface_offset: f64,
        z_min: f64,
        z_max: f64,
        points: usize,
    ) -> Result<Self, GeometryError> {
        if points == 0 {
            return Err(GeometryError::EmptyGrid);
        }
        let grid = if points == 1 {
            vec![z_min]
        } else {
            (0..points)
                .map(|i| z_min + (z_max - z_min) * i as f64 / (points - 1) as f64)
                .collect()
        };
        Self::new(plate_length, separation, surface_offset, grid)
    }

    /// Effective height seen by the models.
    pub fn effective_height(&self, z: f64) -> f64 {
        z - self.surface_offset
    }
}
