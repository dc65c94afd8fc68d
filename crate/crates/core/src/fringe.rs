//! Synthetic interferograms and the analysis chain back out of them:
//! slice into Δz slabs, collapse each slab into a histogram, fit the fringe
//! model, and normalize the resulting contrast profile to a reference band.
//!
//! Conventions fixed here and shared by synthesis and analysis: the column
//! coordinate is centred, x_j = (j − (w−1)/2)·pitch_x; row r of an image
//! covers heights [z0 + r·pitch_z, z0 + (r+1)·pitch_z) with its centre at
//! z0 + (r+½)·pitch_z; slabs are counted from the bottom row upward and a
//! partial slab at the top edge is dropped.

use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::fit::{levenberg_marquardt, FitError, FitOptions, FitResult};
use crate::models::{csv_field, VisibilityCurve};
use crate::special::sinc;

#[derive(Debug, Error)]
pub enum FringeError {
    #[error("invalid fringe parameters: {0}")]
    InvalidParams(String),
    #[error("invalid image geometry: {0}")]
    InvalidGeometry(String),
    #[error("visibility curve does not cover the image: {0}")]
    CurveMismatch(String),
    #[error("histogram has no significant periodicity (implied contrast {implied_contrast:.4})")]
    NoPeriodicity { implied_contrast: f64 },
    #[error("histogram needs at least 8 bins, got {0}")]
    TooFewBins(usize),
    #[error("reference band contains no valid slab")]
    EmptyReferenceBand,
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Fringe model I(x) = I0 (1 + C cos(2πx/s + φ0)) sinc²(2πx/s1 + φ1).
/// Field mapping: `i0` = I0, `contrast` = C, `spacing` = s, `phase` = φ0,
/// `envelope_width` = s1, `envelope_phase` = φ1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeModelParams {
    pub i0: f64,
    pub contrast: f64,
    pub spacing: f64,
    pub phase: f64,
    pub envelope_width: f64,
    pub envelope_phase: f64,
}

impl FringeModelParams {
    pub fn validate(&self) -> Result<(), FringeError> {
        let bad = |msg: String| Err(FringeError::InvalidParams(msg));
        if !(self.i0 > 0.0) || !self.i0.is_finite() {
            return bad(format!("I0 must be positive, got {}", self.i0));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return bad(format!("contrast must be in [0, 1], got {}", self.contrast));
        }
        if !(self.spacing > 0.0) || !(self.envelope_width > 0.0) {
            return bad(format!(
                "spacings must be positive, got s = {}, s1 = {}",
                self.spacing, self.envelope_width
            ));
        }
        if !self.phase.is_finite() || !self.envelope_phase.is_finite() {
            return bad("phases must be finite".to_string());
        }
        Ok(())
    }
}

pub fn fringe_intensity(p: &FringeModelParams, x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let fringe = 1.0 + p.contrast * (tau * x / p.spacing + p.phase).cos();
    let envelope = sinc(tau * x / p.envelope_width + p.envelope_phase);
    p.i0 * fringe * envelope * envelope
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGeometry {
    pub width: usize,
    pub height: usize,
    pub pixel_pitch_x: f64,
    pub pixel_pitch_z: f64,
    /// Height of the bottom edge of the bottom row.
    pub z_of_bottom_row: f64,
}

impl ImageGeometry {
    pub fn validate(&self) -> Result<(), FringeError> {
        if self.width < 2 || self.height < 1 {
            return Err(FringeError::InvalidGeometry(format!(
                "image must be at least 2x1 pixels, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.pixel_pitch_x > 0.0) || !(self.pixel_pitch_z > 0.0) {
            return Err(FringeError::InvalidGeometry(format!(
                "pitches must be positive, got {} and {}",
                self.pixel_pitch_x, self.pixel_pitch_z
            )));
        }
        if !self.z_of_bottom_row.is_finite() {
            return Err(FringeError::InvalidGeometry(
                "z origin must be finite".to_string(),
            ));
        }
        Ok(())
    }

    pub fn x_of_column(&self, j: usize) -> f64 {
        (j as f64 - (self.width as f64 - 1.0) / 2.0) * self.pixel_pitch_x
    }

    pub fn z_of_row_center(&self, r: usize) -> f64 {
        self.z_of_bottom_row + (r as f64 + 0.5) * self.pixel_pitch_z
    }
}

/// Electron-count image. Row 0 is the bottom row (lowest z).
#[derive(Debug, Clone, PartialEq)]
pub struct FringeImage {
    counts: Vec<u32>,
    geometry: ImageGeometry,
}

impl FringeImage {
    pub fn from_counts(geometry: ImageGeometry, counts: Vec<u32>) -> Result<Self, FringeError> {
        geometry.validate()?;
        if counts.len() != geometry.width * geometry.height {
            return Err(FringeError::InvalidGeometry(format!(
                "{} counts do not fill a {}x{} image",
                counts.len(),
                geometry.width,
                geometry.height
            )));
        }
        Ok(Self { counts, geometry })
    }

    pub fn geometry(&self) -> &ImageGeometry {
        &self.geometry
    }

    pub fn width(&self) -> usize {
        self.geometry.width
    }

    pub fn height(&self) -> usize {
        self.geometry.height
    }

    pub fn row(&self, r: usize) -> &[u32] {
        let w = self.geometry.width;
        &self.counts[r * w..(r + 1) * w]
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Forward model of one recorded interferogram: each row's contrast is the
/// base contrast scaled by V(z) at the row centre, pixel counts are
/// independent Poisson draws whose expectations sum to `total_counts`.
/// Per-row generator streams make the result deterministic in `seed`.
pub fn synthesize_image(
    curve: &VisibilityCurve,
    base: &FringeModelParams,
    geometry: &ImageGeometry,
    total_counts: f64,
    seed: u64,
) -> Result<FringeImage, FringeError> {
    base.validate()?;
    geometry.validate()?;
    if !(total_counts > 0.0) || !total_counts.is_finite() {
        return Err(FringeError::InvalidGeometry(format!(
            "total counts must be positive and finite, got {total_counts}"
        )));
    }
    if curve.is_empty() || !curve.all_ok() {
        return Err(FringeError::CurveMismatch(
            "curve is empty or has failed points".to_string(),
        ));
    }
    let z_lo = geometry.z_of_row_center(0);
    let z_hi = geometry.z_of_row_center(geometry.height - 1);
    let grid = (curve.z_values[0], curve.z_values[curve.z_values.len() - 1]);
    if grid.0 > z_lo || grid.1 < z_hi {
        return Err(FringeError::CurveMismatch(format!(
            "curve spans [{:.3e}, {:.3e}] m but the image needs [{:.3e}, {:.3e}] m",
            grid.0, grid.1, z_lo, z_hi
        )));
    }

    let mut expected = vec![0.0f64; geometry.width * geometry.height];
    for r in 0..geometry.height {
        let visibility = curve.visibility_at(geometry.z_of_row_center(r));
        let row_params = FringeModelParams {
            contrast: base.contrast * visibility,
            ..*base
        };
        for j in 0..geometry.width {
            expected[r * geometry.width + j] =
                fringe_intensity(&row_params, geometry.x_of_column(j));
        }
    }
    let sum: f64 = expected.iter().sum();
    if !(sum > 0.0) {
        return Err(FringeError::InvalidParams(
            "expected intensity sums to zero".to_string(),
        ));
    }
    let scale = total_counts / sum;

    let mut counts = vec![0u32; expected.len()];
    for r in 0..geometry.height {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        for j in 0..geometry.width {
            let lambda = expected[r * geometry.width + j] * scale;
            counts[r * geometry.width + j] = if lambda > 0.0 {
                let poisson = Poisson::new(lambda).expect("lambda is positive and finite");
                poisson.sample(&mut rng) as u32
            } else {
                0
            };
        }
    }
    FringeImage::from_counts(*geometry, counts)
}

/// Straightening hook for real-detector images: shift row `r` by `shifts[r]`
/// metres along +x (rounded to whole pixels) before slicing. Counts shifted
/// past an edge are dropped rather than wrapped, so a straightened fringe
/// never borrows intensity from the opposite side of the image.
pub fn deshear_image(image: &FringeImage, shifts: &[f64]) -> Result<FringeImage, FringeError> {
    let geometry = *image.geometry();
    if shifts.len() != geometry.height {
        return Err(FringeError::InvalidGeometry(format!(
            "{} shear coefficients for {} image rows",
            shifts.len(),
            geometry.height
        )));
    }
    if shifts.iter().any(|s| !s.is_finite()) {
        return Err(FringeError::InvalidGeometry(
            "shear coefficients must be finite".to_string(),
        ));
    }
    let width = geometry.width as i64;
    let mut counts = vec![0u32; geometry.width * geometry.height];
    for r in 0..geometry.height {
        let shift = (shifts[r] / geometry.pixel_pitch_x).round() as i64;
        let row = image.row(r);
        for (j, &c) in row.iter().enumerate() {
            let target = j as i64 + shift;
            if (0..width).contains(&target) {
                counts[r * geometry.width + target as usize] = c;
            }
        }
    }
    FringeImage::from_counts(geometry, counts)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlabStatus {
    Ok,
    /// Fit drifted above contrast 1 and was clamped down to 1.
    Clamped,
    FitFailed(String),
    NoPeriodicity,
}

impl SlabStatus {
    /// Whether the slab carries a usable contrast value.
    pub fn is_valid(&self) -> bool {
        matches!(self, SlabStatus::Ok | SlabStatus::Clamped)
    }

    pub fn tag(&self) -> String {
        match self {
            SlabStatus::Ok => "ok".to_string(),
            SlabStatus::Clamped => "clamped".to_string(),
            SlabStatus::FitFailed(reason) => format!("failed: {reason}"),
            SlabStatus::NoPeriodicity => "no_periodicity".to_string(),
        }
    }
}

/// Contrast versus height, one entry per slab. Invalid slabs keep their
/// slot with NaN contrast and a status explaining why.
#[derive(Debug, Clone)]
pub struct ContrastProfile {
    pub z_centers: Vec<f64>,
    pub contrast: Vec<f64>,
    pub sigma: Vec<f64>,
    pub statuses: Vec<SlabStatus>,
    pub normalized: bool,
    pub normalization_constant: Option<f64>,
}

impl ContrastProfile {
    pub fn len(&self) -> usize {
        self.z_centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_centers.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.statuses.iter().filter(|s| s.is_valid()).count()
    }

    /// The reference band of the given height, hanging from the topmost
    /// slab centre.
    pub fn top_band(&self, height: f64) -> (f64, f64) {
        let top = self
            .z_centers
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (top - height, f64::INFINITY)
    }
}

/// Slice the image into slabs of the given height (snapped to whole rows),
/// sum each slab's counts column-wise and fit the fringe model to the
/// histogram. Fit failures are flagged per slab, never fabricated.
pub fn slice_and_fit(image: &FringeImage, slab_height: f64) -> Result<ContrastProfile, FringeError> {
    let geometry = image.geometry();
    let rows_per_slab = (slab_height / geometry.pixel_pitch_z).round() as i64;
    if rows_per_slab < 1 {
        return Err(FringeError::InvalidGeometry(format!(
            "slab height {slab_height:e} m is thinner than one row ({:e} m)",
            geometry.pixel_pitch_z
        )));
    }
    let rows_per_slab = rows_per_slab as usize;
    let slab_count = geometry.height / rows_per_slab;
    if slab_count == 0 {
        return Err(FringeError::InvalidGeometry(
            "image is shorter than one slab".to_string(),
        ));
    }

    let mut profile = ContrastProfile {
        z_centers: Vec::with_capacity(slab_count),
        contrast: Vec::with_capacity(slab_count),
        sigma: Vec::with_capacity(slab_count),
        statuses: Vec::with_capacity(slab_count),
        normalized: false,
        normalization_constant: None,
    };
    for slab in 0..slab_count {
        let mut histogram = vec![0.0f64; geometry.width];
        for r in slab * rows_per_slab..(slab + 1) * rows_per_slab {
            for (j, &c) in image.row(r).iter().enumerate() {
                histogram[j] += c as f64;
            }
        }
        let z_center =
            geometry.z_of_bottom_row + (slab as f64 + 0.5) * rows_per_slab as f64 * geometry.pixel_pitch_z;
        profile.z_centers.push(z_center);
        match fit_fringe_model(&histogram, geometry.pixel_pitch_x, None) {
            Ok((params, fit)) => {
                let clamped = params.contrast > 1.0;
                profile.contrast.push(params.contrast.min(1.0));
                profile.sigma.push(fit.sigma(1));
                profile
                    .statuses
                    .push(if clamped { SlabStatus::Clamped } else { SlabStatus::Ok });
            }
            Err(FringeError::NoPeriodicity { .. }) => {
                profile.contrast.push(f64::NAN);
                profile.sigma.push(f64::NAN);
                profile.statuses.push(SlabStatus::NoPeriodicity);
            }
            Err(e) => {
                profile.contrast.push(f64::NAN);
                profile.sigma.push(f64::NAN);
                profile.statuses.push(SlabStatus::FitFailed(e.to_string()));
            }
        }
    }
    Ok(profile)
}

/// Divide the whole profile by the mean contrast of the valid slabs whose
/// centres fall inside `band`; the mean is stored on the result.
pub fn normalize_profile(
    profile: &ContrastProfile,
    band: (f64, f64),
) -> Result<ContrastProfile, FringeError> {
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..profile.len() {
        let z = profile.z_centers[i];
        if profile.statuses[i].is_valid() && z >= band.0 && z <= band.1 {
            total += profile.contrast[i];
            n += 1;
        }
    }
    if n == 0 {
        return Err(FringeError::EmptyReferenceBand);
    }
    let mean = total / n as f64;
    if !(mean > 0.0) {
        return Err(FringeError::EmptyReferenceBand);
    }
    Ok(ContrastProfile {
        z_centers: profile.z_centers.clone(),
        contrast: profile.contrast.iter().map(|c| c / mean).collect(),
        sigma: profile.sigma.iter().map(|s| s / mean).collect(),
        statuses: profile.statuses.clone(),
        normalized: true,
        normalization_constant: Some(mean),
    })
}

/// Dominant nonzero bin of the discrete spectrum, with the implied
/// contrast 2|X_k|/X_0 and phase information for seeding.
struct SpectralPeak {
    k: usize,
    amplitude: Complex64,
    mean_power: f64,
    total: f64,
}

/// The sinc^2 envelope is a single smooth hump across the window, so its
/// spectral power lands in the lowest few bins; a histogram with no fringes
/// at all still shows a strong k = 1..3 "peak" from envelope curvature.
/// Fringe detection therefore starts at k = 4, i.e. at least four full
/// periods across the window.
const DETECTION_K_MIN: usize = 4;

fn dominant_peak(histogram: &[f64]) -> SpectralPeak {
    let n = histogram.len();
    let total: f64 = histogram.iter().sum();
    let mut best_k = DETECTION_K_MIN;
    let mut best: Complex64 = Complex64::new(0.0, 0.0);
    let mut powers = Vec::with_capacity(n / 2);
    for k in 1..=n / 2 {
        let mut x = Complex64::new(0.0, 0.0);
        for (j, &h) in histogram.iter().enumerate() {
            let angle = -std::f64::consts::TAU * (j * k) as f64 / n as f64;
            x += h * Complex64::new(angle.cos(), angle.sin());
        }
        let power = x.norm_sqr();
        powers.push(power);
        if k >= DETECTION_K_MIN && power > best.norm_sqr() {
            best = x;
            best_k = k;
        }
    }
    powers.sort_by(f64::total_cmp);
    let median = powers[powers.len() / 2];
    SpectralPeak {
        k: best_k,
        amplitude: best,
        mean_power: median,
        total,
    }
}

/// How far above the median spectral power the dominant peak must sit to
/// count as periodicity; calibrated against Poisson noise floors.
const PEAK_SIGNIFICANCE: f64 = 25.0;

/// Below this implied contrast a "peak" is rounding residue from the DFT of
/// an essentially constant histogram, not signal; a constant histogram has
/// an exactly zero spectrum only in exact arithmetic.
const CONTRAST_FLOOR: f64 = 1e-6;

/// Fit the fringe model to a histogram. Without an initial guess, seeds
/// come from the dominant spectral peak; a spectrum with no significant
/// peak is a [`FringeError::NoPeriodicity`] error carrying the contrast the
/// peak would imply.
pub fn fit_fringe_model(
    histogram: &[f64],
    pitch: f64,
    initial: Option<&FringeModelParams>,
) -> Result<(FringeModelParams, FitResult), FringeError> {
    let n = histogram.len();
    if n < 8 {
        return Err(FringeError::TooFewBins(n));
    }
    if !(pitch > 0.0) {
        return Err(FringeError::InvalidGeometry(format!(
            "pitch must be positive, got {pitch}"
        )));
    }
    if histogram.iter().any(|h| !h.is_finite() || *h < 0.0) {
        return Err(FringeError::InvalidParams(
            "histogram bins must be finite and nonnegative".to_string(),
        ));
    }

    let center = (n as f64 - 1.0) / 2.0;
    let xs: Vec<f64> = (0..n).map(|j| (j as f64 - center) * pitch).collect();
    let weights: Vec<f64> = histogram.iter().map(|&h| 1.0 / h.max(1.0)).collect();

    let seed = match initial {
        Some(p) => *p,
        None => {
            let peak = dominant_peak(histogram);
            let implied_contrast = if peak.total > 0.0 {
                (2.0 * peak.amplitude.norm() / peak.total).min(1.0)
            } else {
                0.0
            };
            let significant = implied_contrast >= CONTRAST_FLOOR
                && peak.amplitude.norm_sqr() >= PEAK_SIGNIFICANCE * peak.mean_power;
            if !significant {
                return Err(FringeError::NoPeriodicity { implied_contrast });
            }
            let spacing = n as f64 * pitch / peak.k as f64;
            // arg X_k = φ0 − 2π k c / n in the centred coordinate.
            let phase = wrap_phase(
                peak.amplitude.arg() + std::f64::consts::TAU * peak.k as f64 * center / n as f64,
            );
            FringeModelParams {
                i0: peak.total / n as f64,
                contrast: implied_contrast,
                spacing,
                phase,
                envelope_width: 4.0 * n as f64 * pitch,
                envelope_phase: 0.0,
            }
        }
    };

    let model = |p: &[f64], x: f64| {
        fringe_intensity(
            &FringeModelParams {
                i0: p[0],
                contrast: p[1],
                spacing: p[2],
                phase: p[3],
                envelope_width: p[4],
                envelope_phase: p[5],
            },
            x,
        )
    };
    let start = [
        seed.i0,
        seed.contrast,
        seed.spacing,
        seed.phase,
        seed.envelope_width,
        seed.envelope_phase,
    ];
    let fit = levenberg_marquardt(model, &xs, histogram, &weights, &start, &FitOptions::default())?;

    // A negative fitted contrast is the same model with the phase advanced
    // by π; report the canonical form.
    let mut params = FringeModelParams {
        i0: fit.params[0],
        contrast: fit.params[1],
        spacing: fit.params[2].abs(),
        phase: fit.params[3],
        envelope_width: fit.params[4].abs(),
        envelope_phase: fit.params[5],
    };
    if params.contrast < 0.0 {
        params.contrast = -params.contrast;
        params.phase += std::f64::consts::PI;
    }
    params.phase = wrap_phase(params.phase);
    params.envelope_phase = wrap_phase(params.envelope_phase);
    Ok((params, fit))
}

fn wrap_phase(phi: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let wrapped = phi - tau * (phi / tau).round();
    if wrapped <= -std::f64::consts::PI {
        wrapped + tau
    } else {
        wrapped
    }
}

/// Profile CSV: provenance comments, then
/// `z_m,contrast,sigma,status,normalized` rows.
pub fn write_profile_csv<W: Write>(out: &mut W, profile: &ContrastProfile) -> std::io::Result<()> {
    writeln!(out, "# version: {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# normalized: {}", profile.normalized)?;
    match profile.normalization_constant {
        Some(c) => writeln!(out, "# normalization_constant: {c:e}")?,
        None => writeln!(out, "# normalization_constant: none")?,
    }
    writeln!(out, "z_m,contrast,sigma,status,normalized")?;
    for i in 0..profile.len() {
        writeln!(
            out,
            "{:e},{:e},{:e},{},{}",
            profile.z_centers[i],
            profile.contrast[i],
            profile.sigma[i],
            csv_field(&profile.statuses[i].tag()),
            profile.normalized
        )?;
    }
    Ok(())
}
