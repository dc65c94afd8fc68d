//! Wien-filter method for measuring the beam path separation: the filter
//! shifts the two wave packets longitudinally by Δy ∝ Δx·U_WF, the mutual
//! coherence decays as a Gaussian in Δy, and scanning U_WF therefore maps
//! out a Gaussian contrast curve whose width encodes Δx.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::fit::{levenberg_marquardt, FitError, FitOptions};

#[derive(Debug, Error)]
pub enum WienError {
    #[error("invalid Wien filter: {0}")]
    InvalidFilter(String),
    #[error("invalid contrast scan: {0}")]
    InvalidScan(String),
    #[error("scan resolves no contrast decay: {0}")]
    ScanTooFlat(String),
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Crossed-field deflector pair: plate length L, plate gap D, applied
/// voltage ±U_WF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienFilter {
    pub plate_length: f64,
    pub plate_gap: f64,
    pub voltage: f64,
}

impl WienFilter {
    pub fn new(plate_length: f64, plate_gap: f64, voltage: f64) -> Result<Self, WienError> {
        if !(plate_length > 0.0) || !(plate_gap > 0.0) || !voltage.is_finite() {
            return Err(WienError::InvalidFilter(format!(
                "need L > 0, D > 0 and finite voltage, got L = {plate_length}, \
                 D = {plate_gap}, U = {voltage}"
            )));
        }
        Ok(Self {
            plate_length,
            plate_gap,
            voltage,
        })
    }
}

/// Longitudinal shift Δy = L Δx U_WF / (2 D U_beam).
pub fn wien_shift(wf: &WienFilter, u_beam: f64, dx: f64) -> f64 {
    wf.plate_length * dx * wf.voltage / (2.0 * wf.plate_gap * u_beam)
}

/// Coherence contrast after a longitudinal shift: C(Δy) = e^{−π(Δy/l_c)²/2}.
/// The width convention pins C(l_c) = e^{−π/2}; synthesis and extraction
/// share it, so the round trip is convention-free.
pub fn wien_contrast_model(dy: f64, l_c: f64) -> f64 {
    assert!(l_c > 0.0, "coherence length must be positive, got {l_c}");
    (-std::f64::consts::FRAC_PI_2 * (dy / l_c).powi(2)).exp()
}

/// Synthetic contrast scan over the given filter voltages, with optional
/// multiplicative Gaussian noise (fractional, e.g. 0.01 for 1%).
pub fn synthesize_scan(
    wf: &WienFilter,
    u_beam: f64,
    dx_true: f64,
    l_c: f64,
    voltages: &[f64],
    noise_fraction: f64,
    rng: &mut impl Rng,
) -> Vec<(f64, f64)> {
    let noise = Normal::new(0.0, 1.0).expect("unit normal is valid");
    voltages
        .iter()
        .map(|&u| {
            let probe = WienFilter {
                voltage: u,
                ..*wf
            };
            let clean = wien_contrast_model(wien_shift(&probe, u_beam, dx_true), l_c);
            let factor = if noise_fraction > 0.0 {
                1.0 + noise_fraction * noise.sample(rng)
            } else {
                1.0
            };
            (u, clean * factor)
        })
        .collect()
}

/// Result of a contrast-scan extraction.
#[derive(Debug, Clone, Copy)]
pub struct WienExtraction {
    pub separation: f64,
    /// Combined 1-sigma uncertainty from the fit width and the coherence
    /// length uncertainty.
    pub uncertainty: f64,
    /// Filter voltage at which the implied shift equals l_c.
    pub u_star: f64,
    pub u_star_sigma: f64,
    pub amplitude: f64,
}

/// Fit C(U_WF) = A e^{−π(U/U*)²/2} and invert the shift formula at U* where
/// Δy = l_c: Δx = 2 D U_beam l_c / (L U*).
pub fn wien_extract_separation(
    scan: &[(f64, f64)],
    wf: &WienFilter,
    u_beam: f64,
    l_c: f64,
    l_c_uncertainty: f64,
) -> Result<WienExtraction, WienError> {
    if scan.len() < 5 {
        return Err(WienError::InvalidScan(format!(
            "need at least 5 scan points, got {}",
            scan.len()
        )));
    }
    if !(l_c > 0.0) || !(l_c_uncertainty >= 0.0) || !(u_beam > 0.0) {
        return Err(WienError::InvalidScan(format!(
            "need l_c > 0, its uncertainty >= 0 and U_beam > 0, got {l_c}, \
             {l_c_uncertainty}, {u_beam}"
        )));
    }
    if scan
        .iter()
        .any(|(u, c)| !u.is_finite() || !c.is_finite())
    {
        return Err(WienError::InvalidScan("non-finite scan point".to_string()));
    }
    let c_max = scan.iter().map(|&(_, c)| c).fold(f64::NEG_INFINITY, f64::max);
    let c_min = scan.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min);
    if !(c_max > 0.0) || (c_max - c_min) < 0.02 * c_max {
        return Err(WienError::ScanTooFlat(format!(
            "contrast spans only [{c_min:.4}, {c_max:.4}]"
        )));
    }

    // Width seed: first |U| whose contrast falls below A e^{−π/2}.
    let u_abs_max = scan
        .iter()
        .map(|&(u, _)| u.abs())
        .fold(0.0f64, f64::max);
    let threshold = c_max * (-std::f64::consts::FRAC_PI_2).exp();
    let mut sorted: Vec<(f64, f64)> = scan.iter().map(|&(u, c)| (u.abs(), c)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let u_star_seed = sorted
        .iter()
        .find(|&&(_, c)| c < threshold)
        .map(|&(u, _)| u)
        .unwrap_or(u_abs_max / 2.0)
        .max(u_abs_max * 1e-3);

    let us: Vec<f64> = scan.iter().map(|&(u, _)| u).collect();
    let cs: Vec<f64> = scan.iter().map(|&(_, c)| c).collect();
    let weights = vec![1.0; scan.len()];
    let fit = levenberg_marquardt(
        |p, u| p[0] * (-std::f64::consts::FRAC_PI_2 * (u / p[1]).powi(2)).exp(),
        &us,
        &cs,
        &weights,
        &[c_max, u_star_seed],
        &FitOptions::default(),
    )?;
    // The model is even in U*, so the sign is a gauge choice.
    let u_star = fit.params[1].abs();
    let u_star_sigma = fit.sigma(1);
    if u_star > 5.0 * u_abs_max {
        return Err(WienError::ScanTooFlat(format!(
            "fitted width {u_star:.3e} V lies far beyond the scanned range {u_abs_max:.3e} V"
        )));
    }
    let separation = 2.0 * wf.plate_gap * u_beam * l_c / (wf.plate_length * u_star);
    let fractional = ((u_star_sigma / u_star).powi(2) + (l_c_uncertainty / l_c).powi(2)).sqrt();
    Ok(WienExtraction {
        separation,
        uncertainty: separation * fractional,
        u_star,
        u_star_sigma,
        amplitude: fit.params[0],
    })
}
