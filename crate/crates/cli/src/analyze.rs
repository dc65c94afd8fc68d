//! `aloof analyze`: stand-alone analysis of an existing PGM image (plus its
//! TOML sidecar) into a contrast profile, with optional band normalization
//! and optional per-row shear correction.

use std::path::PathBuf;

use aloof_core::config;
use aloof_core::fringe::{deshear_image, normalize_profile, slice_and_fit, write_profile_csv};
use aloof_core::pgm::load_image;
use clap::Args;

use crate::common;
use crate::failure::CliFailure;

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Input image (binary PGM with a .toml sidecar next to it)
    #[arg(long)]
    pub image: PathBuf,
    /// Slab height, e.g. "2 um"
    #[arg(long, default_value = "2 um")]
    pub slab: String,
    /// Normalize to the mean contrast of the top band of this height,
    /// e.g. "5 um"; raw contrast when omitted
    #[arg(long)]
    pub normalize_band: Option<String>,
    /// Per-row x shifts in metres (CSV file, one value per row, bottom row
    /// first) applied before slicing to straighten sheared fringes
    #[arg(long)]
    pub shear: Option<PathBuf>,
    /// Directory for profile.csv; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &AnalyzeArgs) -> Result<(), CliFailure> {
    let slab_height = config::parse_length(&args.slab)?;
    let band_height = args
        .normalize_band
        .as_deref()
        .map(config::parse_length)
        .transpose()?;

    let loaded = load_image(&args.image)?;
    let image = match &args.shear {
        None => loaded.image,
        Some(path) => {
            let shifts = read_shifts(path, loaded.image.height())?;
            deshear_image(&loaded.image, &shifts)?
        }
    };

    let raw = slice_and_fit(&image, slab_height)?;
    let (profile, band) = match band_height {
        None => (raw, None),
        Some(height) => {
            let band = raw.top_band(height);
            match normalize_profile(&raw, band) {
                Ok(normalized) => (normalized, Some(band)),
                Err(_) => {
                    // Nothing valid to normalize against; emit the raw
                    // profile so the flags are visible downstream.
                    (raw, None)
                }
            }
        }
    };

    use std::io::Write;
    let mut csv: Vec<u8> = Vec::new();
    writeln!(csv, "# command: aloof analyze")?;
    writeln!(csv, "# image: {}", args.image.display())?;
    writeln!(csv, "# cli_version: {}", env!("CARGO_PKG_VERSION"))?;
    match loaded.seed {
        Some(seed) => writeln!(csv, "# image_seed: {seed}")?,
        None => writeln!(csv, "# image_seed: none")?,
    }
    match loaded.total_counts {
        Some(counts) => writeln!(csv, "# image_total_counts: {counts:e}")?,
        None => writeln!(csv, "# image_total_counts: none")?,
    }
    writeln!(csv, "# slab_height_m: {slab_height:e}")?;
    match band {
        Some((lo, hi)) => writeln!(csv, "# band_m: {lo:e} .. {hi:e}")?,
        None => writeln!(csv, "# band_m: none")?,
    }
    write_profile_csv(&mut csv, &profile)?;

    match &args.out {
        Some(out) => {
            common::ensure_dir(out)?;
            common::write_file(&out.join("profile.csv"), &csv)?;
            println!(
                "{} slabs ({} valid); wrote profile.csv to {}",
                profile.len(),
                profile.valid_count(),
                out.display()
            );
        }
        None => {
            std::io::stdout().write_all(&csv)?;
        }
    }

    let flagged = profile.len() - profile.valid_count();
    if band_height.is_some() && band.is_none() {
        return Err(CliFailure::Degraded(
            "normalization band holds no valid slab; wrote raw contrast instead".to_string(),
        ));
    }
    if flagged > 0 {
        return Err(CliFailure::Degraded(format!(
            "{flagged} of {} slabs flagged",
            profile.len()
        )));
    }
    Ok(())
}

/// One shift per image row, in metres, bottom row first. Blank lines and
/// `#` comments are skipped.
fn read_shifts(path: &std::path::Path, height: usize) -> Result<Vec<f64>, CliFailure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliFailure::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut shifts = Vec::with_capacity(height);
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value = trimmed.parse::<f64>().map_err(|_| {
            CliFailure::Config(format!(
                "{} line {}: '{trimmed}' is not a number",
                path.display(),
                lineno + 1
            ))
        })?;
        shifts.push(value);
    }
    if shifts.len() != height {
        return Err(CliFailure::Config(format!(
            "{}: {} shifts for an image of {height} rows",
            path.display(),
            shifts.len()
        )));
    }
    Ok(shifts)
}
