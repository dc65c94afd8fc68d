//! `aloof pipeline`: the full synthetic experiment. Evaluate one model's
//! visibility curve, synthesize a Poisson fringe image under it, analyze
//! the image back into a contrast profile, normalize, and write an
//! extracted-versus-model comparison with a max-deviation summary.

use std::path::PathBuf;

use aloof_core::config;
use aloof_core::fringe::{
    normalize_profile, slice_and_fit, synthesize_image, write_profile_csv, ContrastProfile,
    FringeModelParams, ImageGeometry,
};
use aloof_core::geometry::InteractionGeometry;
use aloof_core::models::{
    model_by_tag, visibility_curve, write_curve_csv, DecoherenceInput, VisibilityCurve,
};
use aloof_core::pgm::save_image;
use clap::Args;

use crate::common;
use crate::failure::CliFailure;

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Pipeline configuration (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Poisson seed, overriding the config
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Relative quadrature tolerance override
    #[arg(long)]
    pub tol: Option<f64>,
}

pub fn run(args: &PipelineArgs) -> Result<(), CliFailure> {
    let root = config::load_toml(&args.config)?;
    let context = args.config.display().to_string();

    let material = common::resolve_material(config::get_str(&root, &context, "material")?)?;
    let model = model_by_tag(config::get_str(&root, &context, "model")?)?;
    let seed = common::resolve_seed(args.seed, &root, &context)?;
    let beam = common::beam_from_table(&root, &context)?;
    let settings = common::settings_from_table(&root, &context, args.tol)?;

    let image_table = common::require_table(&root, &context, "image")?;
    let ictx = format!("{context} [image]");
    let geometry = ImageGeometry {
        width: config::get_f64(image_table, &ictx, "width")? as usize,
        height: config::get_f64(image_table, &ictx, "height")? as usize,
        pixel_pitch_x: common::get_length(image_table, &ictx, "pixel_pitch_x")?,
        pixel_pitch_z: common::get_length(image_table, &ictx, "pixel_pitch_z")?,
        z_of_bottom_row: common::get_length(image_table, &ictx, "z_of_bottom_row")?,
    };
    geometry.validate()?;
    let total_counts = config::get_f64(image_table, &ictx, "total_counts")?;

    let fringe_table = common::require_table(&root, &context, "fringe")?;
    let fctx = format!("{context} [fringe]");
    let fringe = FringeModelParams {
        i0: config::get_f64(fringe_table, &fctx, "i0")?,
        contrast: config::get_f64(fringe_table, &fctx, "contrast")?,
        spacing: common::get_length(fringe_table, &fctx, "spacing")?,
        phase: config::get_f64(fringe_table, &fctx, "phase")?,
        envelope_width: common::get_length(fringe_table, &fctx, "envelope_width")?,
        envelope_phase: config::get_f64_opt(fringe_table, &fctx, "envelope_phase")?.unwrap_or(0.0),
    };
    fringe.validate()?;

    let analysis_table = common::require_table(&root, &context, "analysis")?;
    let actx = format!("{context} [analysis]");
    let slab_height = common::get_length(analysis_table, &actx, "slab_height")?;
    let band_height = common::get_length(analysis_table, &actx, "normalize_band_height")?;

    let geometry_table = common::require_table(&root, &context, "geometry")?;
    let gctx = format!("{context} [geometry]");
    let plate_length = common::get_length(geometry_table, &gctx, "plate_length")?;
    let separation = common::get_length(geometry_table, &gctx, "separation")?;
    let surface_offset =
        common::get_length_opt(geometry_table, &gctx, "surface_offset")?.unwrap_or(0.0);
    let curve_points =
        config::get_f64_opt(geometry_table, &gctx, "curve_points")?.unwrap_or(41.0) as usize;
    if curve_points < 2 {
        return Err(CliFailure::Config(format!(
            "{gctx}: curve_points must be at least 2"
        )));
    }

    // The model grid spans the image's row centres, so interpolation never
    // extrapolates and the bottom row sits strictly above the surface.
    let z_lo = geometry.z_of_row_center(0);
    let z_hi = geometry.z_of_row_center(geometry.height - 1);
    let interaction = InteractionGeometry::with_linear_grid(
        plate_length,
        separation,
        surface_offset,
        z_lo,
        z_hi,
        curve_points,
    )?;
    let input = DecoherenceInput::new(material, beam, interaction)?;

    common::ensure_dir(&args.out)?;
    use std::io::Write;

    let curve = visibility_curve(model, &input, &settings);
    let mut curve_csv: Vec<u8> = Vec::new();
    writeln!(curve_csv, "# command: aloof pipeline")?;
    writeln!(curve_csv, "# config: {context}")?;
    writeln!(curve_csv, "# seed: {seed}")?;
    write_curve_csv(&mut curve_csv, &curve, &input, &settings)?;
    common::write_file(&args.out.join("curve.csv"), &curve_csv)?;
    if !curve.all_ok() {
        return Err(CliFailure::Convergence(format!(
            "{} of {} curve points failed; see curve.csv",
            curve.failed_count(),
            curve.len()
        )));
    }

    let image = synthesize_image(&curve, &fringe, &geometry, total_counts, seed)?;
    save_image(&args.out.join("image.pgm"), &image, Some(seed))?;

    let raw = slice_and_fit(&image, slab_height)?;
    let band = raw.top_band(band_height);
    let normalized = normalize_profile(&raw, band)?;

    let mut profile_csv: Vec<u8> = Vec::new();
    writeln!(profile_csv, "# command: aloof pipeline")?;
    writeln!(profile_csv, "# config: {context}")?;
    writeln!(profile_csv, "# seed: {seed}")?;
    writeln!(profile_csv, "# slab_height_m: {slab_height:e}")?;
    writeln!(profile_csv, "# band_m: {:e} .. {:e}", band.0, band.1)?;
    write_profile_csv(&mut profile_csv, &normalized)?;
    common::write_file(&args.out.join("profile.csv"), &profile_csv)?;

    let (comparison, max_deviation) =
        comparison_csv(&context, seed, &curve, &normalized, band)?;
    common::write_file(&args.out.join("comparison.csv"), &comparison)?;

    println!(
        "model {} on {}: {} slabs ({} valid), max |extracted - model| = {max_deviation:.4}",
        curve.model,
        input.material.name,
        normalized.len(),
        normalized.valid_count()
    );
    println!(
        "wrote curve.csv, image.pgm, image.toml, profile.csv, comparison.csv to {}",
        args.out.display()
    );

    if normalized.valid_count() < normalized.len() {
        return Err(CliFailure::Degraded(format!(
            "{} of {} slabs flagged; see profile.csv",
            normalized.len() - normalized.valid_count(),
            normalized.len()
        )));
    }
    Ok(())
}

/// Extracted-versus-model table. The model column carries V(z) divided by
/// its mean over the slabs the normalization band used, so both columns are
/// in the same (band = 1) units.
fn comparison_csv(
    context: &str,
    seed: u64,
    curve: &VisibilityCurve,
    profile: &ContrastProfile,
    band: (f64, f64),
) -> Result<(Vec<u8>, f64), CliFailure> {
    use std::io::Write;

    let band_values: Vec<f64> = profile
        .z_centers
        .iter()
        .zip(&profile.statuses)
        .filter(|(z, status)| status.is_valid() && **z >= band.0 && **z <= band.1)
        .map(|(&z, _)| curve.visibility_at(z))
        .collect();
    if band_values.is_empty() {
        return Err(CliFailure::Degraded(
            "no valid slab in the normalization band".to_string(),
        ));
    }
    let band_mean = band_values.iter().sum::<f64>() / band_values.len() as f64;

    let mut out: Vec<u8> = Vec::new();
    writeln!(out, "# command: aloof pipeline")?;
    writeln!(out, "# config: {context}")?;
    writeln!(out, "# cli_version: {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# seed: {seed}")?;
    writeln!(out, "# model: {}", curve.model)?;
    writeln!(out, "# model_band_mean: {band_mean:e}")?;

    let mut max_deviation = 0.0f64;
    let mut rows = Vec::with_capacity(profile.len());
    for i in 0..profile.len() {
        let z = profile.z_centers[i];
        let model_value = curve.visibility_at(z) / band_mean;
        let status = &profile.statuses[i];
        let deviation = if status.is_valid() {
            let d = (profile.contrast[i] - model_value).abs();
            max_deviation = max_deviation.max(d);
            format!("{d:e}")
        } else {
            "nan".to_string()
        };
        rows.push(format!(
            "{z:e},{:e},{:e},{model_value:e},{deviation},{}",
            profile.contrast[i],
            profile.sigma[i],
            status.tag().replace(',', ";")
        ));
    }
    writeln!(out, "# max_abs_deviation: {max_deviation:e}")?;
    writeln!(out, "z_m,extracted,sigma,model,deviation,status")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok((out, max_deviation))
}
