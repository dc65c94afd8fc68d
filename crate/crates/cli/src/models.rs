//! `aloof models`: visibility curves V(z) for a set of models and path
//! separations, one CSV per (model, separation) plus a combined comparison
//! file with one block per separation and one column per model.

use std::path::PathBuf;

use aloof_core::config;
use aloof_core::geometry::InteractionGeometry;
use aloof_core::models::{
    model_by_tag, visibility_curve, write_curve_csv, write_provenance_comments,
    DecoherenceInput, DecoherenceModel, PointStatus,
};
use clap::Args;

use crate::common;
use crate::failure::CliFailure;

#[derive(Args, Debug)]
pub struct ModelsArgs {
    /// Run configuration (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated model tags, overriding the config's list
    #[arg(long, value_delimiter = ',')]
    pub model: Vec<String>,
    /// Material (bundled name, file, or file#name), overriding the config
    #[arg(long)]
    pub material: Option<String>,
    /// Path separation such as "9.4 um" (repeatable), overriding the config
    #[arg(long)]
    pub dx: Vec<String>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Relative quadrature tolerance override
    #[arg(long)]
    pub tol: Option<f64>,
}

pub fn run(args: &ModelsArgs) -> Result<(), CliFailure> {
    let root = config::load_toml(&args.config)?;
    let context = args.config.display().to_string();

    let material_spec = match &args.material {
        Some(s) => s.clone(),
        None => config::get_str(&root, &context, "material")?.to_string(),
    };
    let material = common::resolve_material(&material_spec)?;

    let tags = if args.model.is_empty() {
        common::get_string_array(&root, &context, "models")?
    } else {
        args.model.clone()
    };
    if tags.is_empty() {
        return Err(CliFailure::Config("model set is empty".to_string()));
    }
    let models: Vec<&'static dyn DecoherenceModel> = tags
        .iter()
        .map(|t| model_by_tag(t).map_err(CliFailure::from))
        .collect::<Result<_, _>>()?;

    let separations: Vec<f64> = if args.dx.is_empty() {
        common::get_length_array(&root, &context, "separations")?
    } else {
        args.dx
            .iter()
            .map(|s| config::parse_length(s).map_err(CliFailure::from))
            .collect::<Result<_, _>>()?
    };
    if separations.is_empty() {
        return Err(CliFailure::Config("separation set is empty".to_string()));
    }

    let beam = common::beam_from_table(&root, &context)?;
    let geometry_table = common::require_table(&root, &context, "geometry")?;
    let gctx = format!("{context} [geometry]");
    let plate_length = common::get_length(geometry_table, &gctx, "plate_length")?;
    let surface_offset =
        common::get_length_opt(geometry_table, &gctx, "surface_offset")?.unwrap_or(0.0);
    let z_min = common::get_length(geometry_table, &gctx, "z_min")?;
    let z_max = common::get_length(geometry_table, &gctx, "z_max")?;
    let z_points = config::get_f64(geometry_table, &gctx, "z_points")? as usize;
    let settings = common::settings_from_table(&root, &context, args.tol)?;

    common::ensure_dir(&args.out)?;

    let mut comparison: Vec<u8> = Vec::new();
    use std::io::Write;
    writeln!(comparison, "# command: aloof models")?;
    writeln!(comparison, "# config: {context}")?;
    writeln!(comparison, "# cli_version: {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(comparison, "# models: {}", tags.join(","))?;

    let mut total_failed = 0usize;
    for &dx in &separations {
        let geometry = InteractionGeometry::with_linear_grid(
            plate_length,
            dx,
            surface_offset,
            z_min,
            z_max,
            z_points,
        )?;
        let input = DecoherenceInput::new(material.clone(), beam.clone(), geometry)?;

        writeln!(comparison, "# block: separation_m = {dx:e}")?;
        write_provenance_comments(&mut comparison, &input, &settings)?;
        writeln!(comparison, "z_m,{}", tags.join(","))?;

        let mut curves = Vec::with_capacity(models.len());
        for model in &models {
            let curve = visibility_curve(*model, &input, &settings);
            let failed = curve.failed_count();
            total_failed += failed;
            println!(
                "{} at dx = {} um: {} points, {} failed",
                model.tag(),
                common::um_tag(dx),
                curve.len(),
                failed
            );

            let mut file: Vec<u8> = Vec::new();
            writeln!(file, "# command: aloof models")?;
            writeln!(file, "# config: {context}")?;
            write_curve_csv(&mut file, &curve, &input, &settings)?;
            let name = format!("curve_{}_dx{}um.csv", model.tag(), common::um_tag(dx));
            common::write_file(&args.out.join(name), &file)?;
            curves.push(curve);
        }

        for (i, &z) in curves[0].z_values.iter().enumerate() {
            write!(comparison, "{z:e}")?;
            for curve in &curves {
                match curve.statuses[i] {
                    PointStatus::Ok => write!(comparison, ",{:e}", curve.visibility_values[i])?,
                    PointStatus::Failed(_) => write!(comparison, ",nan")?,
                }
            }
            writeln!(comparison)?;
        }
    }
    common::write_file(&args.out.join("comparison.csv"), &comparison)?;
    println!(
        "wrote {} curve files and comparison.csv to {}",
        models.len() * separations.len(),
        args.out.display()
    );

    if total_failed > 0 {
        return Err(CliFailure::Convergence(format!(
            "{total_failed} grid points failed to evaluate; see the status columns"
        )));
    }
    Ok(())
}
