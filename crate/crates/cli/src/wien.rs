//! `aloof wien`: synthesize a Wien-filter contrast scan at a known path
//! separation, extract the separation back out, and report truth, estimate,
//! and propagated uncertainty.

use std::path::PathBuf;

use aloof_core::config;
use aloof_core::wien::{synthesize_scan, wien_extract_separation, WienFilter};
use clap::Args;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common;
use crate::failure::CliFailure;

#[derive(Args, Debug)]
pub struct WienArgs {
    /// Scan configuration (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Noise seed, overriding the config
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for wien_scan.csv (the report always prints)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &WienArgs) -> Result<(), CliFailure> {
    let root = config::load_toml(&args.config)?;
    let context = args.config.display().to_string();

    let beam = common::beam_from_table(&root, &context)?;
    let beam_table = common::require_table(&root, &context, "beam")?;
    let bctx = format!("{context} [beam]");
    let spread_sigma_ev =
        config::get_f64_opt(beam_table, &bctx, "energy_spread_sigma_ev")?.unwrap_or(0.0);
    if !(spread_sigma_ev >= 0.0) {
        return Err(CliFailure::Config(format!(
            "{bctx}: energy_spread_sigma_ev must be nonnegative"
        )));
    }

    let filter_table = common::require_table(&root, &context, "filter")?;
    let fctx = format!("{context} [filter]");
    let plate_length = common::get_length(filter_table, &fctx, "plate_length")?;
    let plate_gap = common::get_length(filter_table, &fctx, "plate_gap")?;

    let scan_table = common::require_table(&root, &context, "scan")?;
    let sctx = format!("{context} [scan]");
    let max_voltage = config::get_f64(scan_table, &sctx, "max_voltage_v")?;
    let points = config::get_f64(scan_table, &sctx, "points")? as usize;
    let noise_fraction = config::get_f64_opt(scan_table, &sctx, "noise_fraction")?.unwrap_or(0.0);
    if points < 5 {
        return Err(CliFailure::Config(format!(
            "{sctx}: need at least 5 scan points, got {points}"
        )));
    }
    if !(max_voltage > 0.0) {
        return Err(CliFailure::Config(format!(
            "{sctx}: max_voltage_v must be positive"
        )));
    }
    if !(0.0..1.0).contains(&noise_fraction) {
        return Err(CliFailure::Config(format!(
            "{sctx}: noise_fraction must be in [0, 1)"
        )));
    }

    let dx_true = common::get_length(&root, &context, "separation_true")?;
    let seed = common::resolve_seed(args.seed, &root, &context)?;

    let wf = WienFilter::new(plate_length, plate_gap, max_voltage)?;
    let u_beam = beam.voltage();
    let l_c = beam.coherence_length();
    // l_c scales as 1/dE, so the fractional coherence-length uncertainty
    // equals the fractional energy-spread uncertainty to first order.
    let l_c_sigma = spread_sigma_ev / beam.energy_spread() * l_c;

    let voltages: Vec<f64> = (0..points)
        .map(|i| max_voltage * i as f64 / (points - 1) as f64)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scan = synthesize_scan(&wf, u_beam, dx_true, l_c, &voltages, noise_fraction, &mut rng);

    let extraction = wien_extract_separation(&scan, &wf, u_beam, l_c, l_c_sigma)?;
    let error_percent = (extraction.separation / dx_true - 1.0) * 100.0;
    let band = 2.0 * extraction.uncertainty / extraction.separation;

    println!("coherence length: {l_c:e} m (+/- {l_c_sigma:e})");
    println!("separation truth: {dx_true:e} m");
    println!(
        "separation estimate: {:e} m +/- {:e} m ({:+.2}% from truth)",
        extraction.separation, extraction.uncertainty, error_percent
    );
    println!("fractional uncertainty band (2 sigma): {:.1}%", band * 100.0);
    println!(
        "decay voltage U* = {:e} V +/- {:e} V, amplitude {:.4}",
        extraction.u_star, extraction.u_star_sigma, extraction.amplitude
    );

    if let Some(out) = &args.out {
        common::ensure_dir(out)?;
        use std::io::Write;
        let mut csv: Vec<u8> = Vec::new();
        writeln!(csv, "# command: aloof wien")?;
        writeln!(csv, "# config: {context}")?;
        writeln!(csv, "# cli_version: {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(csv, "# seed: {seed}")?;
        writeln!(csv, "# voltage_v: {:e}", beam.voltage())?;
        writeln!(csv, "# energy_spread_ev: {:e}", beam.energy_spread())?;
        writeln!(csv, "# energy_spread_sigma_ev: {spread_sigma_ev:e}")?;
        writeln!(csv, "# plate_length_m: {plate_length:e}")?;
        writeln!(csv, "# plate_gap_m: {plate_gap:e}")?;
        writeln!(csv, "# noise_fraction: {noise_fraction:e}")?;
        writeln!(csv, "# coherence_length_m: {l_c:e}")?;
        writeln!(csv, "# coherence_length_sigma_m: {l_c_sigma:e}")?;
        writeln!(csv, "# separation_true_m: {dx_true:e}")?;
        writeln!(csv, "# separation_estimate_m: {:e}", extraction.separation)?;
        writeln!(csv, "# separation_sigma_m: {:e}", extraction.uncertainty)?;
        writeln!(csv, "# u_star_v: {:e}", extraction.u_star)?;
        writeln!(csv, "# u_star_sigma_v: {:e}", extraction.u_star_sigma)?;
        writeln!(csv, "# amplitude: {:e}", extraction.amplitude)?;
        writeln!(csv, "u_v,contrast")?;
        for (u, c) in &scan {
            writeln!(csv, "{u:e},{c:e}")?;
        }
        common::write_file(&out.join("wien_scan.csv"), &csv)?;
        println!("wrote wien_scan.csv to {}", out.display());
    }
    Ok(())
}
