//! `aloof optics`: trace both partial beams through a beamline, print the
//! per-element ray table, and report the path separation at every marker.

use std::path::PathBuf;

use aloof_core::optics::{Beamline, TraceReport};
use clap::Args;

use crate::common;
use crate::failure::CliFailure;

#[derive(Args, Debug)]
pub struct OpticsArgs {
    /// Beamline TOML; the built-in reference line when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for trace.csv and markers.csv (the table always prints)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &OpticsArgs) -> Result<(), CliFailure> {
    let (line, source) = match &args.config {
        Some(path) => (Beamline::from_toml_path(path)?, path.display().to_string()),
        None => (Beamline::reference(), "built-in reference".to_string()),
    };
    let (plus, minus) = line.trace_pair()?;
    debug_assert_eq!(plus.steps.len(), minus.steps.len());

    println!("beamline: {source} (U_beam = {} V)", line.u_beam);
    println!(
        "{:<30} {:>12} {:>13} {:>13} {:>13} {:>13}",
        "step", "position_m", "x_plus_m", "slope_plus", "x_minus_m", "slope_minus"
    );
    for (a, b) in plus.steps.iter().zip(&minus.steps) {
        let label = if a.is_marker {
            format!("@{}", a.label)
        } else {
            a.label.clone()
        };
        println!(
            "{label:<30} {:>12.6} {:>13.4e} {:>13.4e} {:>13.4e} {:>13.4e}",
            a.position, a.ray.x, a.ray.slope, b.ray.x, b.ray.slope
        );
    }
    for warning in plus.warnings.iter().chain(&minus.warnings) {
        println!("warning: {warning}");
    }

    let markers = line.marker_names();
    let mut separations = Vec::with_capacity(markers.len());
    for marker in &markers {
        let sep = separation_at(&plus, &minus, marker)?;
        println!(
            "separation at {marker}: {sep:e} m ({} um)",
            common::um_tag(sep)
        );
        separations.push(sep);
    }

    if let Some(out) = &args.out {
        common::ensure_dir(out)?;
        use std::io::Write;

        let mut trace: Vec<u8> = Vec::new();
        writeln!(trace, "# command: aloof optics")?;
        writeln!(trace, "# source: {source}")?;
        writeln!(trace, "# cli_version: {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(trace, "# u_beam_v: {:e}", line.u_beam)?;
        writeln!(trace, "# gamma_log: {}", line.gamma_log_base.tag())?;
        writeln!(
            trace,
            "step,label,kind,position_m,x_plus_m,slope_plus,x_minus_m,slope_minus"
        )?;
        for (i, (a, b)) in plus.steps.iter().zip(&minus.steps).enumerate() {
            let kind = if i == 0 {
                "start"
            } else if a.is_marker {
                "marker"
            } else {
                "element"
            };
            writeln!(
                trace,
                "{i},{},{kind},{:e},{:e},{:e},{:e},{:e}",
                csv_safe(&a.label),
                a.position,
                a.ray.x,
                a.ray.slope,
                b.ray.x,
                b.ray.slope
            )?;
        }
        common::write_file(&out.join("trace.csv"), &trace)?;

        let mut marker_csv: Vec<u8> = Vec::new();
        writeln!(marker_csv, "# command: aloof optics")?;
        writeln!(marker_csv, "# source: {source}")?;
        writeln!(marker_csv, "# cli_version: {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(marker_csv, "# u_beam_v: {:e}", line.u_beam)?;
        writeln!(marker_csv, "marker,position_m,separation_m")?;
        for (marker, sep) in markers.iter().zip(&separations) {
            let position = plus
                .steps
                .iter()
                .find(|s| s.is_marker && s.label == *marker)
                .expect("marker came from this trace")
                .position;
            writeln!(marker_csv, "{},{position:e},{sep:e}", csv_safe(marker))?;
        }
        common::write_file(&out.join("markers.csv"), &marker_csv)?;
        println!("wrote trace.csv and markers.csv to {}", out.display());
    }
    Ok(())
}

fn separation_at(plus: &TraceReport, minus: &TraceReport, marker: &str) -> Result<f64, CliFailure> {
    let a = plus
        .at_marker(marker)
        .ok_or_else(|| CliFailure::Other(format!("marker '{marker}' missing from trace")))?;
    let b = minus
        .at_marker(marker)
        .ok_or_else(|| CliFailure::Other(format!("marker '{marker}' missing from trace")))?;
    Ok((a.x - b.x).abs())
}

/// Labels land in CSV cells; commas inside would shift columns.
fn csv_safe(label: &str) -> String {
    label.replace(',', ";")
}
