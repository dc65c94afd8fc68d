//! End-to-end tests for the `aloof` binary: each subcommand is exercised
//! through a real process so exit codes, stdout, and file outputs are all
//! checked against the documented contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aloof_core::fringe::{FringeImage, ImageGeometry};
use aloof_core::pgm::save_image;
use tempfile::TempDir;

fn aloof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aloof"))
        .args(args)
        .output()
        .expect("failed to spawn aloof")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "unexpected exit code\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

/// Data rows of a CSV: everything that is not a `#` provenance line.
fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

/// Value of a `# key: value` provenance line.
fn provenance(csv: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key}: ");
    csv.lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()).map(str::to_owned))
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).expect("write config");
    path.to_str().expect("utf-8 path").to_owned()
}

const MODELS_CONFIG: &str = r#"
material = "silicon-n-doped"
models = ["markov", "finite_temperature", "anglin", "machnikowski", "howie"]
separations = ["9.4 um"]

[beam]
voltage_v = 1000.0
energy_spread_ev = 0.377

[geometry]
plate_length = "1 cm"
z_min = "5 um"
z_max = "40 um"
z_points = 6

[quadrature]
relative_tolerance = 1e-3
"#;

// -------------------------------------------------------------------------
// models

#[test]
fn models_comparison_has_one_column_per_model() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "models.toml", MODELS_CONFIG);
    let out_dir = dir.path().join("out");

    let out = aloof(&["models", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_exit(&out, 0);

    let comparison = read(&out_dir.join("comparison.csv"));
    let rows = data_rows(&comparison);
    assert_eq!(rows[0], "z_m,markov,finite_temperature,anglin,machnikowski,howie");
    assert_eq!(rows.len(), 1 + 6, "header plus one row per grid point");
    for row in &rows[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 6);
        for field in fields {
            let v: f64 = field.parse().expect("numeric field");
            assert!(v.is_finite());
        }
    }
    for tag in ["markov", "finite_temperature", "anglin", "machnikowski", "howie"] {
        assert!(out_dir.join(format!("curve_{tag}_dx9.4um.csv")).exists(), "missing {tag} curve");
    }
}

#[test]
fn models_zero_separation_gives_unit_visibility() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "models.toml", MODELS_CONFIG);
    let out_dir = dir.path().join("out");

    let out = aloof(&[
        "models",
        "--config",
        &config,
        "--dx",
        "0 um",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let comparison = read(&out_dir.join("comparison.csv"));
    for row in &data_rows(&comparison)[1..] {
        for field in row.split(',').skip(1) {
            let v: f64 = field.parse().expect("numeric field");
            assert_eq!(v, 1.0, "closed interferometer must keep full visibility");
        }
    }
}

#[test]
fn models_writes_one_curve_file_per_separation() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "models.toml", MODELS_CONFIG);
    let out_dir = dir.path().join("out");

    let out = aloof(&[
        "models",
        "--config",
        &config,
        "--material",
        "gold",
        "--model",
        "howie",
        "--dx",
        "9.3 um",
        "--dx",
        "6.5 um",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let first = read(&out_dir.join("curve_howie_dx9.3um.csv"));
    let second = read(&out_dir.join("curve_howie_dx6.5um.csv"));
    assert_eq!(provenance(&first, "material").as_deref(), Some("gold"));
    assert_eq!(provenance(&first, "separation_m").as_deref(), Some("9.3e-6"));
    assert_eq!(provenance(&second, "separation_m").as_deref(), Some("6.5e-6"));
    assert!(!out_dir.join("curve_howie_dx9.4um.csv").exists(), "--dx must override the config list");
}

#[test]
fn models_unknown_material_is_a_configuration_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "models.toml", MODELS_CONFIG);

    let out = aloof(&[
        "models",
        "--config",
        &config,
        "--material",
        "unobtainium",
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_exit(&out, 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unobtainium"), "stderr should name the material: {err}");
}

#[test]
fn models_output_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "models.toml", MODELS_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    assert_exit(&aloof(&["models", "--config", &config, "--out", out_a.to_str().unwrap()]), 0);
    assert_exit(&aloof(&["models", "--config", &config, "--out", out_b.to_str().unwrap()]), 0);

    for name in ["comparison.csv", "curve_markov_dx9.4um.csv", "curve_howie_dx9.4um.csv"] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

// -------------------------------------------------------------------------
// optics

#[test]
fn optics_reference_beamline_markers() {
    let dir = TempDir::new().unwrap();
    let out = aloof(&["optics", "--out", dir.path().to_str().unwrap()]);
    assert_exit(&out, 0);

    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("@wien_center"), "marker rows are tagged in the trace table");

    let markers = read(&dir.path().join("markers.csv"));
    let mut seen = 0;
    for row in &data_rows(&markers)[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        let separation: f64 = fields[2].parse().unwrap();
        match fields[0] {
            "plate_entry" => {
                assert!((separation - 3.3932887178667263e-6).abs() < 1e-12);
                seen += 1;
            }
            "plate_exit" => {
                assert!((separation - 4.524384957155635e-6).abs() < 1e-12);
                seen += 1;
            }
            "wien_center" => {
                assert!((separation - 3.3126430264028127e-6).abs() < 1e-12);
                seen += 1;
            }
            other => panic!("unexpected marker {other}"),
        }
    }
    assert_eq!(seen, 3);
}

#[test]
fn optics_separation_scales_linearly_with_biprism_voltage() {
    let dir = TempDir::new().unwrap();
    let template = |u_bp: f64| {
        format!(
            r#"
u_beam_v = 1000.0
gamma_log = "natural"

[[element]]
kind = "drift"
length = 0.05

[[element]]
kind = "biprism"
u_bp_v = {u_bp}
r_g = 5e-3
r_bp = 300e-9
side = "+"

[[element]]
kind = "drift"
length = 0.1

[[element]]
kind = "marker"
name = "screen"
"#
        )
    };

    let mut separations = Vec::new();
    for (name, u_bp) in [("one.toml", 0.35), ("two.toml", 0.70)] {
        let config = write_config(dir.path(), name, &template(u_bp));
        let out_dir = dir.path().join(name.trim_end_matches(".toml"));
        let out = aloof(&["optics", "--config", &config, "--out", out_dir.to_str().unwrap()]);
        assert_exit(&out, 0);
        let markers = read(&out_dir.join("markers.csv"));
        let row = data_rows(&markers)[1];
        separations.push(row.split(',').nth(2).unwrap().parse::<f64>().unwrap());
    }

    let ratio = separations[1] / separations[0];
    assert!((ratio - 2.0).abs() < 1e-6, "kick is linear in voltage, got ratio {ratio}");
}

#[test]
fn optics_bad_toml_is_a_configuration_error() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "broken.toml", "u_beam_v = [not, closed");
    let out = aloof(&["optics", "--config", &config]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: configuration:"));
}

// -------------------------------------------------------------------------
// wien

const WIEN_CONFIG: &str = r#"
separation_true = "2.9 um"
seed = 7

[beam]
voltage_v = 1000.0
energy_spread_ev = 0.377
energy_spread_sigma_ev = 0.040

[filter]
plate_length = "10 cm"
plate_gap = "5 mm"

[scan]
max_voltage_v = 5.0
points = 21
noise_fraction = 0.01
"#;

#[test]
fn wien_recovers_separation_from_noisy_scan() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "wien.toml", WIEN_CONFIG);
    let out = aloof(&["wien", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert_exit(&out, 0);

    let scan = read(&dir.path().join("wien_scan.csv"));
    let estimate: f64 = provenance(&scan, "separation_estimate_m").unwrap().parse().unwrap();
    let truth: f64 = provenance(&scan, "separation_true_m").unwrap().parse().unwrap();
    assert!(
        (estimate - truth).abs() / truth < 0.02,
        "1% scan noise should still recover the separation to 2%, got {estimate}"
    );
    assert_eq!(data_rows(&scan).len(), 1 + 21, "header plus one row per scan voltage");
}

#[test]
fn wien_noise_free_scan_recovers_separation_exactly() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        "wien.toml",
        &WIEN_CONFIG.replace("noise_fraction = 0.01", "noise_fraction = 0.0"),
    );
    let out = aloof(&["wien", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert_exit(&out, 0);

    let scan = read(&dir.path().join("wien_scan.csv"));
    let estimate: f64 = provenance(&scan, "separation_estimate_m").unwrap().parse().unwrap();
    let truth: f64 = provenance(&scan, "separation_true_m").unwrap().parse().unwrap();
    assert!(
        (estimate - truth).abs() / truth < 1e-10,
        "noise-free fit should be limited only by solver tolerance, got {estimate}"
    );
}

// -------------------------------------------------------------------------
// pipeline + analyze

const PIPELINE_CONFIG: &str = r#"
material = "silicon-n-doped"
model = "howie"
seed = 5

[beam]
voltage_v = 1000.0
energy_spread_ev = 0.377

[geometry]
plate_length = "1 cm"
separation = "9.4 um"
curve_points = 21

[image]
width = 128
height = 80
pixel_pitch_x = "0.1 um"
pixel_pitch_z = "0.5 um"
z_of_bottom_row = "40 um"
total_counts = 2e5

[fringe]
i0 = 100.0
contrast = 0.95
spacing = "0.8 um"
phase = 0.4
envelope_width = "100 um"

[analysis]
slab_height = "4 um"
normalize_band_height = "8 um"
"#;

#[test]
fn pipeline_writes_all_outputs_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "pipeline.toml", PIPELINE_CONFIG);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    let out = aloof(&["pipeline", "--config", &config, "--out", out_a.to_str().unwrap()]);
    assert_exit(&out, 0);
    for name in ["curve.csv", "image.pgm", "image.toml", "profile.csv", "comparison.csv"] {
        assert!(out_a.join(name).exists(), "missing {name}");
    }

    assert_exit(&aloof(&["pipeline", "--config", &config, "--out", out_b.to_str().unwrap()]), 0);
    let image_a = fs::read(out_a.join("image.pgm")).unwrap();
    let image_b = fs::read(out_b.join("image.pgm")).unwrap();
    assert_eq!(image_a, image_b, "same config and seed must give the identical image");
}

#[test]
fn analyze_reproduces_pipeline_profile() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "pipeline.toml", PIPELINE_CONFIG);
    let out_dir = dir.path().join("out");
    assert_exit(&aloof(&["pipeline", "--config", &config, "--out", out_dir.to_str().unwrap()]), 0);

    let image = out_dir.join("image.pgm");
    let out = aloof(&[
        "analyze",
        "--image",
        image.to_str().unwrap(),
        "--slab",
        "4 um",
        "--normalize-band",
        "8 um",
    ]);
    assert_exit(&out, 0);

    // Provenance differs (analyze does not know the model); the extracted
    // rows must match the pipeline byte for byte.
    let pipeline_rows = read(&out_dir.join("profile.csv"));
    let analyze_rows = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(data_rows(&pipeline_rows), data_rows(&analyze_rows));
}

#[test]
fn analyze_rejects_truncated_image() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "pipeline.toml", PIPELINE_CONFIG);
    let out_dir = dir.path().join("out");
    assert_exit(&aloof(&["pipeline", "--config", &config, "--out", out_dir.to_str().unwrap()]), 0);

    let bytes = fs::read(out_dir.join("image.pgm")).unwrap();
    let cut = dir.path().join("cut.pgm");
    fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
    fs::copy(out_dir.join("image.toml"), dir.path().join("cut.toml")).unwrap();

    let out = aloof(&["analyze", "--image", cut.to_str().unwrap()]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: configuration:"));
}

#[test]
fn analyze_flags_fringeless_image_as_degraded() {
    let dir = TempDir::new().unwrap();
    let geometry = ImageGeometry {
        width: 64,
        height: 40,
        pixel_pitch_x: 0.1e-6,
        pixel_pitch_z: 0.5e-6,
        z_of_bottom_row: 0.0,
    };
    let flat = FringeImage::from_counts(geometry, vec![50; 64 * 40]).unwrap();
    let path = dir.path().join("flat.pgm");
    save_image(&path, &flat, None).unwrap();

    let out = aloof(&["analyze", "--image", path.to_str().unwrap(), "--slab", "2 um"]);
    assert_exit(&out, 4);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: degraded output:"), "stderr: {err}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("no_periodicity"), "slabs should carry a flag: {stdout}");
}
