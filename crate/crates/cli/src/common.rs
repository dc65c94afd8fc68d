//! Shared plumbing: material resolution, config-table helpers, and the
//! handful of formatting conventions every command uses.

use std::path::Path;

use aloof_core::beam::BeamParams;
use aloof_core::config::{self, ConfigError};
use aloof_core::material::Material;
use aloof_core::models::{ModelSettings, Retardation};
use aloof_core::response::PermittivityModel;

use crate::failure::CliFailure;

/// Resolve a material spec: a bundled name, a TOML file containing exactly
/// one `[material.<name>]` section, or `file#name` to pick one of several.
pub fn resolve_material(spec: &str) -> Result<Material, CliFailure> {
    if let Ok(m) = Material::bundled(spec) {
        return Ok(m);
    }
    if let Some((path, name)) = spec.rsplit_once('#') {
        return Ok(Material::load_named(Path::new(path), name)?);
    }
    let path = Path::new(spec);
    if path.exists() {
        let mut all = Material::load_all(path)?;
        return match all.len() {
            1 => Ok(all.remove(0)),
            n => Err(CliFailure::Config(format!(
                "{spec} defines {n} materials; pick one with {spec}#<name> (available: {})",
                all.iter()
                    .map(|m| m.name.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))),
        };
    }
    Err(CliFailure::Config(format!(
        "unknown material '{spec}': neither a bundled name (silicon-n-doped, gold) nor a file"
    )))
}

/// `[beam]` section: acceleration voltage and energy spread.
pub fn beam_from_table(root: &toml::Table, context: &str) -> Result<BeamParams, CliFailure> {
    let beam = require_table(root, context, "beam")?;
    let ctx = format!("{context} [beam]");
    Ok(BeamParams::new(
        config::get_f64(beam, &ctx, "voltage_v")?,
        config::get_f64(beam, &ctx, "energy_spread_ev")?,
    )?)
}

/// Optional `[quadrature]` section plus optional top-level `permittivity`,
/// `retardation`, and `phi_subdivisions` keys, over the library defaults.
/// A `--tol` override wins over the file.
pub fn settings_from_table(
    root: &toml::Table,
    context: &str,
    tol_override: Option<f64>,
) -> Result<ModelSettings, CliFailure> {
    let mut settings = ModelSettings::default();
    if let Some(value) = root.get("quadrature") {
        let table = as_table(value, context, "quadrature")?;
        let ctx = format!("{context} [quadrature]");
        if let Some(v) = config::get_f64_opt(table, &ctx, "relative_tolerance")? {
            settings.quadrature.relative_tolerance = v;
        }
        if let Some(v) = config::get_f64_opt(table, &ctx, "absolute_tolerance")? {
            settings.quadrature.absolute_tolerance = v;
        }
        if let Some(v) = config::get_f64_opt(table, &ctx, "max_subdivisions")? {
            settings.quadrature.max_subdivisions = v as usize;
        }
    }
    if let Some(tag) = optional_str(root, context, "permittivity")? {
        settings.permittivity = match tag {
            "ohmic" => PermittivityModel::Ohmic,
            "full_drude" => PermittivityModel::FullDrude,
            other => {
                return Err(CliFailure::Config(format!(
                    "{context}: permittivity must be ohmic or full_drude, got '{other}'"
                )))
            }
        };
    }
    if let Some(tag) = optional_str(root, context, "retardation")? {
        settings.retardation = match tag {
            "off" => Retardation::Off,
            "velocity_order" => Retardation::VelocityOrder,
            "full" => Retardation::Full,
            other => {
                return Err(CliFailure::Config(format!(
                    "{context}: retardation must be off, velocity_order or full, got '{other}'"
                )))
            }
        };
    }
    if let Some(v) = config::get_f64_opt(root, context, "phi_subdivisions")? {
        settings.phi_subdivisions = v as usize;
    }
    if let Some(tol) = tol_override {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(CliFailure::Config(format!(
                "--tol must be in (0, 1), got {tol}"
            )));
        }
        settings.quadrature.relative_tolerance = tol;
    }
    Ok(settings)
}

pub fn require_table<'t>(
    root: &'t toml::Table,
    context: &str,
    key: &str,
) -> Result<&'t toml::Table, CliFailure> {
    match root.get(key) {
        None => Err(ConfigError::MissingKey {
            context: context.to_string(),
            key: key.to_string(),
        }
        .into()),
        Some(value) => as_table(value, context, key),
    }
}

fn as_table<'t>(
    value: &'t toml::Value,
    context: &str,
    key: &str,
) -> Result<&'t toml::Table, CliFailure> {
    match value {
        toml::Value::Table(t) => Ok(t),
        _ => Err(ConfigError::WrongType {
            context: context.to_string(),
            key: key.to_string(),
            expected: "table",
        }
        .into()),
    }
}

pub fn optional_str<'t>(
    root: &'t toml::Table,
    context: &str,
    key: &str,
) -> Result<Option<&'t str>, CliFailure> {
    match root.get(key) {
        None => Ok(None),
        Some(_) => Ok(Some(config::get_str(root, context, key)?)),
    }
}

/// Length quantity accepted as a bare SI number or a unit-suffixed string.
pub fn get_length(table: &toml::Table, context: &str, key: &str) -> Result<f64, CliFailure> {
    Ok(config::get_quantity(
        table,
        context,
        key,
        config::parse_length,
    )?)
}

pub fn get_length_opt(
    table: &toml::Table,
    context: &str,
    key: &str,
) -> Result<Option<f64>, CliFailure> {
    match table.get(key) {
        None => Ok(None),
        Some(_) => get_length(table, context, key).map(Some),
    }
}

/// Array of length quantities (strings with units or bare SI numbers).
pub fn get_length_array(
    root: &toml::Table,
    context: &str,
    key: &str,
) -> Result<Vec<f64>, CliFailure> {
    let items = require_array(root, context, key)?;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let value = match item {
            toml::Value::String(s) => config::parse_length(s)?,
            other => config::as_f64(other).ok_or_else(|| {
                CliFailure::Config(format!(
                    "{context}: {key}[{i}] must be a number or unit string"
                ))
            })?,
        };
        out.push(value);
    }
    Ok(out)
}

pub fn get_string_array(
    root: &toml::Table,
    context: &str,
    key: &str,
) -> Result<Vec<String>, CliFailure> {
    let items = require_array(root, context, key)?;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        match item {
            toml::Value::String(s) => out.push(s.clone()),
            _ => {
                return Err(CliFailure::Config(format!(
                    "{context}: {key}[{i}] must be a string"
                )))
            }
        }
    }
    Ok(out)
}

fn require_array<'t>(
    root: &'t toml::Table,
    context: &str,
    key: &str,
) -> Result<&'t [toml::Value], CliFailure> {
    match root.get(key) {
        None => Err(ConfigError::MissingKey {
            context: context.to_string(),
            key: key.to_string(),
        }
        .into()),
        Some(toml::Value::Array(items)) => Ok(items),
        Some(_) => Err(ConfigError::WrongType {
            context: context.to_string(),
            key: key.to_string(),
            expected: "array",
        }
        .into()),
    }
}

/// Seed resolution: flag wins, then the config key, then zero.
pub fn resolve_seed(
    flag: Option<u64>,
    root: &toml::Table,
    context: &str,
) -> Result<u64, CliFailure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match root.get("seed") {
        None => Ok(0),
        Some(toml::Value::Integer(n)) if *n >= 0 => Ok(*n as u64),
        Some(toml::Value::String(s)) => s.parse::<u64>().map_err(|_| {
            CliFailure::Config(format!("{context}: seed '{s}' is not an unsigned integer"))
        }),
        Some(_) => Err(CliFailure::Config(format!(
            "{context}: seed must be a nonnegative integer"
        ))),
    }
}

pub fn ensure_dir(path: &Path) -> Result<(), CliFailure> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliFailure::Other(format!("cannot create {}: {e}", path.display())))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliFailure> {
    std::fs::write(path, bytes)
        .map_err(|e| CliFailure::Other(format!("cannot write {}: {e}", path.display())))
}

/// Micrometre tag for file names: `um_tag(9.4e-6)` is "9.4".
pub fn um_tag(length: f64) -> String {
    let text = format!("{:.6}", length * 1e6);
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn um_tags_are_short() {
        assert_eq!(um_tag(9.4e-6), "9.4");
        assert_eq!(um_tag(0.0), "0");
        assert_eq!(um_tag(6.5e-6), "6.5");
        assert_eq!(um_tag(1e-7), "0.1");
    }

    #[test]
    fn bundled_materials_resolve() {
        assert_eq!(resolve_material("gold").unwrap().name, "gold");
        assert!(matches!(
            resolve_material("unobtainium"),
            Err(CliFailure::Config(_))
        ));
    }
}
