//! Plain-text configuration support.
//!
//! Config files are TOML. Physical quantities are either bare numbers (SI)
//! or strings with an explicit unit suffix, e.g. `"9.4 um"` or
//! `"1.5 ohm.cm"`. Unknown suffixes are rejected rather than guessed.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("TOML parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("{context}: missing key `{key}`")]
    MissingKey { context: String, key: String },
    #[error("{context}: key `{key}` has wrong type (expected {expected})")]
    WrongType {
        context: String,
        key: String,
        expected: &'static str,
    },
    #[error("bad quantity `{text}`: {reason}")]
    BadQuantity { text: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

/// Parse a length to metres. Accepts a bare number (already metres) or a
/// `<number> <unit>` string with unit in {m, mm, cm, um, µm, nm}.
pub fn parse_length(text: &str) -> Result<f64, ConfigError> {
    // Divisors, not multipliers: powers of ten up to 1e9 are exact in f64,
    // so 300 nm comes out as exactly 3e-7.
    parse_with_units(
        text,
        &[
            ("nm", 1e9),
            ("um", 1e6),
            ("µm", 1e6),
            ("mm", 1e3),
            ("cm", 1e2),
            ("m", 1.0),
        ],
        "length",
    )
}

/// Parse a resistivity to Ω·m. Bare numbers are Ω·m; `ohm.cm` is the one
/// accepted non-SI suffix since material tables usually quote it that way.
pub fn parse_resistivity(text: &str) -> Result<f64, ConfigError> {
    parse_with_units(text, &[("ohm.cm", 1e2), ("ohm.m", 1.0)], "resistivity")
}

fn parse_with_units(text: &str, units: &[(&str, f64)], what: &str) -> Result<f64, ConfigError> {
    // `units` maps suffix to the number of that unit per base unit.
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(ConfigError::BadQuantity {
            text: text.to_string(),
            reason: format!("empty {what}"),
        });
    }
    if let Ok(value) = trimmed.parse::<f64>() {
        return finite(value, text);
    }
    // Longest suffix first so "mm" is not eaten by "m".
    for (suffix, scale) in units {
        if let Some(number) = trimmed.strip_suffix(suffix) {
            let number = number.trim();
            let value = number.parse::<f64>().map_err(|_| ConfigError::BadQuantity {
                text: text.to_string(),
                reason: format!("`{number}` is not a number"),
            })?;
            return finite(value / scale, text);
        }
    }
    Err(ConfigError::BadQuantity {
        text: text.to_string(),
        reason: format!(
            "unknown {what} unit (accepted: {})",
            units
                .iter()
                .map(|(u, _)| *u)
                .collect::<Vec<_>>()
                .join(", ")
        ),
    })
}

fn finite(value: f64, text: &str) -> Result<f64, ConfigError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ConfigError::BadQuantity {
            text: text.to_string(),
            reason: "not finite".to_string(),
        })
    }
}

/// Read and parse a TOML file into a table.
pub fn load_toml(path: &std::path::Path) -> Result<toml::Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.parse::<toml::Table>().map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Numeric field, allowing integer or float TOML values.
pub fn get_f64(table: &toml::Table, context: &str, key: &str) -> Result<f64, ConfigError> {
    match table.get(key) {
        None => Err(ConfigError::MissingKey {
            context: context.to_string(),
            key: key.to_string(),
        }),
        Some(v) => as_f64(v).ok_or_else(|| ConfigError::WrongType {
            context: context.to_string(),
            key: key.to_string(),
            expected: "number",
        }),
    }
}

pub fn get_f64_opt(table: &toml::Table, context: &str, key: &str) -> Result<Option<f64>, ConfigError> {
    match table.get(key) {
        None => Ok(None),
        Some(v) => as_f64(v)
            .map(Some)
            .ok_or_else(|| ConfigError::WrongType {
                context: context.to_string(),
                key: key.to_string(),
                expected: "number",
            }),
    }
}

pub fn as_f64(v: &toml::Value) -> Option<f64> {
    match v {
        toml::Value::Float(x) => Some(*x),
        toml::Value::Integer(n) => Some(*n as f64),
        _ => None,
    }
}

/// Quantity field: bare number (SI) or unit-suffixed string.
pub fn get_quantity(
    table: &toml::Table,
    context: &str,
    key: &str,
    parse: fn(&str) -> Result<f64, ConfigError>,
) -> Result<f64, ConfigError> {
    match table.get(key) {
        None => Err(ConfigError::MissingKey {
            context: context.to_string(),
            key: key.to_string(),
        }),
        Some(toml::Value::String(s)) => parse(s),
        Some(v) => as_f64(v).ok_or_else(|| ConfigError::WrongType {
            context: context.to_string(),
            key: key.to_string(),
            expected: "number or unit string",
        }),
    }
}

pub fn get_str<'t>(table: &'t toml::Table, context: &str, key: &str) -> Result<&'t str, ConfigError> {
    match table.get(key) {
        None => Err(ConfigError::MissingKey {
            context: context.to_string(),
            key: key.to_string(),
        }),
        Some(toml::Value::String(s)) => Ok(s),
        Some(_) => Err(ConfigError::WrongType {
            context: context.to_string(),
            key: key.to_string(),
            expected: "string",
        }),
    }
}
