//! Process outcome taxonomy. The exit codes are part of the CLI contract:
//!
//! | code | meaning                                            |
//! |------|----------------------------------------------------|
//! | 0    | success                                            |
//! | 1    | anything else (I/O, internal)                      |
//! | 2    | configuration: flags, config files, input formats  |
//! | 3    | convergence: quadrature or fit did not converge    |
//! | 4    | degraded analysis: output written but flagged      |

use std::fmt;

use aloof_core::beam::BeamError;
use aloof_core::config::ConfigError;
use aloof_core::fringe::FringeError;
use aloof_core::geometry::GeometryError;
use aloof_core::material::MaterialError;
use aloof_core::models::ModelError;
use aloof_core::optics::OpticsError;
use aloof_core::pgm::PgmError;
use aloof_core::wien::WienError;

#[derive(Debug)]
pub enum CliFailure {
    Config(String),
    Convergence(String),
    Degraded(String),
    Other(String),
}

impl CliFailure {
    pub fn code(&self) -> u8 {
        match self {
            CliFailure::Other(_) => 1,
            CliFailure::Config(_) => 2,
            CliFailure::Convergence(_) => 3,
            CliFailure::Degraded(_) => 4,
        }
    }
}

impl fmt::Display for CliFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliFailure::Config(msg) => write!(f, "configuration: {msg}"),
            CliFailure::Convergence(msg) => write!(f, "convergence: {msg}"),
            CliFailure::Degraded(msg) => write!(f, "degraded output: {msg}"),
            CliFailure::Other(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<ConfigError> for CliFailure {
    fn from(e: ConfigError) -> Self {
        CliFailure::Config(e.to_string())
    }
}

impl From<MaterialError> for CliFailure {
    fn from(e: MaterialError) -> Self {
        CliFailure::Config(e.to_string())
    }
}

impl From<BeamError> for CliFailure {
    fn from(e: BeamError) -> Self {
        CliFailure::Config(e.to_string())
    }
}

impl From<GeometryError> for CliFailure {
    fn from(e: GeometryError) -> Self {
        CliFailure::Config(e.to_string())
    }
}

impl From<ModelError> for CliFailure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Quadrature(inner) => CliFailure::Convergence(inner.to_string()),
            other => CliFailure::Config(other.to_string()),
        }
    }
}

impl From<OpticsError> for CliFailure {
    fn from(e: OpticsError) -> Self {
        match e {
            OpticsError::NonFiniteRay(_) => CliFailure::Convergence(e.to_string()),
            other => CliFailure::Config(other.to_string()),
        }
    }
}

impl From<WienError> for CliFailure {
    fn from(e: WienError) -> Self {
        match e {
            WienError::InvalidFilter(_) | WienError::InvalidScan(_) => {
                CliFailure::Config(e.to_string())
            }
            WienError::ScanTooFlat(_) | WienError::Fit(_) => {
                CliFailure::Convergence(e.to_string())
            }
        }
    }
}

impl From<FringeError> for CliFailure {
    fn from(e: FringeError) -> Self {
        match e {
            FringeError::Fit(_) | FringeError::NoPeriodicity { .. } => {
                CliFailure::Convergence(e.to_string())
            }
            other => CliFailure::Config(other.to_string()),
        }
    }
}

impl From<PgmError> for CliFailure {
    fn from(e: PgmError) -> Self {
        CliFailure::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliFailure {
    fn from(e: std::io::Error) -> Self {
        CliFailure::Other(e.to_string())
    }
}
