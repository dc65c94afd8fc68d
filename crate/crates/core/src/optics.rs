//! Transfer-matrix beamline optics: drift, biprism, quadrupole doublet
//! planes, ray tracing, and the two-beam path separation Δx at named
//! markers.
//!
//! The biprism is messy in matrix form: its column matrix divides by the
//! incoming slope. [`Beamline::trace`] therefore applies it as the exact
//! angle kick α → α ± γ, which coincides with the matrix action for any
//! nonzero slope and is its unique continuous extension at zero.

use std::f64::consts::PI;
use std::path::Path;

use thiserror::Error;

use crate::config::{self, ConfigError};

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("invalid beamline: {0}")]
    InvalidBeamline(String),
    #[error("no marker named '{0}' in the beamline")]
    UnknownMarker(String),
    #[error("biprism matrix is singular at zero incoming slope; trace applies the angle kick instead")]
    SingularBiprismMatrix,
    #[error("ray became non-finite after element '{0}'")]
    NonFiniteRay(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Paraxial ray: transverse offset and slope tan α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayState {
    pub x: f64,
    pub slope: f64,
}

impl RayState {
    pub fn new(x: f64, slope: f64) -> Self {
        Self { x, slope }
    }

    pub fn on_axis() -> Self {
        Self { x: 0.0, slope: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.slope.is_finite()
    }
}

/// Which side of the biprism filament the partial beam passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiprismSide {
    Plus,
    Minus,
}

impl BiprismSide {
    pub fn sign(self) -> f64 {
        match self {
            BiprismSide::Plus => 1.0,
            BiprismSide::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            BiprismSide::Plus => BiprismSide::Minus,
            BiprismSide::Minus => BiprismSide::Plus,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            BiprismSide::Plus => "+",
            BiprismSide::Minus => "-",
        }
    }
}

/// Base of the logarithm in the biprism deflection formula. The cylindrical
/// capacitor model behind it uses the natural log; decimal is kept as a
/// sensitivity knob only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Decimal,
}

impl LogBase {
    pub fn tag(self) -> &'static str {
        match self {
            LogBase::Natural => "natural",
            LogBase::Decimal => "decimal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpticalElement {
    Drift {
        length: f64,
    },
    Biprism {
        u_bp: f64,
        r_g: f64,
        r_bp: f64,
        side: BiprismSide,
    },
    /// Plane with the hyperbolic (defocusing-free) matrix.
    QuadrupoleFocus {
        u_q: f64,
        g0: f64,
        length: f64,
    },
    /// Plane with the trigonometric matrix.
    QuadrupoleDefocus {
        u_q: f64,
        g0: f64,
        length: f64,
    },
}

impl OpticalElement {
    pub fn validate(&self) -> Result<(), OpticsError> {
        let fail = |msg: String| Err(OpticsError::InvalidElement(msg));
        match *self {
            OpticalElement::Drift { length } => {
                if !(length >= 0.0) || !length.is_finite() {
                    return fail(format!("drift length must be >= 0, got {length}"));
                }
            }
            OpticalElement::Biprism { u_bp, r_g, r_bp, .. } => {
                if !u_bp.is_finite() {
                    return fail(format!("biprism voltage must be finite, got {u_bp}"));
                }
                if !(r_bp > 0.0) || !(r_g > r_bp) {
                    return fail(format!(
                        "biprism radii need r_g > r_bp > 0, got r_g = {r_g}, r_bp = {r_bp}"
                    ));
                }
            }
            OpticalElement::QuadrupoleFocus { u_q, g0, length }
            | OpticalElement::QuadrupoleDefocus { u_q, g0, length } => {
                if !(u_q >= 0.0) {
                    return fail(format!("quadrupole voltage must be >= 0, got {u_q}"));
                }
                if !(g0 > 0.0) || !(length > 0.0) {
                    return fail(format!(
                        "quadrupole needs g0 > 0 and length > 0, got g0 = {g0}, length = {length}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Longitudinal extent the element occupies.
    pub fn length(&self) -> f64 {
        match *self {
            OpticalElement::Drift { length } => length,
            OpticalElement::Biprism { .. } => 0.0,
            OpticalElement::QuadrupoleFocus { length, .. }
            | OpticalElement::QuadrupoleDefocus { length, .. } => length,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            OpticalElement::Drift { length } => format!("drift {length:.4e} m"),
            OpticalElement::Biprism { u_bp, side, .. } => {
                format!("biprism {u_bp:.4e} V side {}", side.tag())
            }
            OpticalElement::QuadrupoleFocus { u_q, .. } => {
                format!("quadrupole_focus {u_q:.4e} V")
            }
            OpticalElement::QuadrupoleDefocus { u_q, .. } => {
                format!("quadrupole_defocus {u_q:.4e} V")
            }
        }
    }
}

/// Biprism deflection angle γ = π/(2 log(r_g/r_bp)) · U_BP/U_beam.
pub fn biprism_deflection(
    u_bp: f64,
    r_g: f64,
    r_bp: f64,
    u_beam: f64,
    base: LogBase,
) -> f64 {
    let log_ratio = match base {
        LogBase::Natural => (r_g / r_bp).ln(),
        LogBase::Decimal => (r_g / r_bp).log10(),
    };
    PI / (2.0 * log_ratio) * u_bp / u_beam
}

/// Quadrupole strength k = sqrt(U_q/(g0² U_beam)).
fn quad_strength(u_q: f64, g0: f64, u_beam: f64) -> f64 {
    (u_q / (g0 * g0 * u_beam)).sqrt()
}

/// The element's 2x2 transfer matrix acting on (x, tan α).
///
/// The biprism form divides by the incoming slope, so that slope is a
/// parameter here and zero is an error; tracing uses the kick form instead.
pub fn element_matrix(
    element: &OpticalElement,
    u_beam: f64,
    incoming_slope: f64,
) -> Result<[[f64; 2]; 2], OpticsError> {
    element.validate()?;
    if !(u_beam > 0.0) {
        return Err(OpticsError::InvalidBeamline(format!(
            "beam voltage must be > 0, got {u_beam}"
        )));
    }
    Ok(match *element {
        OpticalElement::Drift { length } => [[1.0, length], [0.0, 1.0]],
        OpticalElement::QuadrupoleFocus { u_q, g0, length } => {
            let k = quad_strength(u_q, g0, u_beam);
            if k == 0.0 {
                [[1.0, length], [0.0, 1.0]]
            } else {
                let kl = k * length;
                [
                    [kl.cosh(), kl.sinh() / k],
                    [k * kl.sinh(), kl.cosh()],
                ]
            }
        }
        OpticalElement::QuadrupoleDefocus { u_q, g0, length } => {
            let k = quad_strength(u_q, g0, u_beam);
            if k == 0.0 {
                [[1.0, length], [0.0, 1.0]]
            } else {
                let kl = k * length;
                [
                    [kl.cos(), kl.sin() / k],
                    [-k * kl.sin(), kl.cos()],
                ]
            }
        }
        OpticalElement::Biprism { u_bp, r_g, r_bp, side } => {
            if incoming_slope == 0.0 {
                return Err(OpticsError::SingularBiprismMatrix);
            }
            let gamma = biprism_deflection(u_bp, r_g, r_bp, u_beam, LogBase::Natural);
            let outgoing = (incoming_slope.atan() + side.sign() * gamma).tan();
            [[1.0, 0.0], [0.0, outgoing / incoming_slope]]
        }
    })
}

pub fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn mat_apply(m: [[f64; 2]; 2], ray: RayState) -> RayState {
    RayState {
        x: m[0][0] * ray.x + m[0][1] * ray.slope,
        slope: m[1][0] * ray.x + m[1][1] * ray.slope,
    }
}

pub fn determinant(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// One slot in the ordered beamline: an optical element or a named probe
/// position.
#[derive(Debug, Clone, PartialEq)]
pub enum BeamlineEntry {
    Element(OpticalElement),
    Marker(String),
}

#[derive(Debug, Clone)]
pub struct Beamline {
    pub u_beam: f64,
    pub entries: Vec<BeamlineEntry>,
    pub gamma_log_base: LogBase,
}

/// Ray state after one entry, with the cumulative longitudinal position.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub label: String,
    pub is_marker: bool,
    pub position: f64,
    pub ray: RayState,
}

#[derive(Debug, Clone)]
pub struct TraceReport {
    pub steps: Vec<TraceStep>,
    pub warnings: Vec<String>,
}

impl TraceReport {
    pub fn at_marker(&self, name: &str) -> Option<RayState> {
        self.steps
            .iter()
            .find(|s| s.is_marker && s.label == name)
            .map(|s| s.ray)
    }

    pub fn final_ray(&self) -> RayState {
        self.steps.last().expect("trace always has a start step").ray
    }
}

impl Beamline {
    pub fn new(u_beam: f64, entries: Vec<BeamlineEntry>) -> Result<Self, OpticsError> {
        let line = Self {
            u_beam,
            entries,
            gamma_log_base: LogBase::default(),
        };
        line.validate()?;
        Ok(line)
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if !(self.u_beam > 0.0) || !self.u_beam.is_finite() {
            return Err(OpticsError::InvalidBeamline(format!(
                "beam voltage must be positive and finite, got {}",
                self.u_beam
            )));
        }
        let mut element_count = 0usize;
        let mut seen_markers: Vec<&str> = Vec::new();
        for entry in &self.entries {
            match entry {
                BeamlineEntry::Element(e) => {
                    e.validate()?;
                    element_count += 1;
                }
                BeamlineEntry::Marker(name) => {
                    if name.is_empty() {
                        return Err(OpticsError::InvalidBeamline(
                            "marker with empty name".to_string(),
                        ));
                    }
                    if seen_markers.contains(&name.as_str()) {
                        return Err(OpticsError::InvalidBeamline(format!(
                            "duplicate marker '{name}'"
                        )));
                    }
                    seen_markers.push(name);
                }
            }
        }
        if element_count == 0 {
            return Err(OpticsError::InvalidBeamline(
                "beamline has no optical elements".to_string(),
            ));
        }
        Ok(())
    }

    pub fn marker_names(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                BeamlineEntry::Marker(name) => Some(name.as_str()),
                _ => None,
            })
            .collect()
    }

    /// Copy with every biprism moved to the other side of the filament;
    /// this is the second partial beam.
    pub fn flipped(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|entry| match entry {
                BeamlineEntry::Element(OpticalElement::Biprism { u_bp, r_g, r_bp, side }) => {
                    BeamlineEntry::Element(OpticalElement::Biprism {
                        u_bp: *u_bp,
                        r_g: *r_g,
                        r_bp: *r_bp,
                        side: side.flipped(),
                    })
                }
                other => other.clone(),
            })
            .collect();
        Self {
            u_beam: self.u_beam,
            entries,
            gamma_log_base: self.gamma_log_base,
        }
    }

    /// Push a ray through every entry. Biprisms act as exact angle kicks;
    /// everything else by its transfer matrix.
    pub fn trace(&self, initial: RayState) -> Result<TraceReport, OpticsError> {
        self.validate()?;
        if !initial.is_finite() {
            return Err(OpticsError::NonFiniteRay("start".to_string()));
        }
        let mut steps = vec![TraceStep {
            label: "start".to_string(),
            is_marker: false,
            position: 0.0,
            ray: initial,
        }];
        let mut warnings = Vec::new();
        let mut ray = initial;
        let mut position = 0.0;
        for entry in &self.entries {
            match entry {
                BeamlineEntry::Marker(name) => {
                    steps.push(TraceStep {
                        label: name.clone(),
                        is_marker: true,
                        position,
                        ray,
                    });
                }
                BeamlineEntry::Element(element) => {
                    ray = match *element {
                        OpticalElement::Biprism { u_bp, r_g, r_bp, side } => {
                            let gamma = biprism_deflection(
                                u_bp,
                                r_g,
                                r_bp,
                                self.u_beam,
                                self.gamma_log_base,
                            );
                            RayState {
                                x: ray.x,
                                slope: (ray.slope.atan() + side.sign() * gamma).tan(),
                            }
                        }
                        OpticalElement::QuadrupoleDefocus { u_q, g0, length } => {
                            let kl = quad_strength(u_q, g0, self.u_beam) * length;
                            if kl > PI {
                                warnings.push(format!(
                                    "quadrupole_defocus k*l = {kl:.3} exceeds pi: the ray \
                                     crosses the axis inside the element"
                                ));
                            }
                            mat_apply(element_matrix(element, self.u_beam, ray.slope)?, ray)
                        }
                        _ => mat_apply(element_matrix(element, self.u_beam, ray.slope)?, ray),
                    };
                    position += element.length();
                    if !ray.is_finite() {
                        return Err(OpticsError::NonFiniteRay(element.label()));
                    }
                    steps.push(TraceStep {
                        label: element.label(),
                        is_marker: false,
                        position,
                        ray,
                    });
                }
            }
        }
        Ok(TraceReport { steps, warnings })
    }

    /// Trace the two partial beams from the axis: the beamline as
    /// configured and with all biprism sides flipped.
    pub fn trace_pair(&self) -> Result<(TraceReport, TraceReport), OpticsError> {
        let a = self.trace(RayState::on_axis())?;
        let b = self.flipped().trace(RayState::on_axis())?;
        Ok((a, b))
    }

    /// Δx = |x₊ − x₋| of the two partial beams at the marker.
    pub fn path_separation(&self, marker: &str) -> Result<f64, OpticsError> {
        let (a, b) = self.trace_pair()?;
        let ray_a = a
            .at_marker(marker)
            .ok_or_else(|| OpticsError::UnknownMarker(marker.to_string()))?;
        let ray_b = b.at_marker(marker).expect("flipped line has the same markers");
        Ok((ray_a.x - ray_b.x).abs())
    }

    /// The documented reference line: biprism splitting, a field-free
    /// region alongside the plate, one defocusing quadrupole plane, and the
    /// Wien filter centre. Geometry chosen to land Δx in the low-µm range.
    pub fn reference() -> Self {
        let entries = vec![
            BeamlineEntry::Element(OpticalElement::Drift { length: 0.05 }),
            BeamlineEntry::Element(OpticalElement::Biprism {
                u_bp: 0.35,
                r_g: 5e-3,
                r_bp: 300e-9,
                side: BiprismSide::Plus,
            }),
            BeamlineEntry::Element(OpticalElement::Drift { length: 0.03 }),
            BeamlineEntry::Marker("plate_entry".to_string()),
            BeamlineEntry::Element(OpticalElement::Drift { length: 0.01 }),
            BeamlineEntry::Marker("plate_exit".to_string()),
            BeamlineEntry::Element(OpticalElement::Drift { length: 0.02 }),
            BeamlineEntry::Element(OpticalElement::QuadrupoleDefocus {
                u_q: 4.0,
                g0: 2e-3,
                length: 0.02,
            }),
            BeamlineEntry::Element(OpticalElement::Drift { length: 0.12 }),
            BeamlineEntry::Marker("wien_center".to_string()),
        ];
        Self {
            u_beam: 1000.0,
            entries,
            gamma_log_base: LogBase::Natural,
        }
    }

    /// Load a beamline from TOML: top-level `u_beam_v`, optional
    /// `gamma_log` ("natural"/"decimal"), then an ordered `[[element]]`
    /// array with `kind` = drift | biprism | quadrupole_focus |
    /// quadrupole_defocus | marker.
    pub fn from_toml_path(path: &Path) -> Result<Self, OpticsError> {
        let table = config::load_toml(path)?;
        let context = path.display().to_string();
        let u_beam = config::get_f64(&table, &context, "u_beam_v")?;
        let gamma_log_base = match table.get("gamma_log") {
            None => LogBase::Natural,
            Some(toml::Value::String(s)) if s == "natural" => LogBase::Natural,
            Some(toml::Value::String(s)) if s == "decimal" => LogBase::Decimal,
            Some(_) => {
                return Err(OpticsError::InvalidBeamline(format!(
                    "{context}: gamma_log must be \"natural\" or \"decimal\""
                )))
            }
        };
        let raw_elements = match table.get("element") {
            Some(toml::Value::Array(items)) => items,
            Some(_) => {
                return Err(OpticsError::InvalidBeamline(format!(
                    "{context}: `element` must be an array of tables"
                )))
            }
            None => {
                return Err(OpticsError::InvalidBeamline(format!(
                    "{context}: no [[element]] entries"
                )))
            }
        };
        let mut entries = Vec::with_capacity(raw_elements.len());
        for (i, item) in raw_elements.iter().enumerate() {
            let element = match item {
                toml::Value::Table(t) => t,
                _ => {
                    return Err(OpticsError::InvalidBeamline(format!(
                        "{context}: element {i} is not a table"
                    )))
                }
            };
            let ectx = format!("{context} element {i}");
            let kind = config::get_str(element, &ectx, "kind")?;
            entries.push(match kind {
                "drift" => BeamlineEntry::Element(OpticalElement::Drift {
                    length: config::get_quantity(element, &ectx, "length", config::parse_length)?,
                }),
                "biprism" => {
                    let side = match config::get_str(element, &ectx, "side")? {
                        "+" | "plus" => BiprismSide::Plus,
                        "-" | "minus" => BiprismSide::Minus,
                        other => {
                            return Err(OpticsError::InvalidBeamline(format!(
                                "{ectx}: side must be + or -, got '{other}'"
                            )))
                        }
                    };
                    BeamlineEntry::Element(OpticalElement::Biprism {
                        u_bp: config::get_f64(element, &ectx, "u_bp_v")?,
                        r_g: config::get_quantity(element, &ectx, "r_g", config::parse_length)?,
                        r_bp: config::get_quantity(element, &ectx, "r_bp", config::parse_length)?,
                        side,
                    })
                }
                "quadrupole_focus" => BeamlineEntry::Element(OpticalElement::QuadrupoleFocus {
                    u_q: config::get_f64(element, &ectx, "u_q_v")?,
                    g0: config::get_quantity(element, &ectx, "g0", config::parse_length)?,
                    length: config::get_quantity(element, &ectx, "length", config::parse_length)?,
                }),
                "quadrupole_defocus" => {
                    BeamlineEntry::Element(OpticalElement::QuadrupoleDefocus {
                        u_q: config::get_f64(element, &ectx, "u_q_v")?,
                        g0: config::get_quantity(element, &ectx, "g0", config::parse_length)?,
                        length: config::get_quantity(
                            element,
                            &ectx,
                            "length",
                            config::parse_length,
                        )?,
                    })
                }
                "marker" => {
                    BeamlineEntry::Marker(config::get_str(element, &ectx, "name")?.to_string())
                }
                other => {
                    return Err(OpticsError::InvalidBeamline(format!(
                        "{ectx}: unknown kind '{other}'"
                    )))
                }
            });
        }
        Self::new(u_beam, entries).map(|mut line| {
            line.gamma_log_base = gamma_log_base;
            line
        })
    }
}
