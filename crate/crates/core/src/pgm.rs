//! Binary PGM (P5) image files plus a TOML sidecar carrying the physical
//! geometry that the pixel grid alone cannot express.
//!
//! PGM stores rows top-first while [`FringeImage`] keeps row 0 at the
//! bottom; save and load both flip so the pair is a clean round trip.
//! Counts above the 16-bit maxval are clamped on save.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::config::{self, ConfigError};
use crate::fringe::{FringeImage, ImageGeometry};

const MAXVAL: u32 = 65_535;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a binary PGM: {0}")]
    Format(String),
    #[error("truncated pixel data: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error(transparent)]
    Sidecar(#[from] ConfigError),
    #[error("inconsistent image: {0}")]
    Image(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PgmError + '_ {
    move |source| PgmError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Image restored from disk together with the sidecar metadata that is not
/// derivable from the pixels.
#[derive(Debug)]
pub struct LoadedImage {
    pub image: FringeImage,
    pub seed: Option<u64>,
    pub total_counts: Option<f64>,
}

/// Write `image` as 16-bit binary PGM and its geometry as a TOML sidecar
/// next to it (same stem, `.toml` extension).
pub fn save_image(pgm_path: &Path, image: &FringeImage, seed: Option<u64>) -> Result<(), PgmError> {
    let g = *image.geometry();
    let mut data = Vec::with_capacity(64 + 2 * g.width * g.height);
    write!(data, "P5\n{} {}\n{}\n", g.width, g.height, MAXVAL).expect("vec write");
    for r in (0..g.height).rev() {
        for &c in image.row(r) {
            let sample = c.min(MAXVAL) as u16;
            data.extend_from_slice(&sample.to_be_bytes());
        }
    }
    std::fs::write(pgm_path, &data).map_err(io_err(pgm_path))?;

    let sidecar_path = pgm_path.with_extension("toml");
    let mut sidecar = String::new();
    sidecar.push_str(&format!("width = {}\n", g.width));
    sidecar.push_str(&format!("height = {}\n", g.height));
    sidecar.push_str(&format!("pixel_pitch_x_m = {:e}\n", g.pixel_pitch_x));
    sidecar.push_str(&format!("pixel_pitch_z_m = {:e}\n", g.pixel_pitch_z));
    sidecar.push_str(&format!("z_of_bottom_row_m = {:e}\n", g.z_of_bottom_row));
    sidecar.push_str(&format!("total_counts = {:e}\n", image.total_counts() as f64));
    // Seeds can exceed i64, so they travel as strings.
    if let Some(s) = seed {
        sidecar.push_str(&format!("seed = \"{s}\"\n"));
    }
    std::fs::write(&sidecar_path, sidecar).map_err(io_err(&sidecar_path))?;
    Ok(())
}

/// Pull the next header token, skipping whitespace and `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String, PgmError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(PgmError::Format("unexpected end of header".to_string()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize, PgmError> {
    let token = next_token(bytes, pos)?;
    token
        .parse::<usize>()
        .map_err(|_| PgmError::Format(format!("bad {what}: {token:?}")))
}

/// Read a binary PGM and its sidecar back into a [`FringeImage`].
pub fn load_image(pgm_path: &Path) -> Result<LoadedImage, PgmError> {
    let mut bytes = Vec::new();
    std::fs::File::open(pgm_path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(pgm_path))?;

    let mut pos = 0usize;
    let magic = next_token(&bytes, &mut pos)?;
    if magic != "P5" {
        return Err(PgmError::Format(format!("magic is {magic:?}, want \"P5\"")));
    }
    let width = header_number(&bytes, &mut pos, "width")?;
    let height = header_number(&bytes, &mut pos, "height")?;
    let maxval = header_number(&bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > MAXVAL as usize {
        return Err(PgmError::Format(format!("maxval {maxval} out of range")));
    }
    // Exactly one whitespace byte separates the maxval from the samples.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(PgmError::Format(
            "missing whitespace after maxval".to_string(),
        ));
    }
    pos += 1;

    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let expected = width * height * bytes_per_sample;
    let data = &bytes[pos..];
    if data.len() < expected {
        return Err(PgmError::Truncated {
            expected,
            got: data.len(),
        });
    }

    let sidecar_path = pgm_path.with_extension("toml");
    let table = config::load_toml(&sidecar_path)?;
    let context = sidecar_path.display().to_string();
    let sc_width = config::get_f64(&table, &context, "width")? as usize;
    let sc_height = config::get_f64(&table, &context, "height")? as usize;
    if sc_width != width || sc_height != height {
        return Err(PgmError::Image(format!(
            "sidecar says {sc_width}x{sc_height}, PGM header says {width}x{height}"
        )));
    }
    let geometry = ImageGeometry {
        width,
        height,
        pixel_pitch_x: config::get_f64(&table, &context, "pixel_pitch_x_m")?,
        pixel_pitch_z: config::get_f64(&table, &context, "pixel_pitch_z_m")?,
        z_of_bottom_row: config::get_f64(&table, &context, "z_of_bottom_row_m")?,
    };
    let total_counts = config::get_f64_opt(&table, &context, "total_counts")?;
    let seed = match table.get("seed") {
        None => None,
        Some(_) => {
            let text = config::get_str(&table, &context, "seed")?;
            Some(text.parse::<u64>().map_err(|_| {
                PgmError::Image(format!("seed {text:?} is not an unsigned integer"))
            })?)
        }
    };

    let mut counts = vec![0u32; width * height];
    for file_row in 0..height {
        let internal_row = height - 1 - file_row;
        for j in 0..width {
            let idx = (file_row * width + j) * bytes_per_sample;
            let value = if bytes_per_sample == 2 {
                u16::from_be_bytes([data[idx], data[idx + 1]]) as u32
            } else {
                data[idx] as u32
            };
            counts[internal_row * width + j] = value;
        }
    }
    let image = FringeImage::from_counts(geometry, counts)
        .map_err(|e| PgmError::Image(e.to_string()))?;
    Ok(LoadedImage {
        image,
        seed,
        total_counts,
    })
}
