//! Binary PGM/PPM output with a CSV dump of the raw responses.
//!
//! Intensities are scaled symmetrically around zero: 0 maps to the
//! midpoint and the largest magnitude to an end of the range. A constant
//! image is written entirely at the midpoint.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::FilterImage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colormap {
    /// PGM (P5), black low, white high.
    Gray,
    /// PPM (P6), red low, white at 0, blue high.
    Diverging,
}

impl std::str::FromStr for Colormap {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gray" | "grey" | "pgm" => Ok(Colormap::Gray),
            "diverging" | "rwb" | "ppm" => Ok(Colormap::Diverging),
            other => Err(Error::InvalidArgument(format!("unknown colormap {other:?}"))),
        }
    }
}

impl Colormap {
    pub fn extension(self) -> &'static str {
        match self {
            Colormap::Gray => "pgm",
            Colormap::Diverging => "ppm",
        }
    }
}

/// Position in `[0, 1]` with 0 pinned at 0.5.
fn unit(value: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.5
    } else {
        (0.5 + 0.5 * value / scale).clamp(0.0, 1.0)
    }
}

fn to_byte(t: f64) -> u8 {
    (t * 255.0).round() as u8
}

fn diverging(t: f64) -> [u8; 3] {
    if t <= 0.5 {
        let w = to_byte(t / 0.5);
        [255, w, w]
    } else {
        let w = to_byte((1.0 - t) / 0.5);
        [w, w, 255]
    }
}

/// Writes the image (slices stacked vertically) to `path` and the raw values
/// to the same path with a `.csv` extension. Returns the CSV path.
pub fn write_image(img: &FilterImage, path: &Path, colormap: Colormap) -> Result<PathBuf> {
    let scale = if img.max == img.min { 0.0 } else { img.min.abs().max(img.max.abs()) };
    let rows = img.height * img.slices();
    let mut buf = Vec::new();
    match colormap {
        Colormap::Gray => {
            write!(buf, "P5\n{} {}\n255\n", img.width, rows).expect("vec write");
            buf.extend(img.values.iter().map(|&v| to_byte(unit(v, scale))));
        }
        Colormap::Diverging => {
            write!(buf, "P6\n{} {}\n255\n", img.width, rows).expect("vec write");
            for &v in &img.values {
                buf.extend_from_slice(&diverging(unit(v, scale)));
            }
        }
    }
    std::fs::write(path, &buf).map_err(|e| Error::io(path, e))?;

    let csv_path = path.with_extension("csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::Data(format!("{}: {e}", csv_path.display())))?;
    let err = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(["slice", "row", "col", "x", "y", "z", "value"]).map_err(err)?;
    for (s, &z) in img.slice_z.iter().enumerate() {
        for r in 0..img.height {
            for c in 0..img.width {
                w.write_record([
                    s.to_string(),
                    r.to_string(),
                    c.to_string(),
                    img.col_x(c).to_string(),
                    img.row_y(r).to_string(),
                    z.to_string(),
                    img.get(s, r, c).to_string(),
                ])
                .map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok(csv_path)
}
