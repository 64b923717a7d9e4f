//! Readers for CSV/XYZ point sets and PGM images, plus the matching writers.
//!
//! PGM pixel `(row, col)` of an image with `rows` rows lands at the
//! coordinates `(col, rows - 1 - row)`, so images keep their orientation with
//! the second axis pointing up.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::{Grid, Shape, ShapeData};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointFormat {
    Csv,
    Xyz,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomWeighting {
    /// Every atom weighs 1.
    #[default]
    Unit,
    /// Standard atomic masses.
    Mass,
}

impl FromStr for AtomWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(AtomWeighting::Unit),
            "mass" => Ok(AtomWeighting::Mass),
            other => Err(Error::InvalidArgument(format!("unknown atom weighting '{other}'"))),
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_points(
    path: &Path,
    format: PointFormat,
    dim: Option<usize>,
    weighting: AtomWeighting,
) -> Result<Shape> {
    let text = read_to_string(path)?;
    match format {
        PointFormat::Csv => parse_csv(&text, dim),
        PointFormat::Xyz => parse_xyz(&text, weighting),
    }
}

pub fn load_grid(path: &Path) -> Result<Shape> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let img = parse_pgm(&bytes)?;
    img.to_shape()
}

/// Parses one point per line: `d` coordinates and an optional trailing weight.
///
/// With `dim = Some(d)` a row has `d` or `d + 1` columns. Without it, every
/// column is a coordinate unless the header names the last column `w`,
/// `weight` or `mass`. A header is recognized by a non-numeric first token.
pub fn parse_csv(text: &str, dim: Option<usize>) -> Result<Shape> {
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    let mut width: Option<usize> = None;
    let mut header_weight = false;
    let mut seen_data = false;

    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if !seen_data && fields[0].parse::<f64>().is_err() {
            let last = fields.last().map(|s| s.to_ascii_lowercase()).unwrap_or_default();
            header_weight = matches!(last.as_str(), "w" | "weight" | "mass");
            seen_data = true;
            continue;
        }
        seen_data = true;
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("'{f}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;

        let n = values.len();
        match width {
            None => {
                if let Some(d) = dim {
                    if n != d && n != d + 1 {
                        return Err(Error::InconsistentDimension {
                            line: lineno,
                            expected: d,
                            found: n,
                        });
                    }
                }
                width = Some(n);
            }
            Some(w) if w != n => {
                return Err(Error::InconsistentDimension {
                    line: lineno,
                    expected: w,
                    found: n,
                })
            }
            _ => {}
        }
        let has_weight = match dim {
            Some(d) => n == d + 1,
            None => header_weight,
        };
        if has_weight {
            coords.extend_from_slice(&values[..n - 1]);
            weights.push(values[n - 1]);
        } else {
            coords.extend_from_slice(&values);
            weights.push(1.0);
        }
    }

    let width = width.ok_or(Error::Parse {
        line: 0,
        msg: "no data rows".into(),
    })?;
    let d = match dim {
        Some(d) => d,
        None if header_weight => width - 1,
        None => width,
    };
    if d == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "rows carry no coordinates".into(),
        });
    }
    Shape::from_points(d, coords, weights)
}

/// Standard atomic masses for the elements common in organic molecules.
pub fn atomic_mass(symbol: &str) -> Option<f64> {
    let m = match symbol {
        "H" => 1.008,
        "He" => 4.0026,
        "Li" => 6.94,
        "B" => 10.81,
        "C" => 12.011,
        "N" => 14.007,
        "O" => 15.999,
        "F" => 18.998,
        "Na" => 22.990,
        "Mg" => 24.305,
        "Al" => 26.982,
        "Si" => 28.085,
        "P" => 30.974,
        "S" => 32.06,
        "Cl" => 35.45,
        "K" => 39.098,
        "Ca" => 40.078,
        "Fe" => 55.845,
        "Cu" => 63.546,
        "Zn" => 65.38,
        "Se" => 78.971,
        "Br" => 79.904,
        "I" => 126.90,
        _ => return None,
    };
    Some(m)
}

/// Parses the `count / comment / element x y z` layout (first frame only).
pub fn parse_xyz(text: &str, weighting: AtomWeighting) -> Result<Shape> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, count_line) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let count: usize = count_line.trim().parse().map_err(|_| Error::Parse {
        line: 1,
        msg: format!("'{}' is not an atom count", count_line.trim()),
    })?;
    lines.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing comment line".into(),
    })?;

    let mut coords = Vec::with_capacity(3 * count);
    let mut weights = Vec::with_capacity(count);
    for _ in 0..count {
        let (lineno, line) = lines.next().ok_or(Error::Parse {
            line: 3 + weights.len(),
            msg: format!("expected {count} atoms, found {}", weights.len()),
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(Error::InconsistentDimension {
                line: lineno,
                expected: 4,
                found: fields.len(),
            });
        }
        for f in &fields[1..4] {
            coords.push(f.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("'{f}' is not a number"),
            })?);
        }
        let w = match weighting {
            AtomWeighting::Unit => 1.0,
            AtomWeighting::Mass => atomic_mass(fields[0]).ok_or_else(|| Error::Parse {
                line: lineno,
                msg: format!("no mass known for element '{}'", fields[0]),
            })?,
        };
        weights.push(w);
    }
    Shape::from_points(3, coords, weights)
}

/// Grayscale image, row-major from the top row.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub pixels: Vec<u32>,
}

impl GrayImage {
    /// Density on the lattice `(col, rows - 1 - row)` with unit spacing.
    pub fn to_shape(&self) -> Result<Shape> {
        if self.pixels.iter().all(|&p| p == 0) {
            return Err(Error::Degenerate("image is entirely black".into()));
        }
        let mut values = vec![0.0; self.width * self.height];
        for row in 0..self.height {
            let y = self.height - 1 - row;
            for col in 0..self.width {
                values[y * self.width + col] = self.pixels[row * self.width + col] as f64;
            }
        }
        Shape::from_grid(Grid {
            origin: vec![0.0, 0.0],
            spacing: vec![1.0, 1.0],
            extents: vec![self.width, self.height],
            values,
        })
    }

    /// Maps a 2D grid field (axis 0 = column, axis 1 = up) to pixels.
    ///
    /// Values are clipped to `[0, max]` when `clip` is set, divided by the
    /// largest value, raised to `1/gamma` and scaled to `maxval`.
    pub fn from_field(
        extents: [usize; 2],
        field: &[f64],
        maxval: u32,
        gamma: f64,
        clip: bool,
    ) -> Result<GrayImage> {
        let [width, height] = extents;
        if field.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "field has {} values for a {width}x{height} image",
                field.len()
            )));
        }
        let lo = if clip {
            0.0
        } else {
            field.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0)
        };
        let hi = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let mut pixels = vec![0u32; width * height];
        for row in 0..height {
            let y = height - 1 - row;
            for col in 0..width {
                let v = field[y * width + col];
                let t = if span > 0.0 {
                    ((v - lo) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                pixels[row * width + col] = (t.powf(1.0 / gamma) * maxval as f64).round() as u32;
            }
        }
        Ok(GrayImage {
            width,
            height,
            maxval,
            pixels,
        })
    }

    /// ASCII (P2) encoding.
    pub fn to_p2(&self) -> String {
        let mut out = format!("P2\n{} {}\n{}\n", self.width, self.height, self.maxval);
        for row in self.pixels.chunks(self.width.max(1)) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Parses P2 (ASCII) or P5 (binary) PGM with `maxval <= 65535`.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let mut line = 1usize;

    // Reads the next whitespace-delimited header token, skipping comments.
    let next_token = |pos: &mut usize, line: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                if bytes[*pos] == b'\n' {
                    *line += 1;
                }
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
            return Err(Error::Parse {
                line: *line,
                msg: "unexpected end of file".into(),
            });
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos, &mut line)?;
    if magic != "P2" && magic != "P5" {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unsupported magic '{magic}'"),
        });
    }
    let header_num = |what: &str, pos: &mut usize, line: &mut usize| -> Result<u32> {
        let tok = next_token(pos, line)?;
        tok.parse::<u32>().map_err(|_| Error::Parse {
            line: *line,
            msg: format!("bad {what} '{tok}'"),
        })
    };
    let width = header_num("width", &mut pos, &mut line)? as usize;
    let height = header_num("height", &mut pos, &mut line)? as usize;
    let maxval = header_num("maxval", &mut pos, &mut line)?;
    if width == 0 || height == 0 {
        return Err(Error::Parse {
            line,
            msg: "image has no pixels".into(),
        });
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Parse {
            line,
            msg: format!("maxval {maxval} outside 1..=65535"),
        });
    }

    let n = width * height;
    let mut pixels = Vec::with_capacity(n);
    if magic == "P2" {
        for _ in 0..n {
            let v = header_num("pixel", &mut pos, &mut line)?;
            if v > maxval {
                return Err(Error::Parse {
                    line,
                    msg: format!("pixel {v} exceeds maxval {maxval}"),
                });
            }
            pixels.push(v);
        }
    } else {
        // exactly one whitespace byte separates maxval from the raster
        pos += 1;
        let bpp = if maxval > 255 { 2 } else { 1 };
        let raster = bytes.get(pos..pos + n * bpp).ok_or(Error::Parse {
            line,
            msg: "raster is truncated".into(),
        })?;
        for chunk in raster.chunks_exact(bpp) {
            let v = if bpp == 2 {
                u32::from(chunk[0]) << 8 | u32::from(chunk[1])
            } else {
                u32::from(chunk[0])
            };
            pixels.push(v.min(maxval));
        }
    }
    Ok(GrayImage {
        width,
        height,
        maxval,
        pixels,
    })
}

/// Point set as CSV with a `x1,..,xd,w` header and a trailing weight column;
/// floats keep full precision.
pub fn points_to_csv(shape: &Shape) -> String {
    let s = shape.to_point_set();
    let mut header: Vec<String> = (1..=s.dim()).map(|i| format!("x{i}")).collect();
    header.push("w".into());
    let mut out = header.join(",") + "\n";
    if let ShapeData::Points { coords, weights } = s.data() {
        for (x, w) in coords.chunks_exact(s.dim()).zip(weights) {
            let mut fields: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
            fields.push(format!("{w:?}"));
            let _ = writeln!(out, "{}", fields.join(","));
        }
    }
    out
}

/// XYZ text for a 3D point set; every atom gets `element`.
pub fn points_to_xyz(shape: &Shape, element: &str, comment: &str) -> Result<String> {
    if shape.dim() != 3 {
        return Err(Error::DimensionMismatch("xyz output needs a 3D shape".into()));
    }
    let s = shape.to_point_set();
    let mut out = format!("{}\n{}\n", s.len(), comment);
    if let ShapeData::Points { coords, .. } = s.data() {
        for x in coords.chunks_exact(3) {
            let _ = writeln!(out, "{element} {:?} {:?} {:?}", x[0], x[1], x[2]);
        }
    }
    Ok(out)
}
