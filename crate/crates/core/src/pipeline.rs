//! Ingest -> center -> scale -> moments / Hermite coefficients.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{encode_with, EncodeOptions, HermiteCoeffs};
use crate::shape::{MomentSet, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// Divide by `sqrt(Tr(cov) / target)`; `None` means `target = dim`.
    Normalize { target: Option<f64> },
    /// Divide by a fixed `sigma`.
    Fixed(f64),
    Off,
}

impl Default for ScaleMode {
    fn default() -> Self {
        ScaleMode::Normalize { target: None }
    }
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalize" => Ok(ScaleMode::Normalize { target: None }),
            "off" => Ok(ScaleMode::Off),
            _ => {
                let bad = || Error::InvalidArgument(format!("bad scale mode '{s}'"));
                if let Some(v) = s.strip_prefix("fixed:") {
                    let sigma: f64 = v.parse().map_err(|_| bad())?;
                    if !(sigma > 0.0 && sigma.is_finite()) {
                        return Err(bad());
                    }
                    Ok(ScaleMode::Fixed(sigma))
                } else if let Some(v) = s.strip_prefix("normalize:") {
                    let t: f64 = v.parse().map_err(|_| bad())?;
                    if !(t > 0.0 && t.is_finite()) {
                        return Err(bad());
                    }
                    Ok(ScaleMode::Normalize { target: Some(t) })
                } else {
                    Err(bad())
                }
            }
        }
    }
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScaleMode::Normalize { target: None } => write!(f, "normalize"),
            ScaleMode::Normalize { target: Some(t) } => write!(f, "normalize:{t}"),
            ScaleMode::Fixed(s) => write!(f, "fixed:{s}"),
            ScaleMode::Off => write!(f, "off"),
        }
    }
}

/// A centered shape together with what was removed from it.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub shape: Shape,
    pub center: Vec<f64>,
    /// Divisor applied to centered coordinates (1 when scaling is off).
    pub scale: f64,
}

pub fn prepare(shape: &Shape, mode: ScaleMode) -> Result<Prepared> {
    let center = shape.center_of_mass();
    let centered = shape.center();
    let (shape, scale) = match mode {
        ScaleMode::Normalize { target } => {
            centered.scale_normalize_to(target.unwrap_or(shape.dim() as f64))?
        }
        ScaleMode::Fixed(sigma) => (centered.scale_fixed(sigma)?, sigma),
        ScaleMode::Off => (centered, 1.0),
    };
    Ok(Prepared {
        shape,
        center,
        scale,
    })
}

pub fn moments(shape: &Shape, mode: ScaleMode, order_max: usize) -> Result<(Prepared, MomentSet)> {
    let prepared = prepare(shape, mode)?;
    let m = prepared.shape.moments(order_max)?;
    Ok((prepared, m))
}

/// Normalize density, subtract center, rescale, then expand in the Hermite basis.
pub fn encode_shape(
    shape: &Shape,
    mode: ScaleMode,
    m: usize,
    options: EncodeOptions,
) -> Result<(Prepared, HermiteCoeffs)> {
    let prepared = prepare(shape, mode)?;
    let mut coeffs = encode_with(&prepared.shape, m, options)?;
    coeffs.scale = prepared.scale;
    coeffs.center = prepared.center.clone();
    Ok((prepared, coeffs))
}
