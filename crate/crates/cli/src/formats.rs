//! On-disk JSON formats for functions, covers and verification reports.
//!
//! Floats are serialized as shortest-round-trip decimals, so
//! `parse(serialize(f))` reproduces every coefficient bit for bit and
//! identical runs produce byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gstrip_core::geom::{AffineFunc, Point};
use gstrip_core::gstrip::GenStrip;
use gstrip_core::polyfun::PolyhedralFunc;

use crate::CliError;

/// Widths may be claimed slightly below the recomputed sum to absorb
/// decimal round-off in hand-edited files.
pub const WIDTH_CLAIM_TOL: f64 = 1e-12;

/// A polyhedral function as data: `f(x) = max_i (<gradient_i, x> + offset_i)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FuncFile {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub pieces: Vec<PieceEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PieceEntry {
    pub gradient: Vec<f64>,
    pub offset: f64,
}

impl FuncFile {
    pub fn from_func(f: &PolyhedralFunc, name: Option<String>) -> FuncFile {
        FuncFile {
            dimension: f.dim(),
            name,
            pieces: f
                .pieces()
                .iter()
                .map(|p| PieceEntry {
                    gradient: p.gradient.as_slice().to_vec(),
                    offset: p.offset,
                })
                .collect(),
        }
    }

    pub fn to_func(&self) -> Result<PolyhedralFunc, CliError> {
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            if p.gradient.len() != self.dimension {
                return Err(CliError::parse(format!(
                    "piece gradient has {} coordinates, file declares dimension {}",
                    p.gradient.len(),
                    self.dimension
                )));
            }
            pieces.push(AffineFunc::new(Point::from_slice(&p.gradient), p.offset));
        }
        PolyhedralFunc::new(self.dimension, pieces).map_err(CliError::from)
    }
}

/// A strip cover as data: the claimed bound must not understate the sum
/// of the strips' width bounds, or the file is rejected at parse time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverFile {
    pub target: String,
    pub strips: Vec<FuncFile>,
    pub total_width_bound: f64,
}

impl CoverFile {
    pub fn from_strips(target: String, strips: &[GenStrip]) -> CoverFile {
        CoverFile {
            target,
            strips: strips
                .iter()
                .map(|s| FuncFile::from_func(s.func(), None))
                .collect(),
            total_width_bound: strips.iter().map(|s| s.width_bound()).sum(),
        }
    }

    /// Parses the strip entries and validates the claimed width bound.
    pub fn to_strips(&self) -> Result<Vec<GenStrip>, CliError> {
        let mut strips = Vec::with_capacity(self.strips.len());
        for entry in &self.strips {
            strips.push(GenStrip::new(entry.to_func()?));
        }
        let recomputed: f64 = strips.iter().map(|s| s.width_bound()).sum();
        if self.total_width_bound < recomputed - WIDTH_CLAIM_TOL {
            return Err(CliError::parse(format!(
                "claimed total width bound {} understates the recomputed sum {}",
                self.total_width_bound, recomputed
            )));
        }
        Ok(strips)
    }
}

pub fn read_func(path: &Path) -> Result<PolyhedralFunc, CliError> {
    let file: FuncFile = read_json(path)?;
    file.to_func()
}

pub fn read_cover(path: &Path) -> Result<(CoverFile, Vec<GenStrip>), CliError> {
    let file: CoverFile = read_json(path)?;
    let strips = file.to_strips()?;
    Ok((file, strips))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::parse(format!("cannot parse {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::parse(format!("cannot serialize: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::parse(format!("cannot write {}: {e}", path.display())))
}
