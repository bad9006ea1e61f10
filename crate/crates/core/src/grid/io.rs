//! Field files: one JSON header line, then raw little-endian `f64` values,
//! component-major, C-order, no padding.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Grid3, ScalarField, VectorField};
use crate::error::{Error, Result};

const VERSION: u32 = 1;
const DTYPE: &str = "f64le";
const ORDER: &str = "zyx-c";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    n: usize,
    box_len: f64,
    ncomp: usize,
    dtype: String,
    order: String,
}

/// Contents of a field file.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Scalar(ScalarField),
    Vector(VectorField),
}

fn encode(grid: Grid3, comps: &[&[f64]]) -> Vec<u8> {
    let header = Header {
        version: VERSION,
        n: grid.n(),
        box_len: grid.box_len(),
        ncomp: comps.len(),
        dtype: DTYPE.into(),
        order: ORDER.into(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    out.reserve(comps.len() * grid.len() * 8);
    for c in comps {
        for v in *c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(bytes)?;
    file.flush()?;
    Ok(())
}

pub fn save_field(f: &VectorField, path: impl AsRef<Path>) -> Result<()> {
    let [a, b, c] = f.components();
    write_bytes(path.as_ref(), &encode(f.grid(), &[a, b, c]))
}

pub fn save_scalar(f: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode(f.grid(), &[f.data()]))
}

/// Parses a field file from memory.
fn decode(bytes: &[u8]) -> Result<FieldData> {
    let nl = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("missing header line".into()))?;
    let header: Header = serde_json::from_slice(&bytes[..nl])
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
    if header.version != VERSION {
        return Err(Error::MalformedHeader(format!(
            "unsupported version {}",
            header.version
        )));
    }
    if header.dtype != DTYPE || header.order != ORDER {
        return Err(Error::MalformedHeader(format!(
            "unsupported layout {}/{}",
            header.dtype, header.order
        )));
    }
    if header.ncomp != 1 && header.ncomp != 3 {
        return Err(Error::MalformedHeader(format!(
            "ncomp must be 1 or 3, got {}",
            header.ncomp
        )));
    }
    let grid = Grid3::new(header.n, header.box_len)
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;

    let payload = &bytes[nl + 1..];
    let expected = header.ncomp * grid.len();
    if payload.len() % 8 != 0 || payload.len() / 8 != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: payload.len() / 8,
        });
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let len = grid.len();
    if header.ncomp == 1 {
        return Ok(FieldData::Scalar(ScalarField::from_raw(grid, values)));
    }
    let comps = [
        values[..len].to_vec(),
        values[len..2 * len].to_vec(),
        values[2 * len..].to_vec(),
    ];
    Ok(FieldData::Vector(VectorField::from_raw(grid, comps)))
}

pub fn read_field_file(path: impl AsRef<Path>) -> Result<FieldData> {
    decode(&fs::read(path)?)
}

/// Loads a 3-component field.
pub fn load_field(path: impl AsRef<Path>) -> Result<VectorField> {
    match read_field_file(path)? {
        FieldData::Vector(v) => Ok(v),
        FieldData::Scalar(_) => Err(Error::MalformedHeader(
            "expected a vector field (ncomp = 3)".into(),
        )),
    }
}

pub fn load_scalar(path: impl AsRef<Path>) -> Result<ScalarField> {
    match read_field_file(path)? {
        FieldData::Scalar(s) => Ok(s),
        FieldData::Vector(_) => Err(Error::MalformedHeader(
            "expected a scalar field (ncomp = 1)".into(),
        )),
    }
}
