//! JSON manifests and raw binary payloads for grid functions and families.
//!
//! Grid-function manifest:
//! `{"version":1, "dim":n, "shape":[...], "origin":[...], "spacing":h,
//!   "values": <path to .f64 file | inline array>}`
//!
//! Family manifest:
//! `{"version":1, "members":[{"label":..., "manifest": <path | inline>}]}`
//!
//! Binary payloads are raw little-endian binary64, row-major with the last
//! axis fastest. Relative paths resolve against the manifest that names them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{FunctionFamily, Grid, GridFunction};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValuesSource {
    Inline(Vec<f64>),
    Path(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridManifest {
    pub version: u32,
    pub dim: usize,
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: f64,
    pub values: ValuesSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MemberSource {
    Inline(GridManifest),
    Path(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberEntry {
    pub label: String,
    pub manifest: MemberSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyManifest {
    pub version: u32,
    pub members: Vec<MemberEntry>,
}

fn parse_error(path: &Path, message: impl ToString) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

/// Reads a raw little-endian binary64 payload.
pub fn read_f64_le(path: &Path) -> Result<Vec<f64>, Error> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(parse_error(
            path,
            format!("payload length {} is not a multiple of 8", bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Writes a raw little-endian binary64 payload.
pub fn write_f64_le(path: &Path, values: &[f64]) -> Result<(), Error> {
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn realize_member(
    manifest: &GridManifest,
    label: &str,
    base_dir: &Path,
    manifest_path: &Path,
) -> Result<GridFunction, Error> {
    if manifest.version != MANIFEST_VERSION {
        return Err(parse_error(
            manifest_path,
            format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                manifest.version
            ),
        ));
    }
    if manifest.dim != manifest.shape.len() || manifest.dim != manifest.origin.len() {
        return Err(parse_error(
            manifest_path,
            format!(
                "dim = {} does not match shape ({} axes) and origin ({} entries)",
                manifest.dim,
                manifest.shape.len(),
                manifest.origin.len()
            ),
        ));
    }
    let grid = Grid::new(
        manifest.shape.clone(),
        manifest.origin.clone(),
        manifest.spacing,
    )
    .map_err(|e| parse_error(manifest_path, e))?;

    let values = match &manifest.values {
        ValuesSource::Inline(v) => v.clone(),
        ValuesSource::Path(rel) => read_f64_le(&base_dir.join(rel))?,
    };
    if values.len() != grid.len() {
        return Err(Error::SizeMismatch {
            label: label.to_string(),
            expected: grid.len(),
            got: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue {
            label: label.to_string(),
            index,
        });
    }
    GridFunction::new(grid, values).map_err(|e| parse_error(manifest_path, e))
}

/// Loads a standalone grid-function manifest.
pub fn load_grid_function(path: &Path) -> Result<GridFunction, Error> {
    let text = fs::read_to_string(path)?;
    let manifest: GridManifest = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let label = path.display().to_string();
    realize_member(&manifest, &label, base_dir, path)
}

/// Loads a family manifest, resolving member manifests and payloads relative
/// to it. Every member is validated: payload size must match the shape
/// product and all values must be finite, with errors naming the member.
pub fn load_family(path: &Path) -> Result<FunctionFamily, Error> {
    let text = fs::read_to_string(path)?;
    let manifest: FamilyManifest = serde_json::from_str(&text).map_err(|e| parse_error(path, e))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(parse_error(
            path,
            format!(
                "unsupported family manifest version {} (expected {MANIFEST_VERSION})",
                manifest.version
            ),
        ));
    }
    if manifest.members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut members = Vec::with_capacity(manifest.members.len());
    for entry in &manifest.members {
        let function = match &entry.manifest {
            MemberSource::Inline(gm) => realize_member(gm, &entry.label, base_dir, path)?,
            MemberSource::Path(rel) => {
                let member_path = base_dir.join(rel);
                let member_text = fs::read_to_string(&member_path)?;
                let gm: GridManifest =
                    serde_json::from_str(&member_text).map_err(|e| parse_error(&member_path, e))?;
                let member_dir = member_path.parent().unwrap_or_else(|| Path::new("."));
                realize_member(&gm, &entry.label, member_dir, &member_path)?
            }
        };
        members.push((entry.label.clone(), function));
    }
    FunctionFamily::new(members)
}

/// Writes a family as a manifest plus one binary payload per member in
/// `dir`; returns the path of the family manifest.
pub fn save_family(family: &FunctionFamily, dir: &Path, name: &str) -> Result<PathBuf, Error> {
    fs::create_dir_all(dir)?;
    let grid = family.grid();
    let mut entries = Vec::with_capacity(family.len());
    for (i, (label, function)) in family.iter().enumerate() {
        let payload_name = format!("{name}_{i}.f64");
        write_f64_le(&dir.join(&payload_name), function.values())?;
        entries.push(MemberEntry {
            label: label.to_string(),
            manifest: MemberSource::Inline(GridManifest {
                version: MANIFEST_VERSION,
                dim: grid.dim(),
                shape: grid.shape().to_vec(),
                origin: grid.origin().to_vec(),
                spacing: grid.spacing(),
                values: ValuesSource::Path(payload_name),
            }),
        });
    }
    let manifest = FamilyManifest {
        version: MANIFEST_VERSION,
        members: entries,
    };
    let path = dir.join(format!("{name}.json"));
    fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).expect("serializable") + "\n",
    )?;
    Ok(path)
}
