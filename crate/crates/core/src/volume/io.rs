//! JSON manifest + raw little-endian payload container.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{voxel_count, Dims, VolumeGrid};
use super::mask::{LobeLabelMap, RegionMask};
use super::VolumeError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dtype {
    #[serde(rename = "f32le")]
    F32Le,
    #[serde(rename = "u8")]
    U8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub dims: Dims,
    pub spacing_mm: [f64; 3],
    pub dtype: Dtype,
    /// Payload path relative to the manifest's directory.
    pub data: String,
}

fn payload_name(manifest: &Path) -> String {
    let stem = manifest
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "volume".into());
    format!("{stem}.raw")
}

fn write_manifest(path: &Path, manifest: &Manifest, payload: &[u8]) -> Result<(), VolumeError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(dir)?;
    }
    fs::write(dir.join(&manifest.data), payload)?;
    let json = serde_json::to_string_pretty(manifest)?;
    fs::write(path, json)?;
    Ok(())
}

/// Read a manifest and its payload bytes, checking the payload length.
pub fn read_manifest(path: &Path) -> Result<(Manifest, Vec<u8>), VolumeError> {
    let text = fs::read_to_string(path)?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let data_path: PathBuf = dir.join(&manifest.data);
    let bytes = fs::read(&data_path)?;
    let width = match manifest.dtype {
        Dtype::F32Le => 4,
        Dtype::U8 => 1,
    };
    let expected = voxel_count(manifest.dims) * width;
    if bytes.len() != expected {
        return Err(VolumeError::LengthMismatch {
            expected,
            got: bytes.len(),
        });
    }
    Ok((manifest, bytes))
}

pub fn f32le_bytes(values: &[f32]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn f32le_values(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

pub fn write_volume(path: &Path, grid: &VolumeGrid) -> Result<(), VolumeError> {
    let manifest = Manifest {
        dims: grid.dims(),
        spacing_mm: grid.spacing_mm(),
        dtype: Dtype::F32Le,
        data: payload_name(path),
    };
    write_manifest(path, &manifest, &f32le_bytes(grid.voxels()))
}

pub fn read_volume(path: &Path) -> Result<VolumeGrid, VolumeError> {
    let (m, bytes) = read_manifest(path)?;
    if m.dtype != Dtype::F32Le {
        return Err(VolumeError::WrongDtype(m.dtype));
    }
    VolumeGrid::new(m.dims, m.spacing_mm, f32le_values(&bytes))
}

pub fn write_mask(path: &Path, mask: &RegionMask, spacing_mm: [f64; 3]) -> Result<(), VolumeError> {
    let manifest = Manifest {
        dims: mask.dims(),
        spacing_mm,
        dtype: Dtype::U8,
        data: payload_name(path),
    };
    let payload: Vec<u8> = mask.bits().iter().map(|&b| b as u8).collect();
    write_manifest(path, &manifest, &payload)
}

pub fn read_mask(path: &Path) -> Result<RegionMask, VolumeError> {
    let (m, bytes) = read_manifest(path)?;
    if m.dtype != Dtype::U8 {
        return Err(VolumeError::WrongDtype(m.dtype));
    }
    let bits = bytes
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(VolumeError::InvalidLabel(other)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    RegionMask::from_bits(m.dims, bits)
}

pub fn write_lobes(path: &Path, lobes: &LobeLabelMap, spacing_mm: [f64; 3]) -> Result<(), VolumeError> {
    let manifest = Manifest {
        dims: lobes.dims(),
        spacing_mm,
        dtype: Dtype::U8,
        data: payload_name(path),
    };
    let payload: Vec<u8> = lobes.labels().iter().map(|l| l.code()).collect();
    write_manifest(path, &manifest, &payload)
}

pub fn read_lobes(path: &Path) -> Result<LobeLabelMap, VolumeError> {
    let (m, bytes) = read_manifest(path)?;
    if m.dtype != Dtype::U8 {
        return Err(VolumeError::WrongDtype(m.dtype));
    }
    LobeLabelMap::from_codes(m.dims, &bytes)
}
