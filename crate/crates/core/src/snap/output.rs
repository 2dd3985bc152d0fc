use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{SnapError, SnapMap};
use crate::volume::{DistanceField, LobeLabelMap};

/// One row per center: `i,j,k,distance_mm,lobe_label,psi`. Missing
/// distance or lobe information is written as an empty field.
pub fn write_csv(
    map: &SnapMap,
    lobes: Option<&LobeLabelMap>,
    distance: Option<&DistanceField>,
    path: &Path,
) -> Result<(), SnapError> {
    let mut out = String::from("i,j,k,distance_mm,lobe_label,psi\n");
    for (c, psi) in map.centers.iter().zip(&map.psi) {
        let d = distance.and_then(|d| d.get(*c)).map(|d| d.to_string()).unwrap_or_default();
        let l = lobes.map(|l| l.get(*c).name()).unwrap_or_default();
        writeln!(out, "{},{},{},{d},{l},{psi}", c[0], c[1], c[2]).expect("writing to a String");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Scaling and file list written next to the slice images.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceSidecar {
    pub scaling: &'static str,
    /// ψ mapped to gray level 1.
    pub psi_min: f64,
    /// ψ mapped to gray level 255.
    pub psi_max: f64,
    /// Gray level of voxels that are not map centers.
    pub background: u8,
    pub width_axis: usize,
    pub height_axis: usize,
    pub files: Vec<SliceFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceFile {
    pub k: usize,
    pub file: String,
}

fn gray(psi: f64, lo: f64, hi: f64) -> u8 {
    if hi > lo {
        (1.0 + 254.0 * (psi - lo) / (hi - lo)).round().clamp(1.0, 255.0) as u8
    } else {
        128
    }
}

/// Binary PGM heatmap for every axial slice `k` that holds a center, plus
/// `slices.json` describing the min-max scaling.
pub fn write_slices(map: &SnapMap, dir: &Path) -> Result<SliceSidecar, SnapError> {
    fs::create_dir_all(dir)?;
    let lo = map.psi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = map.psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let [w, h, depth] = map.dims;
    let mut slices = vec![None::<Vec<u8>>; depth];
    for (c, &psi) in map.centers.iter().zip(&map.psi) {
        let img = slices[c[2]].get_or_insert_with(|| vec![0u8; w * h]);
        img[c[1] * w + c[0]] = gray(psi, lo, hi);
    }
    let mut files = Vec::new();
    for (k, img) in slices.into_iter().enumerate() {
        let Some(img) = img else { continue };
        let name = format!("slice_{k:04}.pgm");
        let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
        bytes.extend_from_slice(&img);
        fs::write(dir.join(&name), bytes)?;
        files.push(SliceFile { k, file: name });
    }
    let sidecar = SliceSidecar {
        scaling: "linear-min-max",
        psi_min: lo,
        psi_max: hi,
        background: 0,
        width_axis: 0,
        height_axis: 1,
        files,
    };
    fs::write(
        dir.join("slices.json"),
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )?;
    Ok(sidecar)
}
