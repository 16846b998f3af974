//! File formats: the native container, NIfTI-1 import and manifests.

pub mod manifest;
pub mod native;
pub mod nifti;

pub use manifest::{load_manifest, manifest_dir, save_manifest, Laterality, Manifest, Record, RecordKind, Variant};
pub use native::{
    read_all_native, read_mask, read_native, read_volume, write_all_native, write_mask, write_native, write_volume, Stored,
};
pub use nifti::{import_nifti1, import_nifti1_mask};

use std::path::Path;

use crate::error::Result;
use crate::volume::{AxisOrder, Mask, Volume};

fn resolve(dir: &Path, rec: &Record) -> std::path::PathBuf {
    let p = Path::new(&rec.path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

fn is_nifti(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("nii"))
}

/// Reads an image from a native or (by `.nii` extension) NIfTI-1 file.
pub fn load_volume_file(path: &Path) -> Result<Volume> {
    if is_nifti(path) {
        import_nifti1(path)
    } else {
        read_volume(path)
    }
}

/// Reads a mask from a native or (by `.nii` extension) NIfTI-1 file.
pub fn load_mask_file(path: &Path) -> Result<Mask> {
    if is_nifti(path) {
        import_nifti1_mask(path)
    } else {
        read_mask(path)
    }
}

/// Loads the image behind a manifest record, resolving relative paths
/// against `dir` and applying the record's axis order.
pub fn load_record_volume(dir: &Path, rec: &Record) -> Result<Volume> {
    let v = load_volume_file(&resolve(dir, rec))?;
    Ok(v.with_axis_order(rec.axis_order.unwrap_or(AxisOrder::AXIAL)))
}

/// Mask counterpart of [`load_record_volume`].
pub fn load_record_mask(dir: &Path, rec: &Record) -> Result<Mask> {
    let m = load_mask_file(&resolve(dir, rec))?;
    Ok(m.with_axis_order(rec.axis_order.unwrap_or(AxisOrder::AXIAL)))
}
