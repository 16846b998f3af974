use super::affine::{apply_affine, Affine3};
use super::ops::{crop_or_pad, mirror, reorient_axial, resample_isotropic, split_breasts};
use super::{Anatomical, Raster};
use crate::error::{Error, Result};

/// Isotropic spacing of preprocessed halves.
pub const PREPROCESS_SPACING_MM: f64 = 2.0;

/// Grid shape (x, y, z) of preprocessed halves.
pub const PREPROCESS_DIMS: [usize; 3] = [64, 128, 128];

/// Standard preprocessing: reorient to axial, optional uniform prescale about
/// the centre, split into halves, resample to 2 mm isotropic and crop/pad
/// to 64×128×128. Returns `(left, right)`; the right half is mirrored.
pub fn preprocess_volume<R: Raster>(img: &R, prescale: Option<f64>) -> Result<(R, R)> {
    preprocess_with(img, prescale, PREPROCESS_SPACING_MM, PREPROCESS_DIMS)
}

/// [`preprocess_volume`] with explicit spacing and output shape.
pub fn preprocess_with<R: Raster>(
    img: &R,
    prescale: Option<f64>,
    spacing_mm: f64,
    dims: [usize; 3],
) -> Result<(R, R)> {
    let axial = axial_prescaled(img, prescale)?;
    let (left, right) = split_breasts(&axial)?;
    Ok((finish(&left, spacing_mm, dims)?, finish(&right, spacing_mm, dims)?))
}

/// Preprocessing for a volume that already holds a single half. A right
/// half is mirrored along the left–right axis to match split output.
pub fn preprocess_half<R: Raster>(img: &R, prescale: Option<f64>, is_right: bool) -> Result<R> {
    let mut axial = axial_prescaled(img, prescale)?;
    if is_right {
        axial = mirror(&axial, axial.geometry().axis_order.axis_of(Anatomical::LeftRight));
    }
    finish(&axial, PREPROCESS_SPACING_MM, PREPROCESS_DIMS)
}

fn axial_prescaled<R: Raster>(img: &R, prescale: Option<f64>) -> Result<R> {
    let mut axial = reorient_axial(img);
    if let Some(s) = prescale {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Parameter(format!("prescale must lie in (0, 1], got {s}")));
        }
        if s != 1.0 {
            axial = apply_affine(&axial, &Affine3::uniform_scale(s), R::natural_interp())?;
        }
    }
    Ok(axial)
}

fn finish<R: Raster>(half: &R, spacing_mm: f64, dims: [usize; 3]) -> Result<R> {
    let iso = resample_isotropic(half, spacing_mm, R::natural_interp())?;
    crop_or_pad(&iso, dims)
}
