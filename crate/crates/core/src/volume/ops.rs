use super::sample::warp;
use super::{check_interp, Anatomical, Axis, AxisOrder, Geometry, Interp, Raster, Volume};
use crate::error::{Error, Result};

/// Resamples onto an isotropic grid of `target_spacing_mm`.
///
/// Output voxel `i` sits at physical position `i * target_spacing_mm`, the
/// same frame as the input (voxel 0 at the origin). Output extent per axis is
/// `round(dim * spacing / target)`, at least 1.
pub fn resample_isotropic<R: Raster>(img: &R, target_spacing_mm: f64, interp: Interp) -> Result<R> {
    if !(target_spacing_mm.is_finite() && target_spacing_mm > 0.0) {
        return Err(Error::Parameter(format!(
            "target spacing must be positive, got {target_spacing_mm}"
        )));
    }
    check_interp::<R>(interp)?;
    let src_geom = *img.geometry();
    let t = target_spacing_mm;
    let dims: [usize; 3] = std::array::from_fn(|a| {
        ((src_geom.dims[a] as f64 * src_geom.spacing[a] / t).round() as usize).max(1)
    });
    let out_geom = Geometry {
        dims,
        spacing: [t; 3],
        axis_order: src_geom.axis_order,
    };
    let sp = src_geom.spacing;
    let src = img.samples();
    let data = warp(&src, &src_geom, &out_geom, interp, img.pad_value(), |idx| {
        std::array::from_fn(|a| idx[a] as f64 * t / sp[a])
    });
    Ok(R::from_samples(out_geom, data))
}

/// (offset into the source, low padding) for one axis.
fn crop_pad_axis(n: usize, target: usize) -> (usize, usize) {
    if target >= n {
        (0, (target - n) / 2)
    } else {
        ((n - target) / 2, 0)
    }
}

/// Centre-aligned crop and/or pad to `target_dims`.
///
/// Odd differences put the extra cropped or padded cell on the high-index
/// side. Padding uses [`Raster::pad_value`].
pub fn crop_or_pad<R: Raster>(img: &R, target_dims: [usize; 3]) -> Result<R> {
    if target_dims.contains(&0) {
        return Err(Error::Parameter(format!(
            "target dims must be positive, got {target_dims:?}"
        )));
    }
    let src_geom = *img.geometry();
    let out_geom = Geometry {
        dims: target_dims,
        ..src_geom
    };
    let plan: [(usize, usize); 3] = std::array::from_fn(|a| crop_pad_axis(src_geom.dims[a], target_dims[a]));
    let pad = img.pad_value();
    let src = img.samples();
    let mut out = vec![pad; out_geom.len()];
    for z in 0..target_dims[2] {
        for y in 0..target_dims[1] {
            for x in 0..target_dims[0] {
                let o = [x, y, z];
                let mut s = [0usize; 3];
                let mut inside = true;
                for a in 0..3 {
                    let (off, low) = plan[a];
                    let v = o[a] + off;
                    if v < low || v - low >= src_geom.dims[a] {
                        inside = false;
                        break;
                    }
                    s[a] = v - low;
                }
                if inside {
                    out[out_geom.index(x, y, z)] = src[src_geom.index(s[0], s[1], s[2])];
                }
            }
        }
    }
    Ok(R::from_samples(out_geom, out))
}

/// Reverses the raster along `axis`.
pub fn mirror<R: Raster>(img: &R, axis: Axis) -> R {
    let geom = *img.geometry();
    let a = axis.index();
    let n = geom.dims[a];
    let src = img.samples();
    let data = (0..geom.len())
        .map(|i| {
            let mut c = geom.coords(i);
            c[a] = n - 1 - c[a];
            src[geom.index(c[0], c[1], c[2])]
        })
        .collect();
    R::from_samples(geom, data)
}

/// Permutes axes so the axis order becomes [`AxisOrder::AXIAL`].
pub fn reorient_axial<R: Raster>(img: &R) -> R {
    let geom = *img.geometry();
    if geom.axis_order == AxisOrder::AXIAL {
        return img.clone();
    }
    // source axis feeding each output axis
    let from: [usize; 3] = std::array::from_fn(|a| geom.axis_order.axis_of(AxisOrder::AXIAL.axes()[a]).index());
    let out_geom = Geometry {
        dims: std::array::from_fn(|a| geom.dims[from[a]]),
        spacing: std::array::from_fn(|a| geom.spacing[from[a]]),
        axis_order: AxisOrder::AXIAL,
    };
    let src = img.samples();
    let data = (0..out_geom.len())
        .map(|i| {
            let o = out_geom.coords(i);
            let mut s = [0usize; 3];
            for a in 0..3 {
                s[from[a]] = o[a];
            }
            src[geom.index(s[0], s[1], s[2])]
        })
        .collect();
    R::from_samples(out_geom, data)
}

/// Splits along the left–right axis at `floor(n / 2)`.
///
/// The first half keeps indices `[0, n/2)`. The second half is mirrored along
/// the split axis so both halves share one orientation.
pub fn split_breasts<R: Raster>(img: &R) -> Result<(R, R)> {
    let geom = *img.geometry();
    let axis = geom.axis_order.axis_of(Anatomical::LeftRight);
    let a = axis.index();
    let n = geom.dims[a];
    if n < 2 {
        return Err(Error::Geometry(format!(
            "left-right extent {n} is too small to split"
        )));
    }
    let cut = n / 2;
    let src = img.samples();
    let half = |start: usize, len: usize| {
        let mut dims = geom.dims;
        dims[a] = len;
        let hg = Geometry { dims, ..geom };
        let data = (0..hg.len())
            .map(|i| {
                let mut c = hg.coords(i);
                c[a] += start;
                src[geom.index(c[0], c[1], c[2])]
            })
            .collect();
        R::from_samples(hg, data)
    };
    let left = half(0, cut);
    let right = mirror(&half(cut, n - cut), axis);
    Ok((left, right))
}

/// Affine min–max map onto `[0, 255]`; a constant volume maps to zeros.
pub fn normalize_u8(vol: &Volume) -> Volume {
    let (lo, hi) = vol.min_max();
    let geom = *vol.geometry();
    if !(hi > lo) {
        return Volume::from_samples(geom, vec![0.0; geom.len()]);
    }
    let lo = lo as f64;
    let scale = 255.0 / (hi as f64 - lo);
    let data = vol
        .data()
        .iter()
        .map(|&v| ((v as f64 - lo) * scale).clamp(0.0, 255.0) as f32)
        .collect();
    Volume::from_samples(geom, data)
}
