use serde::{Deserialize, Serialize};

use super::sample::warp;
use super::{check_interp, Interp, Raster};
use crate::error::{Error, Result};

/// Affine map in physical (mm) coordinates about the volume centre:
/// `p' = linear * (p - c) + c + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine3 {
    pub linear: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl Default for Affine3 {
    fn default() -> Self {
        Affine3::identity()
    }
}

impl Affine3 {
    pub fn identity() -> Self {
        Affine3 {
            linear: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn uniform_scale(s: f64) -> Self {
        Affine3 {
            linear: [[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]],
            translation: [0.0; 3],
        }
    }

    /// Rotation in the xy plane, i.e. about the z (slice) axis.
    pub fn rotation_z_deg(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Affine3 {
            linear: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0; 3],
        }
    }

    pub fn translation_mm(t: [f64; 3]) -> Self {
        Affine3 {
            translation: t,
            ..Affine3::identity()
        }
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn after(&self, first: &Affine3) -> Affine3 {
        let linear = mat_mul(&self.linear, &first.linear);
        let moved = mat_vec(&self.linear, &first.translation);
        Affine3 {
            linear,
            translation: std::array::from_fn(|i| moved[i] + self.translation[i]),
        }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.linear;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<Affine3> {
        let det = self.determinant();
        if !(det.abs() > 1e-9) {
            return Err(Error::SingularAffine(det));
        }
        let m = &self.linear;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let inv = [
            [cof(1, 2, 1, 2) / det, -cof(0, 2, 1, 2) / det, cof(0, 1, 1, 2) / det],
            [-cof(1, 2, 0, 2) / det, cof(0, 2, 0, 2) / det, -cof(0, 1, 0, 2) / det],
            [cof(1, 2, 0, 1) / det, -cof(0, 2, 0, 1) / det, cof(0, 1, 0, 1) / det],
        ];
        let t = mat_vec(&inv, &self.translation);
        Ok(Affine3 {
            linear: inv,
            translation: [-t[0], -t[1], -t[2]],
        })
    }
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| a[i][k] * b[k][j]).sum()))
}

fn mat_vec(a: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|k| a[i][k] * v[k]).sum())
}

/// Backward-warps `img` through `t`: each output voxel takes the input value
/// at the inverse-mapped physical position. Dims and spacing are unchanged.
pub fn apply_affine<R: Raster>(img: &R, t: &Affine3, interp: Interp) -> Result<R> {
    check_interp::<R>(interp)?;
    let inv = t.inverse()?;
    let geom = *img.geometry();
    let c = geom.center_mm();
    let sp = geom.spacing;
    let src = img.samples();
    let data = warp(&src, &geom, &geom, interp, img.pad_value(), |idx| {
        let q: [f64; 3] = std::array::from_fn(|a| idx[a] as f64 * sp[a] - c[a]);
        let p = mat_vec(&inv.linear, &q);
        std::array::from_fn(|a| (p[a] + inv.translation[a] + c[a]) / sp[a])
    });
    Ok(R::from_samples(geom, data))
}
