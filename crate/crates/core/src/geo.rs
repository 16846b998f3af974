//! Geometric augmentation: random uniform scaling, in-plane rotation and
//! translation.
//!
//! The transform is composed as scale, then rotation about the slice (z)
//! axis, then translation, all about the physical volume centre.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{apply_affine, Affine3, Raster};

/// Ranges for geometric augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoConfig {
    /// Uniform scale factor range.
    pub scale_range: [f64; 2],
    /// Rotation range in degrees about the slice axis.
    pub rot_range_deg: [f64; 2],
    /// Maximum |translation| along x and y, in mm.
    pub trans_inplane_mm: f64,
    /// Maximum |translation| along z, in mm.
    pub trans_slice_mm: f64,
}

impl Default for GeoConfig {
    fn default() -> Self {
        GeoConfig {
            scale_range: [0.8, 1.2],
            rot_range_deg: [-5.0, 5.0],
            trans_inplane_mm: 10.0,
            trans_slice_mm: 5.0,
        }
    }
}

impl GeoConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = self
            .scale_range
            .iter()
            .chain(&self.rot_range_deg)
            .chain([&self.trans_inplane_mm, &self.trans_slice_mm])
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Parameter("geometric ranges must be finite".into()));
        }
        if self.scale_range[0] > self.scale_range[1] || self.rot_range_deg[0] > self.rot_range_deg[1] {
            return Err(Error::Parameter("range lower bound exceeds upper bound".into()));
        }
        if self.scale_range[0] <= 0.0 {
            return Err(Error::Parameter("scale range must be positive".into()));
        }
        if self.trans_inplane_mm < 0.0 || self.trans_slice_mm < 0.0 {
            return Err(Error::Parameter("translation maxima must be non-negative".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: &GeoParams) -> bool {
        let within = |v: f64, r: [f64; 2]| v >= r[0] && v <= r[1];
        within(p.scale, self.scale_range)
            && within(p.rot_deg, self.rot_range_deg)
            && p.trans_mm[0].abs() <= self.trans_inplane_mm
            && p.trans_mm[1].abs() <= self.trans_inplane_mm
            && p.trans_mm[2].abs() <= self.trans_slice_mm
    }
}

/// One concrete geometric draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoParams {
    pub scale: f64,
    pub rot_deg: f64,
    /// (tx, ty, tz) in mm; tz is along the slice axis.
    pub trans_mm: [f64; 3],
}

impl Default for GeoParams {
    fn default() -> Self {
        GeoParams {
            scale: 1.0,
            rot_deg: 0.0,
            trans_mm: [0.0; 3],
        }
    }
}

impl GeoParams {
    pub fn to_affine(&self) -> Affine3 {
        Affine3::translation_mm(self.trans_mm)
            .after(&Affine3::rotation_z_deg(self.rot_deg))
            .after(&Affine3::uniform_scale(self.scale))
    }

    /// Parameters of the exact inverse transform, in the same
    /// scale → rotate → translate form.
    pub fn inverse(&self) -> GeoParams {
        let (s, c) = (-self.rot_deg).to_radians().sin_cos();
        let [tx, ty, tz] = self.trans_mm;
        let k = self.scale;
        GeoParams {
            scale: 1.0 / k,
            rot_deg: -self.rot_deg,
            trans_mm: [-(c * tx - s * ty) / k, -(s * tx + c * ty) / k, -tz / k],
        }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

/// Draws each parameter uniformly from its range.
pub fn sample_geo_params<R: Rng + ?Sized>(rng: &mut R, cfg: &GeoConfig) -> GeoParams {
    let scale = uniform(rng, cfg.scale_range[0], cfg.scale_range[1]);
    let rot_deg = uniform(rng, cfg.rot_range_deg[0], cfg.rot_range_deg[1]);
    let tx = uniform(rng, -cfg.trans_inplane_mm, cfg.trans_inplane_mm);
    let ty = uniform(rng, -cfg.trans_inplane_mm, cfg.trans_inplane_mm);
    let tz = uniform(rng, -cfg.trans_slice_mm, cfg.trans_slice_mm);
    GeoParams {
        scale,
        rot_deg,
        trans_mm: [tx, ty, tz],
    }
}

/// Applies `p` to a volume (trilinear) or mask (nearest).
pub fn geo_transform<R: Raster>(img: &R, p: &GeoParams) -> Result<R> {
    apply_affine(img, &p.to_affine(), R::natural_interp())
}
