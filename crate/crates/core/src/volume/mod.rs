//! Volume and mask carriers plus the geometric primitives built on them.
//!
//! Data is stored row-major with x fastest and z slowest:
//! `index = x + nx * (y + ny * z)`. Physical coordinates are
//! `index * spacing` in millimetres, with voxel 0 at the origin.

mod affine;
mod ops;
mod preprocess;
mod sample;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use affine::{apply_affine, Affine3};
pub use ops::{crop_or_pad, mirror, normalize_u8, reorient_axial, resample_isotropic, split_breasts};
pub use preprocess::{
    preprocess_half, preprocess_volume, preprocess_with, PREPROCESS_DIMS, PREPROCESS_SPACING_MM,
};

/// One of the three array axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Axis::ALL.get(i).copied()
    }
}

/// Anatomical direction carried by an array axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Anatomical {
    /// Left–right.
    #[serde(rename = "lr")]
    LeftRight,
    /// Anterior–posterior.
    #[serde(rename = "ap")]
    AnteriorPosterior,
    /// Inferior–superior.
    #[serde(rename = "is")]
    InferiorSuperior,
}

/// Anatomical meaning of the x, y and z array axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[Anatomical; 3]", into = "[Anatomical; 3]")]
pub struct AxisOrder([Anatomical; 3]);

impl AxisOrder {
    /// x = left–right, y = anterior–posterior, z = inferior–superior.
    pub const AXIAL: AxisOrder = AxisOrder([
        Anatomical::LeftRight,
        Anatomical::AnteriorPosterior,
        Anatomical::InferiorSuperior,
    ]);

    /// x = anterior–posterior, y = inferior–superior, z = left–right.
    pub const SAGITTAL: AxisOrder = AxisOrder([
        Anatomical::AnteriorPosterior,
        Anatomical::InferiorSuperior,
        Anatomical::LeftRight,
    ]);

    pub fn new(axes: [Anatomical; 3]) -> Result<Self> {
        let distinct = axes[0] != axes[1] && axes[1] != axes[2] && axes[0] != axes[2];
        if !distinct {
            return Err(Error::Geometry(format!(
                "axis order must be a permutation, got {axes:?}"
            )));
        }
        Ok(AxisOrder(axes))
    }

    pub fn axes(&self) -> [Anatomical; 3] {
        self.0
    }

    /// Array axis carrying the given anatomical direction.
    pub fn axis_of(&self, a: Anatomical) -> Axis {
        let i = self.0.iter().position(|&x| x == a).expect("permutation");
        Axis::from_index(i).expect("index < 3")
    }
}

impl Default for AxisOrder {
    fn default() -> Self {
        AxisOrder::AXIAL
    }
}

impl TryFrom<[Anatomical; 3]> for AxisOrder {
    type Error = Error;

    fn try_from(value: [Anatomical; 3]) -> Result<Self> {
        AxisOrder::new(value)
    }
}

impl From<AxisOrder> for [Anatomical; 3] {
    fn from(value: AxisOrder) -> Self {
        value.0
    }
}

/// Interpolation used when sampling at non-integer positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    Trilinear,
    Nearest,
}

/// Grid shape, voxel spacing and axis semantics shared by volumes and masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    #[serde(default)]
    pub axis_order: AxisOrder,
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        let g = Geometry {
            dims,
            spacing,
            axis_order: AxisOrder::AXIAL,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_axis_order(mut self, axis_order: AxisOrder) -> Self {
        self.axis_order = axis_order;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.contains(&0) {
            return Err(Error::Geometry(format!("zero extent in {:?}", self.dims)));
        }
        if self.spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::Geometry(format!(
                "spacing must be finite and positive, got {:?}",
                self.spacing
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    /// Physical centre of the grid in millimetres.
    pub fn center_mm(&self) -> [f64; 3] {
        std::array::from_fn(|a| (self.dims[a] as f64 - 1.0) * 0.5 * self.spacing[a])
    }

    /// Extents of a slice orthogonal to `axis`, as (fast, slow) in-slice axes.
    pub fn slice_axes(axis: Axis) -> (Axis, Axis) {
        match axis {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::X, Axis::Z),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }

    /// Flat indices of slice `k` orthogonal to `axis`, fast in-slice axis first.
    pub fn slice_indices(&self, axis: Axis, k: usize) -> Vec<usize> {
        let (u, v) = Geometry::slice_axes(axis);
        let (nu, nv) = (self.dims[u.index()], self.dims[v.index()]);
        let mut out = Vec::with_capacity(nu * nv);
        let mut c = [0usize; 3];
        c[axis.index()] = k;
        for j in 0..nv {
            c[v.index()] = j;
            for i in 0..nu {
                c[u.index()] = i;
                out.push(self.index(c[0], c[1], c[2]));
            }
        }
        out
    }
}

/// Scalar 3D image.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    geom: Geometry,
    data: Vec<f32>,
}

impl Volume {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<f32>) -> Result<Self> {
        Volume::from_geometry(Geometry::new(dims, spacing)?, data)
    }

    pub fn from_geometry(geom: Geometry, data: Vec<f32>) -> Result<Self> {
        geom.validate()?;
        if data.len() != geom.len() {
            return Err(Error::Data(format!(
                "payload has {} scalars, dims {:?} need {}",
                data.len(),
                geom.dims,
                geom.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite scalar at index {i}")));
        }
        Ok(Volume { geom, data })
    }

    /// Builds a volume by evaluating `f(x, y, z)` at every voxel index.
    pub fn from_fn(
        dims: [usize; 3],
        spacing: [f64; 3],
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let geom = Geometry::new(dims, spacing)?;
        let data = (0..geom.len())
            .map(|i| {
                let [x, y, z] = geom.coords(i);
                f(x, y, z)
            })
            .collect();
        Volume::from_geometry(geom, data)
    }

    pub fn filled(dims: [usize; 3], spacing: [f64; 3], value: f32) -> Result<Self> {
        let geom = Geometry::new(dims, spacing)?;
        Volume::from_geometry(geom, vec![value; geom.len()])
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geom.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.geom.spacing
    }

    pub fn axis_order(&self) -> AxisOrder {
        self.geom.axis_order
    }

    pub fn with_axis_order(mut self, order: AxisOrder) -> Self {
        self.geom.axis_order = order;
        self
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.geom.index(x, y, z)]
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Values of slice `k` orthogonal to `axis`, fast in-slice axis first.
    pub fn slice(&self, axis: Axis, k: usize) -> Vec<f32> {
        self.geom
            .slice_indices(axis, k)
            .into_iter()
            .map(|i| self.data[i])
            .collect()
    }

    /// Returns a copy with every value passed through `f`.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Volume> {
        Volume::from_geometry(self.geom, self.data.iter().map(|&v| f(v)).collect())
    }
}

/// Binary 3D mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    geom: Geometry,
    data: Vec<u8>,
}

// Geometry holds f64 spacing; equality on masks is still total because
// spacings are validated finite.
impl Eq for Geometry {}

impl Mask {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], data: Vec<u8>) -> Result<Self> {
        Mask::from_geometry(Geometry::new(dims, spacing)?, data)
    }

    pub fn from_geometry(geom: Geometry, data: Vec<u8>) -> Result<Self> {
        geom.validate()?;
        if data.len() != geom.len() {
            return Err(Error::Data(format!(
                "payload has {} values, dims {:?} need {}",
                data.len(),
                geom.dims,
                geom.len()
            )));
        }
        if let Some(i) = data.iter().position(|&v| v > 1) {
            return Err(Error::Data(format!(
                "mask value {} at index {i} is not binary",
                data[i]
            )));
        }
        Ok(Mask { geom, data })
    }

    pub fn from_fn(
        dims: [usize; 3],
        spacing: [f64; 3],
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let geom = Geometry::new(dims, spacing)?;
        let data = (0..geom.len())
            .map(|i| {
                let [x, y, z] = geom.coords(i);
                f(x, y, z) as u8
            })
            .collect();
        Mask::from_geometry(geom, data)
    }

    pub fn empty(geom: Geometry) -> Self {
        Mask {
            geom,
            data: vec![0; geom.len()],
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geom.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.geom.spacing
    }

    pub fn with_axis_order(mut self, order: AxisOrder) -> Self {
        self.geom.axis_order = order;
        self
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.geom.index(x, y, z)] != 0
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// True when every foreground voxel of `self` is foreground in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.geom.dims == other.geom.dims
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(&a, &b)| a == 0 || b != 0)
    }

    pub(crate) fn from_raw(geom: Geometry, data: Vec<u8>) -> Self {
        debug_assert_eq!(data.len(), geom.len());
        debug_assert!(data.iter().all(|&v| v <= 1));
        Mask { geom, data }
    }
}

/// Common interface of [`Volume`] and [`Mask`] for the geometric operations.
///
/// Masks round-trip through `f32` samples and are re-binarized on the way
/// back, so they can share every warping and cropping routine with volumes.
pub trait Raster: Clone + Sized {
    /// True for binary rasters, which only admit [`Interp::Nearest`].
    const BINARY: bool;

    fn geometry(&self) -> &Geometry;

    /// Interpolation used when the caller does not pick one.
    fn natural_interp() -> Interp {
        if Self::BINARY {
            Interp::Nearest
        } else {
            Interp::Trilinear
        }
    }

    /// Value used for voxels that fall outside the source grid.
    fn pad_value(&self) -> f32;

    fn samples(&self) -> Cow<'_, [f32]>;

    /// Rebuilds a raster from samples produced by a geometric operation.
    fn from_samples(geom: Geometry, data: Vec<f32>) -> Self;
}

impl Raster for Volume {
    const BINARY: bool = false;

    fn geometry(&self) -> &Geometry {
        &self.geom
    }

    fn pad_value(&self) -> f32 {
        self.min_max().0
    }

    fn samples(&self) -> Cow<'_, [f32]> {
        Cow::Borrowed(&self.data)
    }

    fn from_samples(geom: Geometry, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), geom.len());
        Volume { geom, data }
    }
}

impl Raster for Mask {
    const BINARY: bool = true;

    fn geometry(&self) -> &Geometry {
        &self.geom
    }

    fn pad_value(&self) -> f32 {
        0.0
    }

    fn samples(&self) -> Cow<'_, [f32]> {
        Cow::Owned(self.data.iter().map(|&v| v as f32).collect())
    }

    fn from_samples(geom: Geometry, data: Vec<f32>) -> Self {
        Mask::from_raw(geom, data.into_iter().map(|v| (v >= 0.5) as u8).collect())
    }
}

pub(crate) fn check_interp<R: Raster>(interp: Interp) -> Result<()> {
    if R::BINARY && interp != Interp::Nearest {
        return Err(Error::MaskInterpolation);
    }
    Ok(())
}
