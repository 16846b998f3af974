//! Read-only import of single-file NIfTI-1 (`.nii`) volumes.
//!
//! Supports uint8, int16 and float32 payloads with exactly three spatial
//! dimensions, in either byte order. Orientation codes (qform/sform) are
//! ignored; axis semantics come from the dataset manifest.

use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{Geometry, Mask, Volume};

const HEADER_LEN: usize = 348;

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_FLOAT32: i16 = 16;

mod offset {
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const MAGIC: usize = 344;
}

struct Reader<'a> {
    bytes: &'a [u8],
    little: bool,
}

impl Reader<'_> {
    fn raw<const N: usize>(&self, at: usize) -> [u8; N] {
        let mut b: [u8; N] = self.bytes[at..at + N].try_into().unwrap();
        if !self.little {
            b.reverse();
        }
        b
    }

    fn i16(&self, at: usize) -> i16 {
        i16::from_le_bytes(self.raw(at))
    }

    fn f32(&self, at: usize) -> f32 {
        f32::from_le_bytes(self.raw(at))
    }
}

/// Parsed header fields needed for import.
#[derive(Debug, Clone, PartialEq)]
pub struct NiftiHeader {
    pub dims: [usize; 3],
    pub pixdim: [f64; 3],
    pub datatype: i16,
    pub vox_offset: usize,
    pub scl_slope: f32,
    pub scl_inter: f32,
    pub little_endian: bool,
}

pub fn parse_header(bytes: &[u8]) -> Result<NiftiHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "NIfTI header needs {HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    let little = if i32::from_le_bytes(bytes[0..4].try_into().unwrap()) == 348 {
        true
    } else if i32::from_be_bytes(bytes[0..4].try_into().unwrap()) == 348 {
        false
    } else {
        return Err(Error::Format("sizeof_hdr is not 348".into()));
    };
    let r = Reader { bytes, little };
    if &bytes[offset::MAGIC..offset::MAGIC + 4] != b"n+1\0" {
        return Err(Error::Format("not a single-file NIfTI-1 (magic n+1)".into()));
    }
    let ndim = r.i16(offset::DIM);
    if ndim != 3 {
        return Err(Error::Format(format!("expected 3 dimensions, header has {ndim}")));
    }
    let mut dims = [0usize; 3];
    for (a, d) in dims.iter_mut().enumerate() {
        let v = r.i16(offset::DIM + 2 * (a + 1));
        if v < 1 {
            return Err(Error::Format(format!("dim[{}] = {v}", a + 1)));
        }
        *d = v as usize;
    }
    let datatype = r.i16(offset::DATATYPE);
    let width = match datatype {
        DT_UINT8 => 8,
        DT_INT16 => 16,
        DT_FLOAT32 => 32,
        other => return Err(Error::UnsupportedDatatype(other)),
    };
    let bitpix = r.i16(offset::BITPIX);
    if bitpix != width {
        return Err(Error::Format(format!(
            "bitpix {bitpix} does not match datatype {datatype}"
        )));
    }
    let mut pixdim = [0f64; 3];
    for (a, p) in pixdim.iter_mut().enumerate() {
        let v = r.f32(offset::PIXDIM + 4 * (a + 1)).abs() as f64;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Format(format!("pixdim[{}] = {v}", a + 1)));
        }
        *p = v;
    }
    let vox = r.f32(offset::VOX_OFFSET);
    if !(vox.is_finite() && vox >= HEADER_LEN as f32) {
        return Err(Error::Format(format!("vox_offset {vox}")));
    }
    Ok(NiftiHeader {
        dims,
        pixdim,
        datatype,
        vox_offset: vox as usize,
        scl_slope: r.f32(offset::SCL_SLOPE),
        scl_inter: r.f32(offset::SCL_INTER),
        little_endian: little,
    })
}

/// Decodes a complete `.nii` byte buffer into a volume.
pub fn decode_nifti1(bytes: &[u8]) -> Result<Volume> {
    let h = parse_header(bytes)?;
    let n: usize = h.dims.iter().product();
    let width = match h.datatype {
        DT_UINT8 => 1,
        DT_INT16 => 2,
        _ => 4,
    };
    let end = h.vox_offset + n * width;
    if bytes.len() < end {
        return Err(Error::Format(format!(
            "payload truncated: need {end} bytes, file has {}",
            bytes.len()
        )));
    }
    let r = Reader {
        bytes: &bytes[h.vox_offset..end],
        little: h.little_endian,
    };
    let raw: Vec<f64> = (0..n)
        .map(|i| match h.datatype {
            DT_UINT8 => r.bytes[i] as f64,
            DT_INT16 => r.i16(2 * i) as f64,
            _ => r.f32(4 * i) as f64,
        })
        .collect();
    let scale = h.scl_slope != 0.0 && h.scl_slope.is_finite();
    let data: Vec<f32> = raw
        .into_iter()
        .map(|v| {
            if scale {
                (v * h.scl_slope as f64 + h.scl_inter as f64) as f32
            } else {
                v as f32
            }
        })
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("NIfTI payload contains non-finite values".into()));
    }
    Volume::from_geometry(Geometry::new(h.dims, h.pixdim)?, data)
}

pub fn import_nifti1(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_nifti1(&bytes)
}

/// Imports a label image as a mask; every nonzero voxel is foreground.
pub fn import_nifti1_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let v = import_nifti1(path)?;
    Mask::from_geometry(*v.geometry(), v.data().iter().map(|&x| (x != 0.0) as u8).collect())
}

#[cfg(test)]
pub(crate) mod fixture {
    //! Minimal reference writer used to build import fixtures.

    pub struct Fixture {
        pub dims: [i16; 3],
        pub pixdim: [f32; 3],
        pub datatype: i16,
        pub bitpix: i16,
        pub slope: f32,
        pub inter: f32,
        pub big_endian: bool,
        pub ndim: i16,
        pub payload: Vec<u8>,
    }

    impl Fixture {
        pub fn float32(dims: [i16; 3], pixdim: [f32; 3], values: &[f32]) -> Self {
            Fixture {
                dims,
                pixdim,
                datatype: 16,
                bitpix: 32,
                slope: 0.0,
                inter: 0.0,
                big_endian: false,
                ndim: 3,
                payload: values.iter().flat_map(|v| v.to_le_bytes()).collect(),
            }
        }

        pub fn bytes(&self) -> Vec<u8> {
            let mut h = vec![0u8; 352];
            let be = self.big_endian;
            let put16 = |h: &mut Vec<u8>, at: usize, v: i16| {
                let b = if be { v.to_be_bytes() } else { v.to_le_bytes() };
                h[at..at + 2].copy_from_slice(&b);
            };
            let put32 = |h: &mut Vec<u8>, at: usize, b: [u8; 4]| h[at..at + 4].copy_from_slice(&b);
            let f = |v: f32| if be { v.to_be_bytes() } else { v.to_le_bytes() };
            put32(&mut h, 0, if be { 348i32.to_be_bytes() } else { 348i32.to_le_bytes() });
            put16(&mut h, 40, self.ndim);
            for a in 0..3 {
                put16(&mut h, 42 + 2 * a, self.dims[a]);
            }
            put16(&mut h, 70, self.datatype);
            put16(&mut h, 72, self.bitpix);
            put32(&mut h, 76, f(1.0));
            for a in 0..3 {
                put32(&mut h, 80 + 4 * a, f(self.pixdim[a]));
            }
            put32(&mut h, 108, f(352.0));
            put32(&mut h, 112, f(self.slope));
            put32(&mut h, 116, f(self.inter));
            h[344..348].copy_from_slice(b"n+1\0");
            h.extend_from_slice(&self.payload);
            h
        }
    }
}
