//! The native `VAUG` container.
//!
//! Little-endian layout:
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 4     | magic `VAUG`                            |
//! | 2     | version (u16) = 1                       |
//! | 1     | dtype: 0 = u8, 1 = i16, 2 = f32         |
//! | 1     | kind: 0 = image, 1 = mask               |
//! | 12    | dims nx, ny, nz (u32 each)              |
//! | 24    | spacing sx, sy, sz in mm (f64 each)     |
//! | ...   | payload, row-major, x fastest, z slowest |
//!
//! Volumes are written as f32 and masks as u8, so a write/read round trip is
//! bit-exact. Records can be concatenated in one stream.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::{Geometry, Mask, Volume};

pub const MAGIC: [u8; 4] = *b"VAUG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 44;

/// Scalar type of a stored payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Dtype {
    U8 = 0,
    I16 = 1,
    F32 = 2,
}

impl Dtype {
    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Dtype::U8),
            1 => Ok(Dtype::I16),
            2 => Ok(Dtype::F32),
            other => Err(Error::Format(format!("unknown dtype code {other}"))),
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::I16 => 2,
            Dtype::F32 => 4,
        }
    }
}

/// Contents of one native record.
#[derive(Debug, Clone, PartialEq)]
pub enum Stored {
    Volume(Volume),
    Mask(Mask),
}

impl Stored {
    pub fn geometry(&self) -> &Geometry {
        match self {
            Stored::Volume(v) => v.geometry(),
            Stored::Mask(m) => m.geometry(),
        }
    }
}

impl From<Volume> for Stored {
    fn from(v: Volume) -> Self {
        Stored::Volume(v)
    }
}

impl From<Mask> for Stored {
    fn from(m: Mask) -> Self {
        Stored::Mask(m)
    }
}

fn write_header<W: Write>(w: &mut W, dtype: Dtype, kind: u8, geom: &Geometry) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[dtype as u8, kind])?;
    for d in geom.dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for s in geom.spacing {
        w.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

/// Serializes one record to `w`.
pub fn encode<W: Write>(w: &mut W, item: &Stored) -> Result<()> {
    let geom = item.geometry();
    if geom.dims.iter().any(|&d| d > u32::MAX as usize) {
        return Err(Error::Format(format!("dims {:?} exceed u32", geom.dims)));
    }
    let res = match item {
        Stored::Volume(v) => write_header(w, Dtype::F32, 0, geom).and_then(|_| {
            let mut buf = Vec::with_capacity(v.data().len() * 4);
            for x in v.data() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            w.write_all(&buf)
        }),
        Stored::Mask(m) => write_header(w, Dtype::U8, 1, geom).and_then(|_| w.write_all(m.data())),
    };
    res.map_err(|e| Error::Format(format!("write failed: {e}")))
}

/// Reads one record from `r`. Returns `Ok(None)` at a clean end of stream.
pub fn decode<R: Read>(r: &mut R) -> Result<Option<Stored>> {
    let mut header = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let n = r
            .read(&mut header[got..])
            .map_err(|e| Error::Format(format!("read failed: {e}")))?;
        if n == 0 {
            break;
        }
        got += n;
    }
    if got == 0 {
        return Ok(None);
    }
    if got < 4 || header[..4] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    if got < HEADER_LEN {
        return Err(Error::Format(format!("truncated header ({got} of {HEADER_LEN} bytes)")));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dtype = Dtype::from_code(header[6])?;
    let kind = header[7];
    if kind > 1 {
        return Err(Error::Format(format!("unknown kind code {kind}")));
    }
    let dims: [usize; 3] = std::array::from_fn(|a| {
        let o = 8 + 4 * a;
        u32::from_le_bytes(header[o..o + 4].try_into().unwrap()) as usize
    });
    let spacing: [f64; 3] = std::array::from_fn(|a| {
        let o = 20 + 8 * a;
        f64::from_le_bytes(header[o..o + 8].try_into().unwrap())
    });
    let geom = Geometry::new(dims, spacing)?;
    let bytes = dims
        .iter()
        .try_fold(dtype.width(), |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format(format!("dims {dims:?} overflow")))?;
    let mut payload = vec![0u8; bytes];
    r.read_exact(&mut payload)
        .map_err(|_| Error::Format(format!("truncated payload: expected {} bytes", payload.len())))?;
    let values: Vec<f32> = match dtype {
        Dtype::U8 => payload.iter().map(|&b| b as f32).collect(),
        Dtype::I16 => payload
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32)
            .collect(),
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("payload contains non-finite values".into()));
    }
    let item = if kind == 1 {
        if values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Format("mask payload is not binary".into()));
        }
        Stored::Mask(Mask::from_geometry(geom, values.into_iter().map(|v| v as u8).collect())?)
    } else {
        Stored::Volume(Volume::from_geometry(geom, values)?)
    };
    Ok(Some(item))
}

pub fn write_native(path: impl AsRef<Path>, item: &Stored) -> Result<()> {
    write_all_native(path, std::slice::from_ref(item))
}

/// Writes several records back to back into one file.
pub fn write_all_native(path: impl AsRef<Path>, items: &[Stored]) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for item in items {
        encode(&mut w, item)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_native(path: impl AsRef<Path>) -> Result<Stored> {
    let mut items = read_all_native(path.as_ref())?;
    match items.len() {
        1 => Ok(items.pop().unwrap()),
        0 => Err(Error::Format("empty file".into())),
        n => Err(Error::Format(format!("expected one record, found {n}"))),
    }
}

pub fn read_all_native(path: impl AsRef<Path>) -> Result<Vec<Stored>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let mut out = Vec::new();
    while let Some(item) = decode(&mut r)? {
        out.push(item);
    }
    Ok(out)
}

pub fn write_volume(path: impl AsRef<Path>, v: &Volume) -> Result<()> {
    write_native(path, &Stored::Volume(v.clone()))
}

pub fn write_mask(path: impl AsRef<Path>, m: &Mask) -> Result<()> {
    write_native(path, &Stored::Mask(m.clone()))
}

/// Reads an image record; a mask record is returned as a 0/1 volume.
pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    match read_native(path)? {
        Stored::Volume(v) => Ok(v),
        Stored::Mask(m) => Volume::from_geometry(*m.geometry(), m.data().iter().map(|&b| b as f32).collect()),
    }
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    match read_native(path)? {
        Stored::Mask(m) => Ok(m),
        Stored::Volume(_) => Err(Error::Format("expected a mask record, found an image".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(item: &Stored) -> Stored {
        let mut buf = Vec::new();
        encode(&mut buf, item).unwrap();
        decode(&mut buf.as_slice()).unwrap().unwrap()
    }

    #[test]
    fn minimal_volume_layout() {
        let v = Volume::new([1, 1, 1], [1.0, 2.0, 3.0], vec![42.0]).unwrap();
        let mut buf = Vec::new();
        encode(&mut buf, &v.clone().into()).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 4);
        assert_eq!(&buf[..4], b"VAUG");
        assert_eq!(&buf[4..8], &[1, 0, 2, 0]);
        assert_eq!(&buf[8..20], &[1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&buf[20..28], &1.0f64.to_le_bytes());
        assert_eq!(&buf[44..], &42.0f32.to_le_bytes());
        assert_eq!(roundtrip(&v.into()), Stored::Volume(Volume::new([1, 1, 1], [1.0, 2.0, 3.0], vec![42.0]).unwrap()));
    }

    #[test]
    fn mask_roundtrip_keeps_kind() {
        let m = Mask::new([2, 2, 1], [0.5; 3], vec![0, 1, 1, 0]).unwrap();
        assert_eq!(roundtrip(&m.clone().into()), Stored::Mask(m));
    }

    #[test]
    fn rejects_corrupt_input() {
        let v = Volume::new([2, 1, 1], [1.0; 3], vec![1.0, 2.0]).unwrap();
        let mut good = Vec::new();
        encode(&mut good, &v.into()).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&mut bad.as_slice()), Err(Error::Format(_))));

        let mut bad = good.clone();
        bad[4] = 2;
        assert!(decode(&mut bad.as_slice()).is_err());

        let bad = &good[..good.len() - 1];
        assert!(decode(&mut &bad[..]).is_err());

        let mut bad = good.clone();
        let n = bad.len();
        bad[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode(&mut bad.as_slice()).is_err());
    }

    #[test]
    fn integer_payloads_decode_to_float() {
        let mut buf = Vec::new();
        let geom = Geometry::new([2, 1, 1], [1.0; 3]).unwrap();
        write_header(&mut buf, Dtype::I16, 0, &geom).unwrap();
        buf.extend_from_slice(&(-300i16).to_le_bytes());
        buf.extend_from_slice(&7i16.to_le_bytes());
        match decode(&mut buf.as_slice()).unwrap().unwrap() {
            Stored::Volume(v) => assert_eq!(v.data(), &[-300.0, 7.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn concatenated_records() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rgb.vaug");
        let vols: Vec<Stored> = (0..3)
            .map(|c| Volume::filled([2, 2, 2], [1.0; 3], c as f32).unwrap().into())
            .collect();
        write_all_native(&p, &vols).unwrap();
        assert_eq!(read_all_native(&p).unwrap(), vols);
        assert!(read_native(&p).is_err());
    }
}
