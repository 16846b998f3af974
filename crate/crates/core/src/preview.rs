//! Transport-independent core of the preview service.
//!
//! A [`PreviewService`] holds every image of one manifest in memory and
//! renders slices of them, optionally after applying a fragment of an
//! augmentation config. Augmentations run on the whole volume in the order
//! style, remap, geometric, each drawing from the same stream the batch
//! pipeline uses for variant 0 of that volume. Slices are min–max windowed
//! to 8 bits and encoded as grayscale PNG.

use std::collections::BTreeMap;
use std::io::Cursor;
use std::path::{Component, Path, PathBuf};

use base64::Engine;
use image::{GrayImage, ImageFormat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{geo_transform, GeoConfig, GeoParams};
use crate::io::{load_record_volume, Laterality, Manifest, Variant};
use crate::pipeline::{variant_stream, AugmentationConfig, OnlineAugmentation};
use crate::remap::{apply_remap, generate_remap_curve, RemapConfig};
use crate::style::{stylize_volume, BackendSpec, StyleBackend, StyleConfig};
use crate::volume::{Axis, Geometry, Volume};

/// The augmentation kinds to preview; absent kinds are skipped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreviewFragment {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remap: Option<RemapConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub style: Option<StyleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreviewRequest {
    pub volume_id: String,
    pub axis: Axis,
    pub index: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fragment: PreviewFragment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreviewResponse {
    pub original_png_b64: String,
    pub augmented_png_b64: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remap_curve: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geo_params: Option<GeoParams>,
    /// Name of the style backend, when a style preview was rendered.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub style_backend: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeSummary {
    pub id: String,
    pub subject: String,
    pub laterality: Laterality,
    pub group: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
}

/// Min–max windows `values` to 0..=255; a constant slice maps to 0.
pub fn window_u8(values: &[f32]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if !(hi > lo) {
        return vec![0; values.len()];
    }
    let (lo, scale) = (lo as f64, 255.0 / (hi as f64 - lo as f64));
    values
        .iter()
        .map(|&v| ((v as f64 - lo) * scale).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Encodes an 8-bit grayscale raster of `width` columns as PNG.
pub fn encode_png(pixels: Vec<u8>, width: usize, height: usize) -> Result<Vec<u8>> {
    let img = GrayImage::from_raw(width as u32, height as u32, pixels)
        .ok_or_else(|| Error::Image("pixel buffer does not match slice size".into()))?;
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| Error::Image(e.to_string()))?;
    Ok(buf.into_inner())
}

/// Slice `index` orthogonal to `axis`, windowed and PNG encoded. Columns
/// follow the fast in-slice axis.
pub fn slice_png(vol: &Volume, axis: Axis, index: usize) -> Result<Vec<u8>> {
    let n = vol.dims()[axis.index()];
    if index >= n {
        return Err(Error::Parameter(format!(
            "slice index {index} out of range for axis {axis:?} with {n} slices"
        )));
    }
    let (u, v) = Geometry::slice_axes(axis);
    let dims = vol.dims();
    encode_png(window_u8(&vol.slice(axis, index)), dims[u.index()], dims[v.index()])
}

fn b64(bytes: &[u8]) -> String {
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub struct PreviewService {
    manifest: Manifest,
    volumes: BTreeMap<String, Volume>,
    backend_spec: BackendSpec,
    backend: Box<dyn StyleBackend>,
}

impl PreviewService {
    /// Loads every image record of `manifest` up front.
    pub fn load(manifest: Manifest, dir: &Path, backend_spec: BackendSpec) -> Result<Self> {
        manifest.validate()?;
        let mut volumes = BTreeMap::new();
        for rec in manifest.images() {
            volumes.insert(rec.id.clone(), load_record_volume(dir, rec)?);
        }
        Ok(Self::from_volumes(manifest, volumes, backend_spec))
    }

    pub fn from_volumes(manifest: Manifest, volumes: BTreeMap<String, Volume>, backend_spec: BackendSpec) -> Self {
        let backend = backend_spec.build();
        PreviewService {
            manifest,
            volumes,
            backend_spec,
            backend,
        }
    }

    pub fn backend_name(&self) -> &str {
        self.backend.name()
    }

    pub fn volumes(&self) -> Vec<VolumeSummary> {
        self.manifest
            .images()
            .filter_map(|r| {
                let v = self.volumes.get(&r.id)?;
                Some(VolumeSummary {
                    id: r.id.clone(),
                    subject: r.subject.clone(),
                    laterality: r.laterality,
                    group: r.group.clone(),
                    variant: r.variant,
                    dims: v.dims(),
                    spacing: v.spacing(),
                })
            })
            .collect()
    }

    pub fn volume(&self, id: &str) -> Result<&Volume> {
        self.volumes
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("volume {id:?}")))
    }

    pub fn original_slice(&self, id: &str, axis: Axis, index: usize) -> Result<Vec<u8>> {
        slice_png(self.volume(id)?, axis, index)
    }

    /// The volume after applying `fragment` with `seed`, plus what was drawn.
    pub fn augment(&self, id: &str, seed: u64, fragment: &PreviewFragment) -> Result<(Volume, PreviewResponseParts)> {
        let mut vol = self.volume(id)?.clone();
        let mut parts = PreviewResponseParts::default();
        if let Some(style) = &fragment.style {
            if style.backend != self.backend_spec {
                return Err(Error::Parameter(format!(
                    "style backend must match the served backend {:?}",
                    self.backend_spec
                )));
            }
            let mut rng = variant_stream(seed, id, Variant::Style, 0);
            vol = stylize_volume(&vol, style, &mut rng, self.backend.as_ref())?.volume;
            parts.style_backend = Some(self.backend.name().to_string());
        }
        if let Some(remap) = &fragment.remap {
            let mut rng = variant_stream(seed, id, Variant::Remap, 0);
            let mut curve = generate_remap_curve(&mut rng, remap)?;
            curve.meta.seed = Some(seed);
            vol = apply_remap(&vol, &curve);
            parts.remap_curve = Some(curve.lut);
        }
        if let Some(geo) = &fragment.geo {
            geo.validate()?;
            let online = OnlineAugmentation {
                seed,
                geo: *geo,
                sample_ratio_original_to_augmented: Default::default(),
            };
            let p = online.geo_params(id, 0);
            vol = geo_transform(&vol, &p)?;
            parts.geo_params = Some(p);
        }
        Ok((vol, parts))
    }

    pub fn render_preview(&self, req: &PreviewRequest) -> Result<PreviewResponse> {
        let original = self.original_slice(&req.volume_id, req.axis, req.index)?;
        let (vol, parts) = self.augment(&req.volume_id, req.seed, &req.fragment)?;
        let augmented = slice_png(&vol, req.axis, req.index)?;
        Ok(PreviewResponse {
            original_png_b64: b64(&original),
            augmented_png_b64: b64(&augmented),
            remap_curve: parts.remap_curve,
            geo_params: parts.geo_params,
            style_backend: parts.style_backend,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreviewResponseParts {
    pub remap_curve: Option<Vec<f64>>,
    pub geo_params: Option<GeoParams>,
    pub style_backend: Option<String>,
}

/// Resolves `rel` inside `workspace`, rejecting absolute paths and `..`.
pub fn workspace_path(workspace: &Path, rel: &str) -> Result<PathBuf> {
    let p = Path::new(rel);
    let ok = !rel.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)));
    if !ok {
        return Err(Error::Parameter(format!(
            "export path {rel:?} must be relative and stay inside the workspace"
        )));
    }
    Ok(workspace.join(p))
}

/// Validates `cfg` and writes it as pretty JSON to `rel` under `workspace`.
pub fn export_config(workspace: &Path, rel: &str, cfg: &AugmentationConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let path = workspace_path(workspace, rel)?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let text = serde_json::to_string_pretty(cfg)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{Record, RecordKind};
    use crate::rng::stream;

    fn service() -> PreviewService {
        let v = Volume::from_fn([12, 10, 8], [2.0; 3], |x, y, z| ((x * 7 + y * 3) % 11 + z) as f32 * 1.5 - 3.0).unwrap();
        let m = Manifest::new(vec![Record::new("v", "v.vaug", RecordKind::Image, "s", Laterality::Left, "g")]);
        PreviewService::from_volumes(m, BTreeMap::from([("v".to_string(), v)]), BackendSpec::Mock)
    }

    fn decode(b: &str) -> image::GrayImage {
        let bytes = base64::engine::general_purpose::STANDARD.decode(b).unwrap();
        image::load_from_memory(&bytes).unwrap().to_luma8()
    }

    #[test]
    fn windowing() {
        assert_eq!(window_u8(&[2.0, 3.0, 4.0]), vec![0, 128, 255]);
        assert_eq!(window_u8(&[5.0; 3]), vec![0; 3]);
    }

    #[test]
    fn png_is_lossless_and_oriented() {
        let s = service();
        let png = s.original_slice("v", Axis::Z, 3).unwrap();
        let img = image::load_from_memory(&png).unwrap().to_luma8();
        assert_eq!(img.dimensions(), (12, 10));
        let want = window_u8(&s.volume("v").unwrap().slice(Axis::Z, 3));
        assert_eq!(img.into_raw(), want);
    }

    #[test]
    fn empty_fragment_is_identity() {
        let s = service();
        let req = PreviewRequest {
            volume_id: "v".into(),
            axis: Axis::Y,
            index: 4,
            seed: 5,
            fragment: PreviewFragment::default(),
        };
        let r = s.render_preview(&req).unwrap();
        assert_eq!(r.original_png_b64, r.augmented_png_b64);
        assert!(r.remap_curve.is_none());
    }

    #[test]
    fn remap_preview_matches_library() {
        let s = service();
        let cfg = RemapConfig::default();
        let req = PreviewRequest {
            volume_id: "v".into(),
            axis: Axis::Z,
            index: 2,
            seed: 77,
            fragment: PreviewFragment {
                remap: Some(cfg),
                ..Default::default()
            },
        };
        let r = s.render_preview(&req).unwrap();
        let curve = generate_remap_curve(&mut stream(77, &["v", "remap", "0"]), &cfg).unwrap();
        assert_eq!(r.remap_curve.as_deref(), Some(curve.lut.as_slice()));
        let full = apply_remap(s.volume("v").unwrap(), &curve);
        assert_eq!(decode(&r.augmented_png_b64).into_raw(), window_u8(&full.slice(Axis::Z, 2)));
        assert_eq!(r, s.render_preview(&req).unwrap());
    }

    #[test]
    fn errors() {
        let s = service();
        let mut req = PreviewRequest {
            volume_id: "nope".into(),
            axis: Axis::Z,
            index: 0,
            seed: 0,
            fragment: PreviewFragment::default(),
        };
        assert!(matches!(s.render_preview(&req), Err(Error::NotFound(_))));
        req.volume_id = "v".into();
        req.index = 8;
        assert!(matches!(s.render_preview(&req), Err(Error::Parameter(_))));
        req.index = 0;
        req.fragment.style = Some(StyleConfig {
            backend: BackendSpec::Process {
                command: "/bin/true".into(),
                reentrant: false,
            },
            ..StyleConfig::default()
        });
        assert!(matches!(s.render_preview(&req), Err(Error::Parameter(_))));
        assert!(serde_json::from_str::<PreviewFragment>(r#"{"remap":{"window":3},"x":1}"#).is_err());
    }

    #[test]
    fn export_stays_in_workspace() {
        let ws = tempfile::tempdir().unwrap();
        let cfg = AugmentationConfig::default();
        let p = export_config(ws.path(), "cfg/a.json", &cfg).unwrap();
        let back = AugmentationConfig::from_json(&std::fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(back, cfg);
        for bad in ["../x.json", "/tmp/x.json", "", "a/../../b.json"] {
            assert!(export_config(ws.path(), bad, &cfg).is_err(), "{bad}");
        }
    }
}
