//! Offline construction of augmented training sets.
//!
//! Every image record is preprocessed into two 64×128×128 halves. For each
//! half the original is written together with `style` stylized and `remap`
//! remapped variants. Each variant draws from its own generator stream keyed
//! by `(seed, half id, kind, index)`, so results do not depend on the order
//! in which volumes are processed. Geometric augmentation is not
//! materialized; it is recorded in the output manifest's `online` block for
//! consumers to apply at load time.

use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::geo::{geo_transform, sample_geo_params, GeoConfig, GeoParams};
use crate::io::{
    load_record_mask, load_record_volume, save_manifest, write_mask, write_volume, Laterality, Manifest, Record,
    RecordKind, Variant,
};
use crate::remap::{apply_remap, generate_remap_curve, RemapConfig};
use crate::rng::{stream, StreamRng};
use crate::style::{stylize_volume, StyleBackend, StyleConfig};
use crate::volume::{preprocess_half, preprocess_volume, Mask, Raster, Volume};

/// Number of generated variants per preprocessed half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Counts {
    pub style: usize,
    pub remap: usize,
}

impl Default for Counts {
    fn default() -> Self {
        Counts { style: 2, remap: 2 }
    }
}

/// Relative sampling weights of original and augmented images, written as a
/// two-element array `[original, augmented]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[u32; 2]", into = "[u32; 2]")]
pub struct SampleRatio {
    pub original: u32,
    pub augmented: u32,
}

impl SampleRatio {
    /// The original weight must be positive; an augmented weight of 0 means
    /// originals only.
    pub fn new(original: u32, augmented: u32) -> Result<Self> {
        if original == 0 {
            return Err(Error::Parameter("original sampling weight must be at least 1".into()));
        }
        Ok(SampleRatio { original, augmented })
    }

    pub fn original_fraction(&self) -> f64 {
        self.original as f64 / (self.original as f64 + self.augmented as f64)
    }
}

impl Default for SampleRatio {
    fn default() -> Self {
        SampleRatio {
            original: 1,
            augmented: 2,
        }
    }
}

impl TryFrom<[u32; 2]> for SampleRatio {
    type Error = Error;

    fn try_from(v: [u32; 2]) -> Result<Self> {
        SampleRatio::new(v[0], v[1])
    }
}

impl From<SampleRatio> for [u32; 2] {
    fn from(r: SampleRatio) -> Self {
        [r.original, r.augmented]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct AugmentationConfig {
    pub seed: u64,
    pub geo: GeoConfig,
    pub remap: RemapConfig,
    pub style: StyleConfig,
    pub per_volume_counts: Counts,
    pub sample_ratio_original_to_augmented: SampleRatio,
}


impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        self.geo.validate()?;
        self.remap.validate()?;
        self.style.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: AugmentationConfig = serde_json::from_str(text).map_err(|e| Error::Parameter(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn online(&self) -> OnlineAugmentation {
        OnlineAugmentation {
            seed: self.seed,
            geo: self.geo,
            sample_ratio_original_to_augmented: self.sample_ratio_original_to_augmented,
        }
    }
}

/// Augmentation left to the consumer of an augmented manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineAugmentation {
    pub seed: u64,
    pub geo: GeoConfig,
    pub sample_ratio_original_to_augmented: SampleRatio,
}

impl OnlineAugmentation {
    /// Geometric parameters for draw number `draw` of record `id`.
    pub fn geo_params(&self, id: &str, draw: u64) -> GeoParams {
        sample_geo_params(&mut stream(self.seed, &[id, "geo", &draw.to_string()]), &self.geo)
    }

    /// Applies the same geometric draw to an image and its mask.
    pub fn apply(&self, id: &str, draw: u64, image: &Volume, mask: Option<&Mask>) -> Result<(Volume, Option<Mask>)> {
        let p = self.geo_params(id, draw);
        let img = geo_transform(image, &p)?;
        let m = mask.map(|m| geo_transform(m, &p)).transpose()?;
        Ok((img, m))
    }
}

/// Generator for variant `index` of `kind` generated from half `half_id`.
pub fn variant_stream(seed: u64, half_id: &str, kind: Variant, index: usize) -> StreamRng {
    stream(seed, &[half_id, kind.as_str(), &index.to_string()])
}

/// Id of the record for one generated file.
pub fn variant_id(half_id: &str, kind: Variant, index: usize) -> String {
    match kind {
        Variant::Original => half_id.to_string(),
        _ => format!("{half_id}_{}{index}", kind.as_str()),
    }
}

fn halves(rec: &Record) -> Vec<Laterality> {
    match rec.laterality {
        Laterality::Whole => vec![Laterality::Left, Laterality::Right],
        l => vec![l],
    }
}

fn half_id(id: &str, half: Laterality) -> String {
    format!("{id}_{}", half.as_str())
}

/// One file the pipeline will write.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlannedFile {
    pub id: String,
    pub path: String,
    pub kind: RecordKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    pub source: String,
}

/// Files `build_training_set` would write, in output-manifest order.
pub fn plan_training_set(manifest: &Manifest, cfg: &AugmentationConfig) -> Result<Vec<PlannedFile>> {
    manifest.validate()?;
    cfg.validate()?;
    let mut out = Vec::new();
    for rec in manifest.records.iter().filter(|r| r.is_primary_image()) {
        let mask = manifest.mask_for(rec);
        for half in halves(rec) {
            let hid = half_id(&rec.id, half);
            let mut push = |id: String, kind, variant, source: &str| {
                out.push(PlannedFile {
                    path: format!("{id}.vaug"),
                    id,
                    kind,
                    variant,
                    source: source.to_string(),
                })
            };
            push(hid.clone(), RecordKind::Image, Some(Variant::Original), &rec.id);
            if let Some(m) = mask {
                push(half_id(&m.id, half), RecordKind::Mask, None, &m.id);
            }
            for (kind, n) in [
                (Variant::Style, cfg.per_volume_counts.style),
                (Variant::Remap, cfg.per_volume_counts.remap),
            ] {
                for i in 0..n {
                    push(variant_id(&hid, kind, i), RecordKind::Image, Some(kind), &rec.id);
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildOptions {
    /// Uniform scale applied before splitting, in (0, 1].
    pub prescale: Option<f64>,
    /// Worker threads; all available cores when `None`.
    pub threads: Option<usize>,
}

/// An input record that could not be processed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildFailure {
    pub record: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub manifest: Manifest,
    pub failures: Vec<BuildFailure>,
}

struct Job<'a> {
    src_dir: &'a Path,
    out_dir: &'a Path,
    cfg: &'a AugmentationConfig,
    backend: &'a dyn StyleBackend,
    prescale: Option<f64>,
}

fn split_or_half<R: Raster>(img: &R, rec: &Record, prescale: Option<f64>) -> Result<Vec<(Laterality, R)>> {
    match rec.laterality {
        Laterality::Whole => {
            let (l, r) = preprocess_volume(img, prescale)?;
            Ok(vec![(Laterality::Left, l), (Laterality::Right, r)])
        }
        half => Ok(vec![(half, preprocess_half(img, prescale, half == Laterality::Right)?)]),
    }
}

fn derived(rec: &Record, id: String, kind: RecordKind, half: Laterality) -> Record {
    let mut r = Record::new(
        id.clone(),
        format!("{id}.vaug"),
        kind,
        rec.subject.clone(),
        half,
        rec.group.clone(),
    );
    r.provenance = Some(json!({ "source": rec.id, "half": half.as_str() }));
    r
}

impl Job<'_> {
    fn out_path(&self, r: &Record) -> PathBuf {
        self.out_dir.join(&r.path)
    }

    fn run(&self, rec: &Record, mask_rec: Option<&Record>) -> Result<Vec<Record>> {
        let img = load_record_volume(self.src_dir, rec)?;
        let halves = split_or_half(&img, rec, self.prescale)?;
        let mask_halves = match mask_rec {
            Some(m) => Some(split_or_half(&load_record_mask(self.src_dir, m)?, rec, self.prescale)?),
            None => None,
        };
        let cfg = self.cfg;
        let mut out = Vec::new();
        for (h, (half, vol)) in halves.iter().enumerate() {
            let hid = half_id(&rec.id, *half);
            let mut orig = derived(rec, hid.clone(), RecordKind::Image, *half);
            orig.variant = Some(Variant::Original);
            if let Some(p) = self.prescale {
                orig.provenance.as_mut().unwrap()["prescale"] = json!(p);
            }
            write_volume(self.out_path(&orig), vol)?;
            out.push(orig);

            if let (Some(m), Some(mh)) = (mask_rec, &mask_halves) {
                let mut mr = derived(m, half_id(&m.id, *half), RecordKind::Mask, *half);
                mr.subject = rec.subject.clone();
                write_mask(self.out_path(&mr), &mh[h].1)?;
                out.push(mr);
            }

            for i in 0..cfg.per_volume_counts.style {
                let mut rng = variant_stream(cfg.seed, &hid, Variant::Style, i);
                let s = stylize_volume(vol, &cfg.style, &mut rng, self.backend)?;
                let mut r = self.variant_record(rec, &hid, *half, Variant::Style, i);
                r.provenance.as_mut().unwrap()["params"] = json!({
                    "alpha": cfg.style.alpha,
                    "literal_eq1": cfg.style.literal_eq1,
                    "backend": self.backend.name(),
                    "predicted_image_style": s.predicted_image_style,
                    "embedding": s.embedding,
                });
                write_volume(self.out_path(&r), &s.volume)?;
                out.push(r);
            }

            for i in 0..cfg.per_volume_counts.remap {
                let mut rng = variant_stream(cfg.seed, &hid, Variant::Remap, i);
                let mut curve = generate_remap_curve(&mut rng, &cfg.remap)?;
                curve.meta.seed = Some(cfg.seed);
                let mut r = self.variant_record(rec, &hid, *half, Variant::Remap, i);
                r.provenance.as_mut().unwrap()["params"] = json!({
                    "config": cfg.remap,
                    "sign": curve.meta.sign,
                    "lut": curve.lut,
                });
                write_volume(self.out_path(&r), &apply_remap(vol, &curve))?;
                out.push(r);
            }
        }
        Ok(out)
    }

    fn variant_record(&self, rec: &Record, hid: &str, half: Laterality, kind: Variant, i: usize) -> Record {
        let mut r = derived(rec, variant_id(hid, kind, i), RecordKind::Image, half);
        r.variant = Some(kind);
        r.derived_from = Some(hid.to_string());
        let p = r.provenance.as_mut().unwrap();
        p["seed"] = json!(self.cfg.seed);
        p["stream"] = json!([hid, kind.as_str(), i.to_string()]);
        r
    }
}

/// Preprocesses and augments every original image of `manifest`, writing
/// `<id>.vaug` files and `manifest.json` into `out_dir`.
///
/// Records whose processing fails are listed in the report and left out of
/// the output manifest; the remaining records are still written.
pub fn build_training_set(
    manifest: &Manifest,
    src_dir: &Path,
    cfg: &AugmentationConfig,
    out_dir: &Path,
    backend: &dyn StyleBackend,
    opts: &BuildOptions,
) -> Result<BuildReport> {
    manifest.validate()?;
    cfg.validate()?;
    if let Some(p) = opts.prescale {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Parameter(format!("prescale must lie in (0, 1], got {p}")));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let job = Job {
        src_dir,
        out_dir,
        cfg,
        backend,
        prescale: opts.prescale,
    };
    let inputs: Vec<(&Record, Option<&Record>)> = manifest
        .records
        .iter()
        .filter(|r| r.is_primary_image())
        .map(|r| (r, manifest.mask_for(r)))
        .collect();
    let work = || -> Vec<Result<Vec<Record>>> { inputs.par_iter().map(|(r, m)| job.run(r, *m)).collect() };
    let results = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((rec, _), res) in inputs.iter().zip(results) {
        match res {
            Ok(rs) => records.extend(rs),
            Err(e) => failures.push(BuildFailure {
                record: rec.id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let out = Manifest {
        records,
        online: Some(cfg.online()),
    };
    out.validate()?;
    save_manifest(out_dir.join("manifest.json"), &out)?;
    Ok(BuildReport { manifest: out, failures })
}

/// Draws `batch_size` image ids: an original with probability
/// `original / (original + augmented)`, otherwise an augmented variant,
/// uniformly within the chosen kind.
pub fn sample_training_batch<R: Rng + ?Sized>(
    manifest: &Manifest,
    rng: &mut R,
    batch_size: usize,
) -> Result<Vec<String>> {
    let ratio = manifest
        .online
        .as_ref()
        .map(|o| o.sample_ratio_original_to_augmented)
        .unwrap_or_default();
    let originals: Vec<&str> = manifest
        .records
        .iter()
        .filter(|r| r.is_primary_image())
        .map(|r| r.id.as_str())
        .collect();
    let augmented: Vec<&str> = manifest
        .images()
        .filter(|r| r.variant.is_some_and(Variant::is_augmented))
        .map(|r| r.id.as_str())
        .collect();
    if originals.is_empty() {
        return Err(Error::Manifest("manifest has no original images".into()));
    }
    if ratio.augmented > 0 && augmented.is_empty() {
        return Err(Error::Manifest("manifest has no augmented images".into()));
    }
    let p = ratio.original_fraction();
    Ok((0..batch_size)
        .map(|_| {
            let pool = if rng.random::<f64>() < p { &originals } else { &augmented };
            pool[rng.random_range(0..pool.len())].to_string()
        })
        .collect())
}

/// JSON schema of [`AugmentationConfig`], served to configuration UIs.
pub fn augmentation_config_schema() -> serde_json::Value {
    let d = AugmentationConfig::default();
    let range = |desc: &str, lo: f64, hi: f64, def: [f64; 2]| {
        json!({
            "type": "array", "description": desc, "minItems": 2, "maxItems": 2,
            "items": {"type": "number", "minimum": lo, "maximum": hi}, "default": def
        })
    };
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "AugmentationConfig",
        "type": "object",
        "additionalProperties": false,
        "properties": {
            "seed": {"type": "integer", "minimum": 0, "maximum": u64::MAX, "default": d.seed},
            "geo": {
                "type": "object",
                "additionalProperties": false,
                "properties": {
                    "scale_range": range("uniform scale factor range", 0.01, 4.0, d.geo.scale_range),
                    "rot_range_deg": range("rotation about the slice axis, degrees", -180.0, 180.0, d.geo.rot_range_deg),
                    "trans_inplane_mm": {"type": "number", "minimum": 0, "maximum": 100, "default": d.geo.trans_inplane_mm},
                    "trans_slice_mm": {"type": "number", "minimum": 0, "maximum": 100, "default": d.geo.trans_slice_mm}
                }
            },
            "remap": {
                "type": "object",
                "additionalProperties": false,
                "properties": {
                    "window": {"type": "integer", "minimum": 1, "maximum": 256, "default": d.remap.window},
                    "linear_weight": {"type": "number", "minimum": 0, "maximum": 10, "default": d.remap.linear_weight},
                    "sign_random": {"type": "boolean", "default": d.remap.sign_random}
                }
            },
            "style": {
                "type": "object",
                "additionalProperties": false,
                "properties": {
                    "alpha": {"type": "number", "minimum": 0, "maximum": 1, "default": d.style.alpha},
                    "literal_eq1": {"type": "boolean", "default": d.style.literal_eq1},
                    "backend": {
                        "type": "object",
                        "required": ["kind"],
                        "properties": {
                            "kind": {"enum": ["mock", "identity", "process"], "default": "mock"},
                            "command": {"type": "string"},
                            "reentrant": {"type": "boolean", "default": false}
                        },
                        "default": d.style.backend
                    }
                }
            },
            "per_volume_counts": {
                "type": "object",
                "additionalProperties": false,
                "properties": {
                    "style": {"type": "integer", "minimum": 0, "default": d.per_volume_counts.style},
                    "remap": {"type": "integer", "minimum": 0, "default": d.per_volume_counts.remap}
                }
            },
            "sample_ratio_original_to_augmented": {
                "type": "array", "minItems": 2, "maxItems": 2,
                "prefixItems": [{"type": "integer", "minimum": 1}, {"type": "integer", "minimum": 0}],
                "default": [1, 2]
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::write_volume;
    use crate::style::MockBackend;

    #[test]
    fn config_defaults_and_round_trip() {
        let cfg = AugmentationConfig::from_json("{}").unwrap();
        assert_eq!(cfg, AugmentationConfig::default());
        assert_eq!(cfg.per_volume_counts, Counts { style: 2, remap: 2 });
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"sample_ratio_original_to_augmented\":[1,2]"));
        assert_eq!(AugmentationConfig::from_json(&text).unwrap(), cfg);
        assert!(AugmentationConfig::from_json(r#"{"sample_ratio_original_to_augmented":[0,2]}"#).is_err());
        assert!(AugmentationConfig::from_json(r#"{"sample_ratio_original_to_augmented":[1,0]}"#).is_ok());
        assert!(AugmentationConfig::from_json(r#"{"remap":{"window":0}}"#).is_err());
        assert!(AugmentationConfig::from_json(r#"{"bogus":1}"#).is_err());
        assert!(AugmentationConfig::from_json(r#"{"geo":{"scale":1}}"#).is_err());
    }

    fn keys_match(schema: &serde_json::Value, value: &serde_json::Value, path: &str) {
        let Some(obj) = value.as_object() else { return };
        if schema.get("type") != Some(&json!("object")) || schema.get("additionalProperties") != Some(&json!(false)) {
            return;
        }
        let props = schema["properties"].as_object().unwrap();
        let mut a: Vec<_> = props.keys().collect();
        let mut b: Vec<_> = obj.keys().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b, "schema keys differ at {path}");
        for (k, v) in obj {
            if props[k].get("additionalProperties") == Some(&json!(false)) {
                keys_match(&props[k], v, &format!("{path}.{k}"));
            } else {
                assert_eq!(props[k]["default"], *v, "default differs at {path}.{k}");
            }
        }
    }

    #[test]
    fn schema_mirrors_serialized_config() {
        let value = serde_json::to_value(AugmentationConfig::default()).unwrap();
        keys_match(&augmentation_config_schema(), &value, "");
    }

    fn tiny_manifest(dir: &Path) -> Manifest {
        let v = Volume::from_fn([20, 10, 6], [7.0, 13.0, 21.0], |x, y, z| (x * 3 + y * 5 + z * 7) as f32).unwrap();
        write_volume(dir.join("a.vaug"), &v).unwrap();
        let mut m = Manifest::new(vec![Record::new("a", "a.vaug", RecordKind::Image, "s", Laterality::Whole, "g")]);
        m.records.push(Record::new("missing", "nope.vaug", RecordKind::Image, "t", Laterality::Left, "g"));
        m
    }

    #[test]
    fn plan_matches_build_and_failures_are_reported() {
        let src = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let m = tiny_manifest(src.path());
        let cfg = AugmentationConfig {
            per_volume_counts: Counts { style: 1, remap: 1 },
            ..AugmentationConfig::default()
        };
        let plan = plan_training_set(&m, &cfg).unwrap();
        assert_eq!(plan.len(), 2 * 3 + 3);
        let rep = build_training_set(&m, src.path(), &cfg, out.path(), &MockBackend, &BuildOptions::default()).unwrap();
        assert_eq!(rep.failures.len(), 1);
        assert_eq!(rep.failures[0].record, "missing");
        let ids: Vec<_> = rep.manifest.records.iter().map(|r| r.id.as_str()).collect();
        let planned: Vec<_> = plan.iter().filter(|p| p.source == "a").map(|p| p.id.as_str()).collect();
        assert_eq!(ids, planned);
        assert_eq!(ids, ["a_left", "a_left_style0", "a_left_remap0", "a_right", "a_right_style0", "a_right_remap0"]);
        for p in plan.iter().filter(|p| p.source == "a") {
            assert!(out.path().join(&p.path).is_file());
        }
        let back = crate::io::load_manifest(out.path().join("manifest.json")).unwrap();
        assert_eq!(back, rep.manifest);
        assert_eq!(back.online.unwrap().geo, cfg.geo);
    }

    #[test]
    fn zero_counts_write_originals_only() {
        let src = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let mut m = tiny_manifest(src.path());
        m.records.pop();
        let cfg = AugmentationConfig {
            per_volume_counts: Counts { style: 0, remap: 0 },
            ..AugmentationConfig::default()
        };
        let rep = build_training_set(&m, src.path(), &cfg, out.path(), &MockBackend, &BuildOptions::default()).unwrap();
        assert!(rep.failures.is_empty());
        assert_eq!(rep.manifest.records.len(), 2);
        assert!(rep.manifest.records.iter().all(|r| r.variant == Some(Variant::Original)));
    }

    fn aug_manifest(n_orig: usize, n_aug: usize, ratio: [u32; 2]) -> Manifest {
        let mut recs = Vec::new();
        for i in 0..n_orig {
            let mut r = Record::new(format!("o{i}"), "x", RecordKind::Image, format!("s{i}"), Laterality::Left, "g");
            r.variant = Some(Variant::Original);
            recs.push(r);
        }
        for i in 0..n_aug {
            let mut r = Record::new(format!("a{i}"), "x", RecordKind::Image, "s0", Laterality::Left, "g");
            r.variant = Some(Variant::Remap);
            r.derived_from = Some("o0".into());
            recs.push(r);
        }
        let mut m = Manifest::new(recs);
        m.online = Some(OnlineAugmentation {
            seed: 0,
            geo: GeoConfig::default(),
            sample_ratio_original_to_augmented: ratio.try_into().unwrap(),
        });
        m
    }

    #[test]
    fn sampler_ratios_and_errors() {
        let m = aug_manifest(3, 4, [1, 0]);
        let ids = sample_training_batch(&m, &mut crate::rng::seeded(1), 500).unwrap();
        assert!(ids.iter().all(|i| i.starts_with('o')));
        let m = aug_manifest(3, 0, [1, 2]);
        assert!(sample_training_batch(&m, &mut crate::rng::seeded(1), 5).is_err());
        let m = aug_manifest(0, 3, [1, 2]);
        assert!(sample_training_batch(&m, &mut crate::rng::seeded(1), 5).is_err());
        let m = aug_manifest(2, 4, [1, 2]);
        let a = sample_training_batch(&m, &mut crate::rng::seeded(9), 64).unwrap();
        assert_eq!(a, sample_training_batch(&m, &mut crate::rng::seeded(9), 64).unwrap());
    }

    #[test]
    fn online_geo_is_keyed_by_id_and_draw() {
        let o = AugmentationConfig::default().online();
        let p = o.geo_params("a_left", 0);
        assert_eq!(p, o.geo_params("a_left", 0));
        assert_ne!(p, o.geo_params("a_left", 1));
        assert!(o.geo.contains(&p));
    }
}
