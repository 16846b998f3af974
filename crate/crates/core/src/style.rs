//! Style-based augmentation.
//!
//! The network that actually restyles an image is pluggable through
//! [`StyleBackend`]. This module owns the surrounding arithmetic: embedding
//! sampling and mixing, gray/RGB conversion, and per-slice invocation with a
//! single embedding per volume.
//!
//! Mixing (`α` = weight of the image's own style):
//!
//! * convex (default): `(1 − α)·s_random + α·s_image`
//! * literal: `(α − 1)·s_random + α·s_image`
//!
//! Gray conversion uses `I = (299·R + 587·G + 114·B) / 1000`.

use std::path::{Path, PathBuf};
use std::process::Command;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_all_native, write_all_native, Stored};
use crate::volume::{normalize_u8, Geometry, Raster, Volume};

pub const EMBEDDING_DIM: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StyleEmbedding(Vec<f64>);

impl StyleEmbedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != EMBEDDING_DIM {
            return Err(Error::Parameter(format!(
                "style embedding needs {EMBEDDING_DIM} entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("style embedding has non-finite entries".into()));
        }
        Ok(StyleEmbedding(values))
    }

    pub fn zeros() -> Self {
        StyleEmbedding(vec![0.0; EMBEDDING_DIM])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

impl TryFrom<Vec<f64>> for StyleEmbedding {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        StyleEmbedding::new(v)
    }
}

impl From<StyleEmbedding> for Vec<f64> {
    fn from(e: StyleEmbedding) -> Self {
        e.0
    }
}

/// 100 independent standard-normal draws.
pub fn sample_style_embedding<R: Rng + ?Sized>(rng: &mut R) -> StyleEmbedding {
    StyleEmbedding((0..EMBEDDING_DIM).map(|_| rng.sample(StandardNormal)).collect())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Parameter(format!("alpha must lie in [0,1], got {alpha}")));
    }
    Ok(())
}

/// Weighted combination of a random and an image embedding.
pub fn mix_embeddings(
    alpha: f64,
    s_random: &StyleEmbedding,
    s_image: &StyleEmbedding,
    literal: bool,
) -> Result<StyleEmbedding> {
    check_alpha(alpha)?;
    let wr = if literal { alpha - 1.0 } else { 1.0 - alpha };
    Ok(StyleEmbedding(
        s_random
            .0
            .iter()
            .zip(&s_image.0)
            .map(|(&r, &i)| wr * r + alpha * i)
            .collect(),
    ))
}

/// Three-channel image stack; every channel shares one geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbStack {
    pub r: Volume,
    pub g: Volume,
    pub b: Volume,
}

impl RgbStack {
    pub fn new(r: Volume, g: Volume, b: Volume) -> Result<Self> {
        for c in [&g, &b] {
            if c.dims() != r.dims() {
                return Err(Error::DimMismatch(r.dims(), c.dims()));
            }
        }
        Ok(RgbStack { r, g, b })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.r.dims()
    }

    pub fn channels(&self) -> [&Volume; 3] {
        [&self.r, &self.g, &self.b]
    }

    fn in_range(&self) -> bool {
        self.channels()
            .iter()
            .all(|c| c.data().iter().all(|v| (0.0..=255.0).contains(v)))
    }
}

/// Copies a gray image into all three channels.
pub fn gray_to_rgb(gray: &Volume) -> Result<RgbStack> {
    if let Some(v) = gray.data().iter().find(|v| !(0.0..=255.0).contains(*v)) {
        return Err(Error::Parameter(format!("gray value {v} outside [0,255]")));
    }
    Ok(RgbStack {
        r: gray.clone(),
        g: gray.clone(),
        b: gray.clone(),
    })
}

pub fn rgb_to_gray(rgb: &RgbStack) -> Volume {
    let data = rgb
        .r
        .data()
        .iter()
        .zip(rgb.g.data())
        .zip(rgb.b.data())
        .map(|((&r, &g), &b)| ((299.0 * r as f64 + 587.0 * g as f64 + 114.0 * b as f64) / 1000.0) as f32)
        .collect();
    Volume::from_samples(*rgb.r.geometry(), data)
}

/// A style-transfer engine.
///
/// `stylize` must return a stack with the input's dims and channel values in
/// `[0, 255]`, and must be deterministic in its inputs.
pub trait StyleBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Style embedding of the whole input volume, if the backend can predict one.
    fn predict_embedding(&self, _volume: &RgbStack) -> Result<Option<StyleEmbedding>> {
        Ok(None)
    }

    fn stylize(&self, input: &RgbStack, embedding: &StyleEmbedding) -> Result<RgbStack>;

    /// Whether `stylize` may run concurrently on different slices.
    fn is_reentrant(&self) -> bool {
        false
    }
}

/// Returns its input unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityBackend;

impl StyleBackend for IdentityBackend {
    fn name(&self) -> &str {
        "identity"
    }

    fn stylize(&self, input: &RgbStack, _embedding: &StyleEmbedding) -> Result<RgbStack> {
        Ok(input.clone())
    }

    fn is_reentrant(&self) -> bool {
        true
    }
}

/// Deterministic stand-in for a style network.
///
/// Channel `c` of each pixel becomes `clamp(v + Σ_k e_k·w_{c,k}(v), 0, 255)`
/// with `w_{c,k}(v) = 4·sin((k+1)·π·v/255 + 2π·c/3)`, so the output equals the
/// input at `e = 0` and varies smoothly with `e`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend;

impl MockBackend {
    pub const AMPLITUDE: f64 = 4.0;

    pub fn basis(channel: usize, k: usize, v: f64) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * channel as f64 / 3.0;
        Self::AMPLITUDE * ((k as f64 + 1.0) * std::f64::consts::PI * v / 255.0 + phase).sin()
    }

    /// Evaluates the sum with the three-term sine recurrence
    /// `sin((k+1)θ + φ) = 2·cos θ·sin(kθ + φ) − sin((k−1)θ + φ)`.
    pub fn pixel(channel: usize, v: f64, e: &[f64]) -> f64 {
        let theta = std::f64::consts::PI * v / 255.0;
        let phase = 2.0 * std::f64::consts::PI * channel as f64 / 3.0;
        let two_cos = 2.0 * theta.cos();
        let (mut prev, mut cur) = (phase.sin(), (theta + phase).sin());
        let mut shift = 0.0;
        for &ek in e {
            shift += ek * cur;
            let next = two_cos * cur - prev;
            prev = cur;
            cur = next;
        }
        (v + Self::AMPLITUDE * shift).clamp(0.0, 255.0)
    }
}

impl StyleBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn stylize(&self, input: &RgbStack, embedding: &StyleEmbedding) -> Result<RgbStack> {
        let e = embedding.values();
        let channel = |c: usize, vol: &Volume| {
            let data = vol.data().iter().map(|&v| Self::pixel(c, v as f64, e) as f32).collect();
            Volume::from_samples(*vol.geometry(), data)
        };
        Ok(RgbStack {
            r: channel(0, &input.r),
            g: channel(1, &input.g),
            b: channel(2, &input.b),
        })
    }

    fn is_reentrant(&self) -> bool {
        true
    }
}

/// Runs an external program per request.
///
/// For each call a fresh directory receives `input.vaug` (R, G and B as three
/// consecutive records) and `embedding.json` (100 numbers). The program is
/// run with that directory as its only argument and must write
/// `output.vaug` in the same layout. A nonzero exit status is a failure.
#[derive(Debug, Clone)]
pub struct ProcessBackend {
    pub program: PathBuf,
    pub reentrant: bool,
    pub scratch: Option<PathBuf>,
}

impl ProcessBackend {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ProcessBackend {
            program: program.into(),
            reentrant: false,
            scratch: None,
        }
    }

    fn run(&self, dir: &Path, input: &RgbStack, embedding: &StyleEmbedding) -> Result<RgbStack> {
        let items: Vec<Stored> = input.channels().iter().map(|c| Stored::Volume((*c).clone())).collect();
        write_all_native(dir.join("input.vaug"), &items)?;
        let emb = dir.join("embedding.json");
        std::fs::write(&emb, serde_json::to_string(embedding)?).map_err(|e| Error::io(&emb, e))?;
        let status = Command::new(&self.program)
            .arg(dir)
            .status()
            .map_err(|e| Error::io(&self.program, e))?;
        if !status.success() {
            return Err(Error::Protocol(format!(
                "{} exited with {status}",
                self.program.display()
            )));
        }
        let out = read_all_native(dir.join("output.vaug"))?;
        let mut vols = Vec::with_capacity(3);
        for item in out {
            match item {
                Stored::Volume(v) => vols.push(v),
                Stored::Mask(_) => return Err(Error::Protocol("output contains a mask record".into())),
            }
        }
        if vols.len() != 3 {
            return Err(Error::Protocol(format!("output has {} records, expected 3", vols.len())));
        }
        let b = vols.pop().unwrap();
        let g = vols.pop().unwrap();
        let r = vols.pop().unwrap();
        RgbStack::new(r, g, b)
    }
}

impl StyleBackend for ProcessBackend {
    fn name(&self) -> &str {
        "process"
    }

    fn stylize(&self, input: &RgbStack, embedding: &StyleEmbedding) -> Result<RgbStack> {
        let mut builder = tempfile::Builder::new();
        builder.prefix("voxaug-style-");
        let dir = match &self.scratch {
            Some(root) => builder.tempdir_in(root),
            None => builder.tempdir(),
        }
        .map_err(|e| Error::io(self.scratch.clone().unwrap_or_else(std::env::temp_dir), e))?;
        self.run(dir.path(), input, embedding)
    }

    fn is_reentrant(&self) -> bool {
        self.reentrant
    }
}

/// Serializable backend choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    #[default]
    Mock,
    Identity,
    Process {
        command: PathBuf,
        #[serde(default)]
        reentrant: bool,
    },
}

impl BackendSpec {
    pub fn build(&self) -> Box<dyn StyleBackend> {
        match self {
            BackendSpec::Mock => Box::new(MockBackend),
            BackendSpec::Identity => Box::new(IdentityBackend),
            BackendSpec::Process { command, reentrant } => Box::new(ProcessBackend {
                program: command.clone(),
                reentrant: *reentrant,
                scratch: None,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StyleConfig {
    /// Weight of the image's own style.
    pub alpha: f64,
    pub backend: BackendSpec,
    /// Use the `(α − 1)` random-term coefficient instead of `(1 − α)`.
    pub literal_eq1: bool,
}

impl Default for StyleConfig {
    fn default() -> Self {
        StyleConfig {
            alpha: 0.5,
            backend: BackendSpec::Mock,
            literal_eq1: false,
        }
    }
}

impl StyleConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)
    }
}

/// Result of stylizing one volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Stylized {
    pub volume: Volume,
    /// The single embedding sent with every slice.
    pub embedding: StyleEmbedding,
    /// Whether the backend supplied an image embedding.
    pub predicted_image_style: bool,
}

fn z_slice(vol: &Volume, k: usize) -> Volume {
    let [nx, ny, _] = vol.dims();
    let plane = nx * ny;
    let geom = Geometry {
        dims: [nx, ny, 1],
        ..*vol.geometry()
    };
    Volume::from_samples(geom, vol.data()[k * plane..(k + 1) * plane].to_vec())
}

/// Restyles `vol` slice by slice along z with one embedding for the volume.
pub fn stylize_volume<R: Rng + ?Sized>(
    vol: &Volume,
    cfg: &StyleConfig,
    rng: &mut R,
    backend: &dyn StyleBackend,
) -> Result<Stylized> {
    cfg.validate()?;
    let norm = normalize_u8(vol);
    let whole = gray_to_rgb(&norm)?;
    let s_random = sample_style_embedding(rng);
    let predicted = backend.predict_embedding(&whole)?;
    let predicted_image_style = predicted.is_some();
    let s_image = predicted.unwrap_or_else(StyleEmbedding::zeros);
    let mixed = mix_embeddings(cfg.alpha, &s_random, &s_image, cfg.literal_eq1)?;

    let nz = vol.dims()[2];
    let run = |k: usize| -> Result<Vec<f32>> {
        let input = gray_to_rgb(&z_slice(&norm, k))?;
        let out = backend.stylize(&input, &mixed).map_err(|e| Error::Backend {
            slice: k,
            message: e.to_string(),
        })?;
        if out.dims() != input.dims() || out.channels().iter().any(|c| c.dims() != input.dims()) {
            return Err(Error::Protocol(format!(
                "backend {} returned dims {:?} for slice {k} of dims {:?}",
                backend.name(),
                out.dims(),
                input.dims()
            )));
        }
        if !out.in_range() {
            return Err(Error::Protocol(format!(
                "backend {} returned values outside [0,255] for slice {k}",
                backend.name()
            )));
        }
        Ok(rgb_to_gray(&out).into_data())
    };
    let slices: Vec<Vec<f32>> = if backend.is_reentrant() {
        (0..nz).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..nz).map(run).collect::<Result<_>>()?
    };
    let data = slices.concat();
    Ok(Stylized {
        volume: Volume::from_samples(*vol.geometry(), data),
        embedding: mixed,
        predicted_image_style,
    })
}
