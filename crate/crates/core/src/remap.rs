//! Randomized intensity remapping.
//!
//! A remapping curve is a 256-entry lookup table built from uniform noise:
//!
//! 1. draw `n(i) ~ U[0, 255]` for `i = 0..=255`;
//! 2. smooth with a centred moving average of width `window`, replicating
//!    edge values (for even widths the extra tap is on the high side);
//! 3. min–max rescale the smoothed curve to `[0, 255]`;
//! 4. draw a sign `s = ±1` with equal probability (or `+1`);
//! 5. add the linear term `linear_weight * s * i`;
//! 6. min–max rescale to `[0, 255]` again.
//!
//! A constant curve rescales to all zeros at steps 3 and 6.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{normalize_u8, Raster, Volume};

pub const LUT_LEN: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemapConfig {
    /// Moving-average width.
    pub window: usize,
    /// Weight of the linear component relative to the rescaled noise.
    pub linear_weight: f64,
    /// Draw the sign of the linear component per curve; `+1` otherwise.
    pub sign_random: bool,
}

impl Default for RemapConfig {
    fn default() -> Self {
        RemapConfig {
            window: 20,
            linear_weight: 0.5,
            sign_random: true,
        }
    }
}

impl RemapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window > LUT_LEN {
            return Err(Error::Parameter(format!(
                "window must lie in 1..=256, got {}",
                self.window
            )));
        }
        if !(self.linear_weight.is_finite() && self.linear_weight >= 0.0) {
            return Err(Error::Parameter(format!(
                "linear weight must be finite and non-negative, got {}",
                self.linear_weight
            )));
        }
        Ok(())
    }
}

/// What produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemapMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: RemapConfig,
    /// +1 or -1.
    pub sign: i8,
}

/// Lookup table mapping intensities 0..=255 onto 0..=255.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemapCurve {
    pub lut: Vec<f64>,
    pub meta: RemapMeta,
}

impl RemapCurve {
    pub fn identity() -> Self {
        RemapCurve {
            lut: (0..LUT_LEN).map(|i| i as f64).collect(),
            meta: RemapMeta {
                seed: None,
                config: RemapConfig {
                    linear_weight: 1.0,
                    ..RemapConfig::default()
                },
                sign: 1,
            },
        }
    }

    /// Builds a curve from an explicit lookup table (256 finite entries).
    pub fn from_lut(lut: Vec<f64>, meta: RemapMeta) -> Result<Self> {
        if lut.len() != LUT_LEN || lut.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("lookup table needs 256 finite entries".into()));
        }
        Ok(RemapCurve { lut, meta })
    }

    /// The table as a JSON array of 256 numbers.
    pub fn to_json_array(&self) -> serde_json::Value {
        serde_json::Value::from(self.lut.clone())
    }

    pub fn lookup(&self, v: f64) -> f64 {
        let i = v.clamp(0.0, 255.0).round_ties_even() as usize;
        self.lut[i]
    }
}

/// Centred moving average with edge replication.
fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let n = x.len() as isize;
    let lo = (window as isize - 1) / 2;
    let hi = window as isize - 1 - lo;
    (0..n)
        .map(|i| {
            let sum: f64 = (i - lo..=i + hi).map(|j| x[j.clamp(0, n - 1) as usize]).sum();
            sum / window as f64
        })
        .collect()
}

fn rescale_0_255(x: &mut [f64]) {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        x.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let scale = 255.0 / (hi - lo);
    for v in x.iter_mut() {
        // pin the maximum: (hi - lo) * scale can round below 255
        *v = if *v == hi { 255.0 } else { ((*v - lo) * scale).clamp(0.0, 255.0) };
    }
}

/// Steps 2–6 of curve construction from given noise and sign.
pub fn curve_from_noise(noise: &[f64; LUT_LEN], sign: i8, cfg: &RemapConfig) -> Result<RemapCurve> {
    cfg.validate()?;
    if sign != 1 && sign != -1 {
        return Err(Error::Parameter(format!("sign must be +1 or -1, got {sign}")));
    }
    let mut curve = moving_average(noise, cfg.window);
    rescale_0_255(&mut curve);
    let slope = cfg.linear_weight * sign as f64;
    for (i, v) in curve.iter_mut().enumerate() {
        *v += slope * i as f64;
    }
    rescale_0_255(&mut curve);
    Ok(RemapCurve {
        lut: curve,
        meta: RemapMeta {
            seed: None,
            config: *cfg,
            sign,
        },
    })
}

/// Draws noise and sign from `rng` and builds a curve.
pub fn generate_remap_curve<R: Rng + ?Sized>(rng: &mut R, cfg: &RemapConfig) -> Result<RemapCurve> {
    cfg.validate()?;
    let mut noise = [0f64; LUT_LEN];
    for n in noise.iter_mut() {
        let u: f64 = rng.random();
        *n = 255.0 * u;
    }
    let sign = if !cfg.sign_random || rng.random::<bool>() { 1 } else { -1 };
    curve_from_noise(&noise, sign, cfg)
}

/// `v' = lut(round(clamp(normalize_u8(v), 0, 255)))` per voxel.
pub fn apply_remap(vol: &Volume, curve: &RemapCurve) -> Volume {
    let norm = normalize_u8(vol);
    let data = norm.data().iter().map(|&v| curve.lookup(v as f64) as f32).collect();
    Volume::from_samples(*vol.geometry(), data)
}
