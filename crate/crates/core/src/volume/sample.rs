//! Point sampling and backward warping.

use rayon::prelude::*;

use super::{Geometry, Interp};

/// Samples `data` (laid out per `geom`) at a continuous voxel index.
///
/// Each voxel covers `[i - 0.5, i + 0.5]`; positions outside the grid extent
/// return `pad`. Inside the extent trilinear sampling replicates edge voxels.
pub(crate) fn sample(data: &[f32], geom: &Geometry, pos: [f64; 3], interp: Interp, pad: f32) -> f32 {
    const EPS: f64 = 1e-9;
    let dims = geom.dims;
    for a in 0..3 {
        let n = dims[a] as f64;
        if !(pos[a] >= -0.5 - EPS && pos[a] <= n - 0.5 + EPS) {
            return pad;
        }
    }
    match interp {
        Interp::Nearest => {
            let idx: [usize; 3] = std::array::from_fn(|a| {
                let r = (pos[a] + 0.5).floor();
                (r.max(0.0) as usize).min(dims[a] - 1)
            });
            data[geom.index(idx[0], idx[1], idx[2])]
        }
        Interp::Trilinear => {
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            let mut frac = [0f64; 3];
            for a in 0..3 {
                let max = (dims[a] - 1) as f64;
                let p = pos[a].clamp(0.0, max);
                let f = p.floor();
                lo[a] = f as usize;
                hi[a] = (lo[a] + 1).min(dims[a] - 1);
                frac[a] = p - f;
            }
            let v = |x: usize, y: usize, z: usize| data[geom.index(x, y, z)] as f64;
            let [fx, fy, fz] = frac;
            let c00 = v(lo[0], lo[1], lo[2]) * (1.0 - fx) + v(hi[0], lo[1], lo[2]) * fx;
            let c10 = v(lo[0], hi[1], lo[2]) * (1.0 - fx) + v(hi[0], hi[1], lo[2]) * fx;
            let c01 = v(lo[0], lo[1], hi[2]) * (1.0 - fx) + v(hi[0], lo[1], hi[2]) * fx;
            let c11 = v(lo[0], hi[1], hi[2]) * (1.0 - fx) + v(hi[0], hi[1], hi[2]) * fx;
            let c0 = c00 * (1.0 - fy) + c10 * fy;
            let c1 = c01 * (1.0 - fy) + c11 * fy;
            (c0 * (1.0 - fz) + c1 * fz) as f32
        }
    }
}

/// Fills an output grid by sampling the source at `source_pos(output index)`.
///
/// Work is split per z-slab; the result does not depend on thread count.
pub(crate) fn warp(
    src: &[f32],
    src_geom: &Geometry,
    out_geom: &Geometry,
    interp: Interp,
    pad: f32,
    source_pos: impl Fn([usize; 3]) -> [f64; 3] + Sync,
) -> Vec<f32> {
    let [nx, ny, _] = out_geom.dims;
    let mut out = vec![0f32; out_geom.len()];
    out.par_chunks_mut(nx * ny).enumerate().for_each(|(z, slab)| {
        for y in 0..ny {
            for x in 0..nx {
                let p = source_pos([x, y, z]);
                slab[x + nx * y] = sample(src, src_geom, p, interp, pad);
            }
        }
    });
    out
}
