//! Connected-component labeling on binary grids.
//!
//! Two-pass union–find with face connectivity: 4-connectivity on a 2D slice
//! (`nz = 1`) and 6-connectivity in 3D. Labels are `1..=n` in order of each
//! component's first voxel in raster order (x fastest); 0 is background.

use rayon::prelude::*;

use crate::volume::{Axis, Geometry, Mask};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    /// Per-voxel label, 0 for background.
    pub labels: Vec<u32>,
    /// `sizes[l - 1]` is the voxel count of label `l`.
    pub sizes: Vec<usize>,
}

impl Labels {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// The label with the most voxels; ties go to the lower label.
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(usize, u32)> = None;
        for (i, &s) in self.sizes.iter().enumerate() {
            if best.is_none_or(|(bs, _)| s > bs) {
                best = Some((s, i as u32 + 1));
            }
        }
        best.map(|(_, l)| l)
    }

    /// Binary data keeping only voxels with label `keep`.
    pub fn select(&self, keep: u32) -> Vec<u8> {
        self.labels.iter().map(|&l| (l == keep && l != 0) as u8).collect()
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Labels nonzero cells of a row-major `dims` grid with face connectivity.
pub fn label_grid(data: &[u8], dims: [usize; 3]) -> Labels {
    let [nx, ny, nz] = dims;
    assert_eq!(data.len(), nx * ny * nz, "grid size mismatch");
    let mut provisional = vec![0u32; data.len()];
    // parent[0] is a placeholder so provisional labels index directly.
    let mut parent: Vec<u32> = vec![0];
    let sx = 1;
    let sy = nx;
    let sz = nx * ny;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * (y + ny * z);
                if data[i] == 0 {
                    continue;
                }
                let mut neighbours = [0u32; 3];
                if x > 0 {
                    neighbours[0] = provisional[i - sx];
                }
                if y > 0 {
                    neighbours[1] = provisional[i - sy];
                }
                if z > 0 {
                    neighbours[2] = provisional[i - sz];
                }
                let first = neighbours.iter().copied().filter(|&l| l != 0).min();
                match first {
                    None => {
                        let l = parent.len() as u32;
                        parent.push(l);
                        provisional[i] = l;
                    }
                    Some(l) => {
                        provisional[i] = l;
                        for &n in neighbours.iter().filter(|&&n| n != 0 && n != l) {
                            union(&mut parent, l, n);
                        }
                    }
                }
            }
        }
    }
    let mut remap = vec![0u32; parent.len()];
    let mut sizes = Vec::new();
    let mut labels = provisional;
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = find(&mut parent, *l) as usize;
        if remap[root] == 0 {
            sizes.push(0);
            remap[root] = sizes.len() as u32;
        }
        *l = remap[root];
        sizes[*l as usize - 1] += 1;
    }
    Labels { labels, sizes }
}

/// 6-connected labeling of a whole mask.
pub fn label_3d(mask: &Mask) -> Labels {
    label_grid(mask.data(), mask.dims())
}

/// 4-connected labeling of an `nu × nv` slice stored u fastest.
pub fn label_2d(slice: &[u8], nu: usize, nv: usize) -> Labels {
    label_grid(slice, [nu, nv, 1])
}

/// Applies `f(slice, nu, nv, k)` to every slice orthogonal to `axis` and
/// reassembles the results. Slices are laid out fast in-slice axis first.
pub(crate) fn map_slices<F>(mask: &Mask, axis: Axis, f: F) -> Mask
where
    F: Fn(&[u8], usize, usize, usize) -> Vec<u8> + Sync,
{
    let geom = *mask.geometry();
    let (u, v) = Geometry::slice_axes(axis);
    let (nu, nv) = (geom.dims[u.index()], geom.dims[v.index()]);
    let results: Vec<(Vec<usize>, Vec<u8>)> = (0..geom.dims[axis.index()])
        .into_par_iter()
        .map(|k| {
            let idx = geom.slice_indices(axis, k);
            let slice: Vec<u8> = idx.iter().map(|&i| mask.data()[i]).collect();
            let out = f(&slice, nu, nv, k);
            debug_assert_eq!(out.len(), slice.len());
            (idx, out)
        })
        .collect();
    let mut data = vec![0u8; geom.len()];
    for (idx, out) in results {
        for (i, b) in idx.into_iter().zip(out) {
            data[i] = b;
        }
    }
    Mask::from_raw(geom, data)
}
