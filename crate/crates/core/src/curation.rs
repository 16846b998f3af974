//! Ground-truth mask cleanup.
//!
//! * [`remove_disconnected_2d`] keeps the largest 4-connected region of each
//!   axial slice.
//! * [`cut_inferior_fat`] works on slices orthogonal to the left–right axis.
//!   For every anterior–posterior column it takes the most inferior mask
//!   voxel, finds the column where this envelope is most concave (largest
//!   positive second difference), and removes everything inferior to that
//!   point from its column to the posterior edge.
//! * [`trim_lateral_boundary`] treats the largest slice-to-slice increase in
//!   mask area along the left–right axis as the chest boundary and clears
//!   the slices up to it.
//!
//! Anatomical directions come from the mask's axis order.

use serde::{Deserialize, Serialize};

use crate::labeling::{label_2d, map_slices};
use crate::volume::{Anatomical, Axis, Geometry, Mask};

/// Per axial slice, keep only the largest 4-connected component.
pub fn remove_disconnected_2d(mask: &Mask) -> Mask {
    let axial = mask.geometry().axis_order.axis_of(Anatomical::InferiorSuperior);
    map_slices(mask, axial, |slice, nu, nv, _| {
        let labels = label_2d(slice, nu, nv);
        match labels.largest() {
            Some(l) => labels.select(l),
            None => slice.to_vec(),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FatCutOptions {
    /// Odd width of the second-difference stencil (3 compares neighbours).
    pub window: usize,
    /// Inferior is the low-index end of the inferior–superior axis.
    pub inferior_low: bool,
    /// Posterior is the high-index end of the anterior–posterior axis.
    pub posterior_high: bool,
}

impl Default for FatCutOptions {
    fn default() -> Self {
        FatCutOptions {
            window: 3,
            inferior_low: true,
            posterior_high: true,
        }
    }
}

/// Location of the cut in one slice, in (column, row) slice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConcavePoint {
    pub column: usize,
    pub row: usize,
}

/// Most inferior row of each column; `None` for empty columns.
fn inferior_envelope(cols: usize, rows: usize, at: impl Fn(usize, usize) -> bool, inferior_low: bool) -> Vec<Option<usize>> {
    (0..cols)
        .map(|c| {
            let mut it = (0..rows).filter(|&r| at(c, r));
            if inferior_low {
                it.next()
            } else {
                it.last()
            }
        })
        .collect()
}

/// Finds the cut point of one slice, if its envelope has a concave point.
pub fn find_concave_point(
    cols: usize,
    rows: usize,
    at: impl Fn(usize, usize) -> bool,
    opts: &FatCutOptions,
) -> Option<ConcavePoint> {
    let h = (opts.window.max(3) - 1) / 2;
    let env = inferior_envelope(cols, rows, at, opts.inferior_low);
    // Inferiority grows toward the inferior end.
    let depth = |r: usize| if opts.inferior_low { -(r as i64) } else { r as i64 };
    let mut best: Option<(i64, usize)> = None;
    for c in h..cols.saturating_sub(h) {
        let (Some(a), Some(m), Some(b)) = (env[c - h], env[c], env[c + h]) else {
            continue;
        };
        let conc = depth(a) - 2 * depth(m) + depth(b);
        if conc <= 0 {
            continue;
        }
        let better = match best {
            None => true,
            // columns ascend, so a later tie is more posterior when posterior is high
            Some((bc, _)) => conc > bc || (conc == bc && opts.posterior_high),
        };
        if better {
            best = Some((conc, c));
        }
    }
    best.map(|(_, c)| ConcavePoint {
        column: c,
        row: env[c].unwrap(),
    })
}

/// Removes the inferior fat flap below the most concave envelope point of
/// every slice orthogonal to the left–right axis.
pub fn cut_inferior_fat(mask: &Mask, opts: &FatCutOptions) -> Mask {
    let order = mask.geometry().axis_order;
    let lateral = order.axis_of(Anatomical::LeftRight);
    let ap = order.axis_of(Anatomical::AnteriorPosterior);
    let (u, _) = Geometry::slice_axes(lateral);
    map_slices(mask, lateral, |slice, nu, nv, _| {
        // Columns run along anterior–posterior, rows along inferior–superior.
        let ap_is_u = u == ap;
        let (cols, rows) = if ap_is_u { (nu, nv) } else { (nv, nu) };
        let flat = |c: usize, r: usize| if ap_is_u { c + nu * r } else { r + nu * c };
        let Some(p) = find_concave_point(cols, rows, |c, r| slice[flat(c, r)] != 0, opts) else {
            return slice.to_vec();
        };
        let mut out = slice.to_vec();
        for c in 0..cols {
            let posterior_side = if opts.posterior_high { c >= p.column } else { c <= p.column };
            if !posterior_side {
                continue;
            }
            for r in 0..rows {
                let below = if opts.inferior_low { r < p.row } else { r > p.row };
                if below {
                    out[flat(c, r)] = 0;
                }
            }
        }
        out
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LateralTrimOptions {
    /// The chest lies at the high-index end of the left–right axis.
    pub chest_high: bool,
}

/// Slice index of the largest forward increase in `areas`, scanning from
/// index 0; ties go to the first. `None` if no slice increases.
pub fn lateral_boundary(areas: &[usize]) -> Option<usize> {
    let mut best: Option<(i64, usize)> = None;
    for k in 0..areas.len().saturating_sub(1) {
        let d = areas[k + 1] as i64 - areas[k] as i64;
        if best.is_none_or(|(bd, _)| d > bd) {
            best = Some((d, k));
        }
    }
    best.filter(|&(d, _)| d > 0).map(|(_, k)| k)
}

/// Clears the slices between the chest side and the boundary slice.
pub fn trim_lateral_boundary(mask: &Mask, opts: &LateralTrimOptions) -> Mask {
    let geom = *mask.geometry();
    let lateral = geom.axis_order.axis_of(Anatomical::LeftRight);
    let n = geom.dims[lateral.index()];
    let area = |k: usize| geom.slice_indices(lateral, k).iter().filter(|&&i| mask.data()[i] != 0).count();
    // Walk away from the chest.
    let walk: Vec<usize> = if opts.chest_high { (0..n).rev().collect() } else { (0..n).collect() };
    let areas: Vec<usize> = walk.iter().map(|&k| area(k)).collect();
    let Some(b) = lateral_boundary(&areas) else {
        return mask.clone();
    };
    let cleared: Vec<usize> = walk[..=b].to_vec();
    clear_slices(mask, lateral, &cleared)
}

fn clear_slices(mask: &Mask, axis: Axis, slices: &[usize]) -> Mask {
    let geom = *mask.geometry();
    let mut data = mask.data().to_vec();
    for &k in slices {
        for i in geom.slice_indices(axis, k) {
            data[i] = 0;
        }
    }
    Mask::from_raw(geom, data)
}
