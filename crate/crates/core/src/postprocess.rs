//! Cleanup of predicted masks.
//!
//! Per axial slice, the 4-connected component with area above a threshold
//! whose centroid lies furthest toward the declared left is kept (ties go to
//! the larger area, then the earlier label); if no component is large
//! enough the largest one is kept. A 3D pass then keeps the largest
//! 6-connected component.

use serde::{Deserialize, Serialize};

use crate::labeling::{label_2d, label_3d, map_slices, Labels};
use crate::volume::{Anatomical, Geometry, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectOptions {
    /// Components must have strictly more pixels than this to be preferred.
    pub min_area_px: usize,
    /// "Left" is the low-index end of the left–right axis.
    pub left_low: bool,
}

impl Default for SelectOptions {
    fn default() -> Self {
        SelectOptions {
            min_area_px: 100,
            left_low: true,
        }
    }
}

/// Per-component area and centroid along one in-slice axis.
fn component_stats(labels: &Labels, nu: usize, along_u: bool) -> Vec<(usize, f64)> {
    let mut sums = vec![0f64; labels.count()];
    for (i, &l) in labels.labels.iter().enumerate() {
        if l != 0 {
            let c = if along_u { i % nu } else { i / nu };
            sums[l as usize - 1] += c as f64;
        }
    }
    labels
        .sizes
        .iter()
        .zip(sums)
        .map(|(&a, s)| (a, s / a as f64))
        .collect()
}

/// Label chosen in one slice by the left-most-large-component rule.
pub fn choose_component(labels: &Labels, nu: usize, lr_is_u: bool, opts: &SelectOptions) -> Option<u32> {
    let stats = component_stats(labels, nu, lr_is_u);
    let mut best: Option<(usize, f64, usize)> = None;
    for (i, &(area, centroid)) in stats.iter().enumerate() {
        if area <= opts.min_area_px {
            continue;
        }
        let key = if opts.left_low { centroid } else { -centroid };
        let better = match best {
            None => true,
            Some((_, bk, ba)) => key < bk || (key == bk && area > ba),
        };
        if better {
            best = Some((i, key, area));
        }
    }
    match best {
        Some((i, _, _)) => Some(i as u32 + 1),
        None => labels.largest(),
    }
}

/// Keeps one component per axial slice.
pub fn select_breast_component_2d(mask: &Mask, opts: &SelectOptions) -> Mask {
    let order = mask.geometry().axis_order;
    let axial = order.axis_of(Anatomical::InferiorSuperior);
    let lr = order.axis_of(Anatomical::LeftRight);
    let lr_is_u = Geometry::slice_axes(axial).0 == lr;
    map_slices(mask, axial, |slice, nu, nv, _| {
        let labels = label_2d(slice, nu, nv);
        match choose_component(&labels, nu, lr_is_u, opts) {
            Some(l) => labels.select(l),
            None => slice.to_vec(),
        }
    })
}

/// Keeps the largest 6-connected component; ties go to the earlier label.
pub fn largest_component_3d(mask: &Mask) -> Mask {
    let labels = label_3d(mask);
    match labels.largest() {
        Some(l) => Mask::from_raw(*mask.geometry(), labels.select(l)),
        None => mask.clone(),
    }
}

/// Slice selection followed by 3D largest-component retention.
pub fn postprocess_qin(mask: &Mask, opts: &SelectOptions) -> Mask {
    largest_component_3d(&select_breast_component_2d(mask, opts))
}
