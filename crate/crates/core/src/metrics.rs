//! Overlap metrics and multi-rater consensus.
//!
//! STAPLE here is the binary EM with a spatially uniform prior equal to the
//! mean rater foreground fraction. Voxels are grouped by their rater vote
//! pattern, so every sum in the E- and M-steps runs over a fixed, sorted set
//! of patterns and results are bit-stable regardless of threading.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Mask;

const PQ_FLOOR: f64 = 1e-6;
const PQ_CEIL: f64 = 1.0 - 1e-6;

fn check_dims(a: &Mask, b: &Mask) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimMismatch(a.dims(), b.dims()));
    }
    Ok(())
}

/// Dice similarity coefficient; two empty masks score 1.
pub fn dsc(a: &Mask, b: &Mask) -> Result<f64> {
    check_dims(a, b)?;
    let (mut inter, mut na, mut nb) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        inter += (x & y) as u64;
        na += x as u64;
        nb += y as u64;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (na + nb) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StapleOptions {
    /// Initial sensitivity and specificity for every rater.
    pub init_pq: f64,
    /// Stop when no parameter moves by this much or more.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StapleOptions {
    fn default() -> Self {
        StapleOptions {
            init_pq: 0.99,
            tol: 1e-6,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StapleResult {
    /// `posterior >= 0.5`.
    pub consensus: Mask,
    /// Per-voxel probability of foreground.
    pub posterior: Vec<f64>,
    pub sensitivity: Vec<f64>,
    pub specificity: Vec<f64>,
    /// Foreground prior.
    pub prior: f64,
    /// Number of M-steps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Observed-data log-likelihood before each M-step and after the last.
    pub log_likelihood: Vec<f64>,
}

/// Pairwise (cascade) summation for stable, order-fixed reductions.
fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

struct Patterns {
    /// Rater votes of each distinct pattern, sorted.
    votes: Vec<Vec<u8>>,
    counts: Vec<f64>,
    /// Pattern index of every voxel.
    of_voxel: Vec<u32>,
}

fn group_patterns(masks: &[Mask]) -> Patterns {
    let n = masks[0].data().len();
    let mut seen: HashMap<Vec<u8>, u32> = HashMap::new();
    let mut first: Vec<Vec<u8>> = Vec::new();
    let mut provisional = Vec::with_capacity(n);
    let mut key = vec![0u8; masks.len()];
    for i in 0..n {
        for (j, m) in masks.iter().enumerate() {
            key[j] = m.data()[i];
        }
        let id = match seen.get(&key) {
            Some(&id) => id,
            None => {
                let id = first.len() as u32;
                seen.insert(key.clone(), id);
                first.push(key.clone());
                id
            }
        };
        provisional.push(id);
    }
    // Sort patterns so the reduction order depends only on their content.
    let mut order: Vec<usize> = (0..first.len()).collect();
    order.sort_by(|&a, &b| first[a].cmp(&first[b]));
    let mut rank = vec![0u32; first.len()];
    for (r, &o) in order.iter().enumerate() {
        rank[o] = r as u32;
    }
    let mut counts = vec![0f64; first.len()];
    let of_voxel: Vec<u32> = provisional
        .into_iter()
        .map(|p| {
            let r = rank[p as usize];
            counts[r as usize] += 1.0;
            r
        })
        .collect();
    let votes = order.into_iter().map(|o| first[o].clone()).collect();
    Patterns { votes, counts, of_voxel }
}

/// Multi-rater consensus by expectation–maximization.
pub fn staple(masks: &[Mask], opts: &StapleOptions) -> Result<StapleResult> {
    if masks.len() < 2 {
        return Err(Error::Parameter(format!(
            "consensus needs at least 2 raters, got {}",
            masks.len()
        )));
    }
    for m in &masks[1..] {
        check_dims(&masks[0], m)?;
    }
    if !(opts.init_pq > 0.0 && opts.init_pq < 1.0 && opts.tol > 0.0) {
        return Err(Error::Parameter("init_pq must lie in (0,1) and tol be positive".into()));
    }
    let geom = *masks[0].geometry();
    let r = masks.len();
    let nvox = geom.len() as f64;
    let fg: u64 = masks.iter().map(|m| m.count() as u64).sum();
    let prior = fg as f64 / (nvox * r as f64);
    let init = opts.init_pq.clamp(PQ_FLOOR, PQ_CEIL);

    if prior == 0.0 || prior == 1.0 {
        let w = prior;
        return Ok(StapleResult {
            consensus: Mask::from_geometry(geom, vec![w as u8; geom.len()])?,
            posterior: vec![w; geom.len()],
            sensitivity: vec![init; r],
            specificity: vec![init; r],
            prior,
            iterations: 0,
            converged: true,
            log_likelihood: Vec::new(),
        });
    }

    let pats = group_patterns(masks);
    let np = pats.votes.len();
    let (lg1, lg0) = (prior.ln(), (1.0 - prior).ln());
    let mut p = vec![init; r];
    let mut q = vec![init; r];
    let mut w = vec![0f64; np];
    let mut ll_hist = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    let e_step = |p: &[f64], q: &[f64], w: &mut [f64]| -> f64 {
        let mut ll_terms = Vec::with_capacity(np);
        for (k, v) in pats.votes.iter().enumerate() {
            let (mut la, mut lb) = (lg1, lg0);
            for j in 0..r {
                if v[j] == 1 {
                    la += p[j].ln();
                    lb += (1.0 - q[j]).ln();
                } else {
                    la += (1.0 - p[j]).ln();
                    lb += q[j].ln();
                }
            }
            let lz = log_add_exp(la, lb);
            w[k] = (la - lz).exp();
            ll_terms.push(pats.counts[k] * lz);
        }
        pairwise_sum(&ll_terms)
    };

    ll_hist.push(e_step(&p, &q, &mut w));
    while iterations < opts.max_iter {
        let fg_mass: Vec<f64> = (0..np).map(|k| pats.counts[k] * w[k]).collect();
        let bg_mass: Vec<f64> = (0..np).map(|k| pats.counts[k] * (1.0 - w[k])).collect();
        let (sw, sb) = (pairwise_sum(&fg_mass), pairwise_sum(&bg_mass));
        let mut delta = 0f64;
        for j in 0..r {
            let hit: Vec<f64> = (0..np).map(|k| if pats.votes[k][j] == 1 { fg_mass[k] } else { 0.0 }).collect();
            let rej: Vec<f64> = (0..np).map(|k| if pats.votes[k][j] == 0 { bg_mass[k] } else { 0.0 }).collect();
            let pj = if sw > 0.0 { pairwise_sum(&hit) / sw } else { p[j] };
            let qj = if sb > 0.0 { pairwise_sum(&rej) / sb } else { q[j] };
            let (pj, qj) = (pj.clamp(PQ_FLOOR, PQ_CEIL), qj.clamp(PQ_FLOOR, PQ_CEIL));
            delta = delta.max((pj - p[j]).abs()).max((qj - q[j]).abs());
            p[j] = pj;
            q[j] = qj;
        }
        iterations += 1;
        ll_hist.push(e_step(&p, &q, &mut w));
        if delta < opts.tol {
            converged = true;
            break;
        }
    }

    let posterior: Vec<f64> = pats.of_voxel.iter().map(|&k| w[k as usize]).collect();
    let consensus = Mask::from_geometry(geom, posterior.iter().map(|&x| (x >= 0.5) as u8).collect())?;
    Ok(StapleResult {
        consensus,
        posterior,
        sensitivity: p,
        specificity: q,
        prior,
        iterations,
        converged,
        log_likelihood: ll_hist,
    })
}

/// For each observer, the mean DSC against every other observer.
pub fn interobserver_report(masks_by_observer: &BTreeMap<String, Mask>) -> Result<BTreeMap<String, f64>> {
    if masks_by_observer.len() < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 observers, got {}",
            masks_by_observer.len()
        )));
    }
    let entries: Vec<(&String, &Mask)> = masks_by_observer.iter().collect();
    let mut out = BTreeMap::new();
    for (i, (name, a)) in entries.iter().enumerate() {
        let mut total = 0.0;
        for (j, (_, b)) in entries.iter().enumerate() {
            if i != j {
                total += dsc(a, b)?;
            }
        }
        out.insert((*name).clone(), total / (entries.len() - 1) as f64);
    }
    Ok(out)
}

/// One row of a multi-scan inter-observer table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterobserverRow {
    pub scan: String,
    pub observer: String,
    pub mean_dsc: f64,
}

pub fn interobserver_table(scans: &BTreeMap<String, BTreeMap<String, Mask>>) -> Result<Vec<InterobserverRow>> {
    let mut rows = Vec::new();
    for (scan, obs) in scans {
        for (observer, mean_dsc) in interobserver_report(obs)? {
            rows.push(InterobserverRow {
                scan: scan.clone(),
                observer,
                mean_dsc,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn mask(dims: [usize; 3], data: Vec<u8>) -> Mask {
        Mask::new(dims, [1.0; 3], data).unwrap()
    }

    #[test]
    fn dsc_basics() {
        let a = mask([4, 1, 1], vec![1, 1, 0, 0]);
        let b = mask([4, 1, 1], vec![0, 1, 1, 0]);
        let c = mask([4, 1, 1], vec![0, 0, 1, 1]);
        let e = mask([4, 1, 1], vec![0; 4]);
        assert_eq!(dsc(&a, &a).unwrap(), 1.0);
        assert_eq!(dsc(&a, &c).unwrap(), 0.0);
        assert_eq!(dsc(&a, &b).unwrap(), 0.5);
        assert_eq!(dsc(&e, &e).unwrap(), 1.0);
        assert_eq!(dsc(&a, &e).unwrap(), 0.0);
        let other = mask([2, 2, 1], vec![0; 4]);
        assert!(matches!(dsc(&a, &other), Err(Error::DimMismatch(..))));
    }

    proptest! {
        #[test]
        fn dsc_symmetric_and_bounded(bits in proptest::collection::vec((0u8..2, 0u8..2), 27)) {
            let a = mask([3, 3, 3], bits.iter().map(|b| b.0).collect());
            let b = mask([3, 3, 3], bits.iter().map(|b| b.1).collect());
            let d = dsc(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, dsc(&b, &a).unwrap());
        }
    }

    #[test]
    fn unanimous_raters() {
        let m = mask([3, 3, 1], vec![0, 1, 1, 0, 1, 0, 0, 0, 1]);
        let res = staple(&[m.clone(), m.clone(), m.clone()], &StapleOptions::default()).unwrap();
        assert_eq!(res.consensus, m);
        assert!(res.converged);
        for j in 0..3 {
            assert_eq!(res.sensitivity[j], PQ_CEIL);
            assert_eq!(res.specificity[j], PQ_CEIL);
        }
    }

    #[test]
    fn majority_region_included() {
        // voxel 0: 3 votes, voxel 1: 2 votes, voxel 2: 1 vote, voxel 3: none
        let a = mask([8, 1, 1], vec![1, 1, 1, 0, 1, 0, 0, 0]);
        let b = mask([8, 1, 1], vec![1, 1, 0, 0, 1, 0, 0, 0]);
        let c = mask([8, 1, 1], vec![1, 0, 0, 0, 0, 1, 0, 0]);
        let res = staple(&[a, b, c], &StapleOptions::default()).unwrap();
        assert!(res.consensus.get(0, 0, 0));
        assert!(res.consensus.get(1, 0, 0));
        assert!(res.consensus.get(4, 0, 0));
        assert!(!res.consensus.get(3, 0, 0));
        assert!(res.posterior.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn empty_raters_guarded() {
        let e = mask([2, 2, 2], vec![0; 8]);
        let res = staple(&[e.clone(), e.clone()], &StapleOptions::default()).unwrap();
        assert_eq!(res.consensus.count(), 0);
        assert!(res.converged);
        assert_eq!(res.prior, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        let a = mask([2, 1, 1], vec![1, 0]);
        assert!(staple(std::slice::from_ref(&a), &StapleOptions::default()).is_err());
        let b = mask([1, 2, 1], vec![1, 0]);
        assert!(staple(&[a, b], &StapleOptions::default()).is_err());
    }

    #[test]
    fn permutation_equivariant() {
        let mut rng = seeded(4);
        let dims = [10, 10, 10];
        let truth: Vec<u8> = (0..1000).map(|i| ((i % 10) < 5) as u8).collect();
        let raters: Vec<Mask> = (0..3)
            .map(|_| {
                mask(
                    dims,
                    truth.iter().map(|&t| if rng.random::<f64>() < 0.1 { 1 - t } else { t }).collect(),
                )
            })
            .collect();
        let fwd = staple(&raters, &StapleOptions::default()).unwrap();
        let rev_in: Vec<Mask> = raters.iter().rev().cloned().collect();
        let rev = staple(&rev_in, &StapleOptions::default()).unwrap();
        assert_eq!(fwd.consensus, rev.consensus);
        for j in 0..3 {
            assert!((fwd.sensitivity[j] - rev.sensitivity[2 - j]).abs() < 1e-12);
            assert!((fwd.specificity[j] - rev.specificity[2 - j]).abs() < 1e-12);
        }
        for w in fwd.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs());
        }
    }

    #[test]
    fn interobserver_entries() {
        let a = mask([4, 1, 1], vec![1, 1, 0, 0]);
        let b = mask([4, 1, 1], vec![0, 1, 1, 0]);
        let c = mask([4, 1, 1], vec![0, 1, 1, 1]);
        let two: BTreeMap<String, Mask> = [("a".to_string(), a.clone()), ("b".to_string(), b.clone())].into();
        let r = interobserver_report(&two).unwrap();
        assert_eq!(r["a"], 0.5);
        assert_eq!(r["b"], 0.5);
        let three: BTreeMap<String, Mask> =
            [("a".to_string(), a), ("b".to_string(), b), ("c".to_string(), c)].into();
        let r = interobserver_report(&three).unwrap();
        // ab = 0.5, ac = 2/5, bc = 4/5
        assert!((r["a"] - (0.5 + 0.4) / 2.0).abs() < 1e-15);
        assert!((r["b"] - (0.5 + 0.8) / 2.0).abs() < 1e-15);
        assert!((r["c"] - (0.4 + 0.8) / 2.0).abs() < 1e-15);
    }
}
