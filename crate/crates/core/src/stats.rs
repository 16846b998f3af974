//! Friedman omnibus test and Dunn's post-hoc comparisons.
//!
//! Scores are ranked within each block (scan), ties receiving midranks.
//!
//! * Friedman: `χ² = 12/(n·k·(k+1))·Σ R_j² − 3n(k+1)`, divided by
//!   `1 − Σ(t³ − t)/(n·k·(k² − 1))` when ties occur; `df = k − 1`.
//! * Dunn: `z_ij = (R̄_i − R̄_j) / √(k(k+1)/(6n))`, two-sided normal p-value,
//!   multiplied by `k(k−1)/2` and capped at 1.
//!
//! Both tails reduce to the regularized upper incomplete gamma function:
//! chi-square `sf(x; df) = Q(df/2, x/2)` and `P(|Z| ≥ z) = Q(1/2, z²/2)`.
//! `Q` uses the power series of `P = 1 − Q` for `x < a + 1` and a Lentz
//! continued fraction otherwise, with a Lanczos `ln Γ`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Blocks (rows) by treatments (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = labels.len();
        if k < 2 || rows.len() < 2 {
            return Err(Error::Stats(format!(
                "need at least 2 blocks and 2 treatments, got {}×{k}",
                rows.len()
            )));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(Error::Stats(format!("block {i} has {} scores, expected {k}", r.len())));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::Stats(format!("block {i} has non-finite scores")));
            }
        }
        Ok(ScoreMatrix { labels, rows })
    }

    /// Unlabelled matrix; treatments are named `t0, t1, ...`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        ScoreMatrix::new((0..k).map(|j| format!("t{j}")).collect(), rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }
}

/// Midranks (1-based) of `x`, plus the tie term `Σ(t³ − t)`.
pub fn midranks(x: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0f64; x.len()];
    let mut ties = 0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i..j share the mean of ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = r;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Column rank sums and the total tie term.
fn rank_sums(m: &ScoreMatrix) -> (Vec<f64>, f64) {
    let mut sums = vec![0f64; m.k()];
    let mut ties = 0f64;
    for row in &m.rows {
        let (r, t) = midranks(row);
        for (s, v) in sums.iter_mut().zip(r) {
            *s += v;
        }
        ties += t;
    }
    (sums, ties)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanOptions {
    pub tie_correction: bool,
}

impl Default for FriedmanOptions {
    fn default() -> Self {
        FriedmanOptions { tie_correction: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the approximation in its accurate range
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized upper incomplete gamma `Q(a, x)` for `a > 0`, `x ≥ 0`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let log_prefix = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = a;
        for _ in 0..10_000 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        (1.0 - sum * log_prefix.exp()).max(0.0)
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        (log_prefix.exp() * h).min(1.0)
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    gamma_q(df as f64 / 2.0, x / 2.0)
}

/// Two-sided standard-normal tail `P(|Z| ≥ |z|)`.
pub fn normal_two_sided(z: f64) -> f64 {
    gamma_q(0.5, z * z / 2.0)
}

pub fn friedman(m: &ScoreMatrix, opts: &FriedmanOptions) -> FriedmanResult {
    let (n, k) = (m.n() as f64, m.k() as f64);
    let df = m.k() - 1;
    let (sums, ties) = rank_sums(m);
    let ss: f64 = sums.iter().map(|r| r * r).sum();
    let mut chi2 = 12.0 / (n * k * (k + 1.0)) * ss - 3.0 * n * (k + 1.0);
    if opts.tie_correction && ties > 0.0 {
        let c = 1.0 - ties / (n * k * (k * k - 1.0));
        if c <= 0.0 {
            return FriedmanResult { chi2: 0.0, df, p: 1.0 };
        }
        chi2 /= c;
    }
    let chi2 = chi2.max(0.0);
    FriedmanResult {
        chi2,
        df,
        p: chi2_sf(chi2, df),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DunnResult {
    pub mean_ranks: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub p_raw: Vec<Vec<f64>>,
    /// Bonferroni-adjusted, symmetric, unit diagonal.
    pub p_adjusted: Vec<Vec<f64>>,
}

pub fn dunn_bonferroni(m: &ScoreMatrix) -> DunnResult {
    let (n, k) = (m.n() as f64, m.k());
    let (sums, _) = rank_sums(m);
    let mean_ranks: Vec<f64> = sums.iter().map(|s| s / n).collect();
    let se = (k as f64 * (k as f64 + 1.0) / (6.0 * n)).sqrt();
    let comparisons = (k * (k - 1) / 2) as f64;
    let mut z = vec![vec![0f64; k]; k];
    let mut p_raw = vec![vec![1f64; k]; k];
    let mut p_adjusted = vec![vec![1f64; k]; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            z[i][j] = (mean_ranks[i] - mean_ranks[j]) / se;
            p_raw[i][j] = normal_two_sided(z[i][j]);
            p_adjusted[i][j] = (p_raw[i][j] * comparisons).min(1.0);
        }
    }
    DunnResult {
        mean_ranks,
        z,
        p_raw,
        p_adjusted,
    }
}

/// One score of one method on one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub scan: String,
    pub method: String,
    pub dsc: f64,
}

/// Assembles complete blocks from long-format scores. Methods and scans keep
/// their order of first appearance.
pub fn score_matrix_from_rows(rows: &[ScoreRow]) -> Result<ScoreMatrix> {
    let mut methods: Vec<String> = Vec::new();
    let mut scans: Vec<String> = Vec::new();
    let mut cells: HashMap<(&str, &str), f64> = HashMap::new();
    for r in rows {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
        if !scans.contains(&r.scan) {
            scans.push(r.scan.clone());
        }
        if cells.insert((&r.scan, &r.method), r.dsc).is_some() {
            return Err(Error::Stats(format!("duplicate score for scan {:?}, method {:?}", r.scan, r.method)));
        }
    }
    let mut matrix = Vec::with_capacity(scans.len());
    for s in &scans {
        let mut row = Vec::with_capacity(methods.len());
        for m in &methods {
            match cells.get(&(s.as_str(), m.as_str())) {
                Some(&v) => row.push(v),
                None => return Err(Error::Stats(format!("scan {s:?} has no score for method {m:?}"))),
            }
        }
        matrix.push(row);
    }
    ScoreMatrix::new(methods, matrix)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTable {
    pub p_adjusted: Vec<Vec<f64>>,
    pub significant: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub methods: Vec<String>,
    pub blocks: usize,
    pub alpha: f64,
    pub friedman: FriedmanResult,
    /// Present only when the omnibus test is significant.
    pub pairwise: Option<PairwiseTable>,
}

pub const SIGNIFICANCE: f64 = 0.05;

/// Friedman test, then Dunn–Bonferroni when the omnibus p is below 0.05.
pub fn compare_methods(m: &ScoreMatrix, opts: &FriedmanOptions) -> ComparisonReport {
    let f = friedman(m, opts);
    let pairwise = (f.p < SIGNIFICANCE).then(|| {
        let d = dunn_bonferroni(m);
        let significant = d
            .p_adjusted
            .iter()
            .map(|row| row.iter().map(|&p| p < SIGNIFICANCE).collect())
            .collect();
        PairwiseTable {
            p_adjusted: d.p_adjusted,
            significant,
        }
    });
    ComparisonReport {
        methods: m.labels.clone(),
        blocks: m.n(),
        alpha: SIGNIFICANCE,
        friedman: f,
        pairwise,
    }
}
